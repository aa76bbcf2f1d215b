#include "edusim/synthetic.hpp"

#include "edusim/error.hpp"
#include "edusim/hashing.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

namespace edusim {

namespace {

struct Problem {
  std::string statement;
  std::string work;
  std::string latex;
  std::string plain;
};

std::string str(long v) { return std::to_string(v); }

long range(Rng& rng, long lo, long hi) {
  return lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

Problem integer(std::string statement, std::string work, long v) {
  return {std::move(statement), std::move(work), str(v), str(v)};
}

Problem fraction(std::string statement, std::string work, long num, long den) {
  const long g = std::gcd(num, den);
  num /= g;
  den /= g;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  if (den == 1) return integer(std::move(statement), std::move(work), num);
  const std::string sign = num < 0 ? "-" : "";
  const long a = num < 0 ? -num : num;
  return {std::move(statement), std::move(work),
          sign + "\\frac{" + str(a) + "}{" + str(den) + "}", sign + str(a) + "/" + str(den)};
}

long choose(long n, long k) {
  long r = 1;
  for (long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Problem algebra(Rng& rng) {
  switch (rng.below(4)) {
    case 0: {
      const long a = range(rng, 2, 12), x = range(rng, -20, 20), b = range(rng, -30, 30);
      const long c = a * x + b;
      return integer("In this algebra exercise, solve the linear equation " + str(a) + "x + (" + str(b) +
                         ") = " + str(c) + " for the variable x.",
                     "Subtract " + str(b) + " from both sides and divide by " + str(a) + ".", x);
    }
    case 1: {
      const long r1 = range(rng, 1, 15), r2 = range(rng, 1, 15);
      return integer("The quadratic equation x^2 - " + str(r1 + r2) + "x + " + str(r1 * r2) +
                         " = 0 has two roots. Using factoring, find the larger root of this polynomial.",
                     "The polynomial factors as (x - " + str(r1) + ")(x - " + str(r2) + ").",
                     std::max(r1, r2));
    }
    case 2: {
      const long a = range(rng, 1, 9), b = range(rng, -9, 9), v = range(rng, -6, 6);
      return integer("Evaluate the algebraic expression " + str(a) + "y^2 + (" + str(b) +
                         ")y when the variable y equals " + str(v) + ".",
                     "Substitute y = " + str(v) + " into the expression.", a * v * v + b * v);
    }
    default: {
      const long x1 = range(rng, -10, 10), y1 = range(rng, -10, 10);
      const long x2 = x1 + range(rng, 1, 9), y2 = range(rng, -10, 10);
      return fraction("Find the slope of the linear equation whose graph passes through the points (" +
                          str(x1) + ", " + str(y1) + ") and (" + str(x2) + ", " + str(y2) + ").",
                      "The slope is the change in y over the change in x.", y2 - y1, x2 - x1);
    }
  }
}

Problem number_theory(Rng& rng) {
  switch (rng.below(4)) {
    case 0: {
      const long n = range(rng, 100, 9999), m = range(rng, 3, 29);
      return integer("What is the remainder when " + str(n) + " is divided by " + str(m) +
                         "? Use modulo arithmetic from number theory.",
                     "Reduce " + str(n) + " modulo " + str(m) + ".", n % m);
    }
    case 1: {
      const long g = range(rng, 2, 30), a = g * range(rng, 2, 40), b = g * range(rng, 2, 40);
      return integer("Find the greatest common divisor (gcd) of the integers " + str(a) + " and " + str(b) + ".",
                     "Apply the Euclidean algorithm.", std::gcd(a, b));
    }
    case 2: {
      const long n = range(rng, 12, 999);
      long d = 0;
      for (long i = 1; i <= n; ++i) d += (n % i == 0);
      return integer("How many positive divisors does the integer " + str(n) + " have in number theory?",
                     "List the divisors in pairs.", d);
    }
    default: {
      const long a = range(rng, 2, 60), b = range(rng, 2, 60);
      return integer("Find the lcm of the integers " + str(a) + " and " + str(b) +
                         ", the smallest common multiple of both.",
                     "Divide the product by the greatest common divisor.", std::lcm(a, b));
    }
  }
}

Problem counting(Rng& rng) {
  switch (rng.below(4)) {
    case 0: {
      const long n = range(rng, 3, 15), k = range(rng, 2, std::min(n, 6L));
      long f = 1;
      for (long i = n - k + 1; i <= n; ++i) f *= i;
      return integer("In how many ways can " + str(k) + " of " + str(n) +
                         " distinct books be placed on a shelf? Each arrangement is a permutation.",
                     "Multiply the choices for each position.", f);
    }
    case 1: {
      const long n = range(rng, 5, 40), k = range(rng, 2, 5);
      return integer("A committee of " + str(k) + " people is chosen from " + str(n) +
                         " candidates. In how many ways can the committee be formed using combinations?",
                     "Order does not matter, so take the binomial coefficient.", choose(n, k));
    }
    case 2: {
      const long n = range(rng, 2, 16), k = range(rng, 0, n);
      return fraction("A fair coin is tossed " + str(n) + " times. What is the probability of getting exactly " +
                          str(k) + " heads? Count the favorable outcomes.",
                      "Divide the favorable sequences by the total number of sequences.", choose(n, k), 1L << n);
    }
    default: {
      static const long kSides[] = {4, 6, 8, 10, 12, 20};
      const long m = kSides[rng.below(6)];
      const long s = range(rng, 2, 2 * m);
      const long fav = m - (s > m + 1 ? s - m - 1 : m + 1 - s);
      return fraction("Two fair " + str(m) + "-sided dice are rolled. What is the probability that the total of "
                          "the outcomes equals " + str(s) + "?",
                      "List the favorable pairs among the " + str(m * m) + " equally likely pairs.", fav, m * m);
    }
  }
}

Problem geometry(Rng& rng) {
  switch (rng.below(4)) {
    case 0: {
      const long l = range(rng, 2, 40), w = range(rng, 2, 40);
      return integer("A rectangle has length " + str(l) + " and width " + str(w) +
                         ". Find its area and report the area in square units.",
                     "The area of a rectangle is length times width.", l * w);
    }
    case 1: {
      static const long kTriples[][3] = {{3, 4, 5}, {5, 12, 13}, {8, 15, 17}, {7, 24, 25}, {20, 21, 29}};
      const auto& t = kTriples[rng.below(5)];
      const long s = range(rng, 1, 40);
      return integer("A right triangle has legs " + str(s * t[0]) + " and " + str(s * t[1]) +
                         ". What is the length of the hypotenuse of the triangle?",
                     "Apply the Pythagorean theorem.", s * t[2]);
    }
    case 2: {
      const long r = range(rng, 2, 120);
      const std::string v = str(r * r);
      return {"A circle has radius " + str(r) + ". What is the area of the circle in terms of pi?",
              "The area of a circle is pi times the radius squared.", v + "\\pi", v + "pi"};
    }
    default: {
      const long a = range(rng, 20, 90), b = range(rng, 20, 160 - a);
      return integer("Two angles of a triangle measure " + str(a) + " degrees and " + str(b) +
                         " degrees. How many degrees are in the third angle?",
                     "The interior angles of a triangle sum to 180 degrees.", 180 - a - b);
    }
  }
}

Problem ambiguous(Rng& rng) {
  const long a = range(rng, 2, 30), b = range(rng, 2, 30);
  if (rng.below(2) == 0) {
    return integer("Compute " + str(a) + " plus " + str(b) + ".", "Add the two numbers.", a + b);
  }
  return integer("Find the area of a rectangle with sides " + str(a) + " and " + str(b) + ".",
                 "Multiply the sides.", a * b);
}

RawRecord to_record(std::string id, const Problem& p) {
  RawRecord r;
  r.id = std::move(id);
  r.statement = p.statement;
  r.solution = p.work + " Therefore the answer is $\\boxed{" + p.latex + "}$.";
  r.answer_latex = p.latex;
  r.answer_plain = p.plain;
  return r;
}

}  // namespace

std::vector<RawRecord> make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  std::vector<RawRecord> out;
  std::set<std::string> statements;
  char id[64];
  for (Topic t : kAllTopics) {
    Rng rng(derive_seed(spec.seed, {"synthetic", std::string(topic_name(t))}));
    for (std::size_t i = 0; i < spec.per_topic; ++i) {
      // Statements are unique so Dev and Test never share a problem text.
      Problem p;
      for (int attempt = 0;; ++attempt) {
        if (attempt == 10000) throw ValidationError("synthetic corpus: too many problems requested per topic");
        switch (t) {
          case Topic::Algebra: p = algebra(rng); break;
          case Topic::NumberTheory: p = number_theory(rng); break;
          case Topic::CountingProbability: p = counting(rng); break;
          case Topic::Geometry: p = geometry(rng); break;
        }
        if (statements.insert(p.statement).second) break;
      }
      std::snprintf(id, sizeof(id), "syn-%s-%04zu", std::string(topic_name(t)).c_str(), i);
      out.push_back(to_record(id, p));
    }
  }
  Rng rng(derive_seed(spec.seed, {"synthetic", "ambiguous"}));
  for (std::size_t i = 0; i < spec.ambiguous; ++i) {
    std::snprintf(id, sizeof(id), "syn-ambiguous-%04zu", i);
    Problem p = ambiguous(rng);
    while (!statements.insert(p.statement).second) p = ambiguous(rng);
    out.push_back(to_record(id, p));
  }
  return out;
}

void save_raw_records(const std::vector<RawRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["problem"] = r.statement;
    j["solution"] = r.solution;
    j["answer_latex"] = r.answer_latex;
    j["answer_plain"] = r.answer_plain;
    out << j.dump() << "\n";
  }
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace edusim
