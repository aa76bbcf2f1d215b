#pragma once

// Reference implementations written independently of the library code.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace edusim::oracle {

struct ScanItem {
  std::string id;
  std::vector<double> v;  // unit norm
  std::uint64_t seq;
};

struct ScanHit {
  std::string id;
  double score;
};

// Exhaustive cosine scan: filter, order by (score desc, seq asc), cut.
inline std::vector<ScanHit> brute_force(const std::vector<ScanItem>& items, const std::vector<double>& q,
                                        double threshold, std::size_t top_k) {
  struct Row {
    double score;
    std::uint64_t seq;
    const ScanItem* item;
  };
  std::vector<Row> rows;
  for (const auto& it : items) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += it.v[i] * q[i];
    if (s >= threshold) rows.push_back({s, it.seq, &it});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.seq < b.seq;
  });
  std::vector<ScanHit> out;
  for (std::size_t i = 0; i < rows.size() && i < top_k; ++i) out.push_back({rows[i].item->id, rows[i].score});
  return out;
}

// Token F1 following the documented normalization, coded as a character
// scanner rather than a replacement table.
inline std::vector<std::string> norm_tokens(const std::string& in) {
  static const std::vector<std::pair<std::string, std::string>> subs = {
      {"\xE2\x88\x92", "-"}, {"\xE2\x80\x93", "-"}, {"\\left", " "},  {"\\right", " "},
      {"\\displaystyle", " "}, {"\\dfrac", "\\frac"}, {"\\tfrac", "\\frac"}, {"\\boxed", ""},
      {"\\text", ""},        {"\\mathrm", ""},      {"\\(", " "},      {"\\)", " "},
      {"\\[", " "},          {"\\]", " "},          {"\\,", " "},      {"\\;", " "},
      {"\\:", " "},          {"\\!", ""},           {"$", " "}};
  std::string s = in;
  for (const auto& [from, to] : subs) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      if (s.compare(i, from.size(), from) == 0) {
        out += to;
        i += from.size();
      } else {
        out += s[i++];
      }
    }
    s = out;
  }
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const std::string punct = ".,;:!?\"'`()[]{}=$";
  auto is_p = [&](char c) { return punct.find(c) != std::string::npos; };
  std::vector<std::string> toks;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && is_p(cur[b])) ++b;
    while (e > b && is_p(cur[e - 1])) --e;
    if (e > b) toks.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return toks;
}

inline double f1(const std::string& pred, const std::string& ref) {
  const auto p = norm_tokens(pred), r = norm_tokens(ref);
  if (p.empty() || r.empty()) return 0.0;
  std::unordered_map<std::string, int> pc, rc;
  for (const auto& t : p) ++pc[t];
  for (const auto& t : r) ++rc[t];
  int common = 0;
  for (const auto& [t, n] : pc) {
    auto it = rc.find(t);
    if (it != rc.end()) common += std::min(n, it->second);
  }
  if (common == 0) return 0.0;
  const double precision = double(common) / double(p.size());
  const double recall = double(common) / double(r.size());
  return 2 * precision * recall / (precision + recall);
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

// Brute-force fractional ranks: rank = 1 + #strictly better + (#ties) / 2.
inline std::vector<double> ranks(const std::vector<double>& scores) {
  std::vector<double> out;
  for (double s : scores) {
    int better = 0, tied = 0;
    for (double o : scores) {
      if (o > s) ++better;
      if (o == s) ++tied;
    }
    out.push_back(1.0 + better + (tied - 1) / 2.0);
  }
  return out;
}

}  // namespace edusim::oracle
