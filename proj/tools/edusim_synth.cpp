#include "edusim/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic problem corpus as JSON lines"};
  edusim::SyntheticCorpusSpec spec;
  std::string output;
  app.add_option("--output,-o", output, "output file")->required();
  app.add_option("--per-topic", spec.per_topic, "problems per topic");
  app.add_option("--ambiguous", spec.ambiguous, "low-confidence records to append");
  app.add_option("--seed", spec.seed, "generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    const auto records = edusim::make_synthetic_corpus(spec);
    edusim::save_raw_records(records, output);
    std::cout << "wrote " << records.size() << " records to " << output << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
