// Writes a synthetic JSONL corpus (see gld/synthetic.hpp) for demos and tests.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gld/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic labeled corpus", "gld_synth"};
  std::string shape = "benchmark";
  std::string out_path;
  std::uint64_t seed = 0;
  app.add_option("--shape", shape, "benchmark | small")->check(CLI::IsMember({"benchmark", "small"}));
  app.add_option("--out", out_path, "Output JSONL")->required();
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);

  const auto spec = shape == "benchmark" ? gld::benchmark_spec(seed) : gld::small_generalization_spec(seed);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write '" << out_path << "'\n";
    return 3;
  }
  out << gld::to_jsonl(gld::make_synthetic_corpus(spec));
  return out ? 0 : 3;
}
