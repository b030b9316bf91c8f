#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "matnet/atsp.hpp"
#include "matnet/ffsp.hpp"
#include "matnet/inference.hpp"

namespace matnet::bench {

struct MethodRow {
  std::string method;
  std::vector<double> objectives;  // per instance, in set order
  double wall_seconds = 0;

  double mean() const;
};

struct BenchReport {
  std::string problem;     // atsp | ffsp
  std::uint64_t seed = 0;
  int count = 0;
  std::string reference;   // method gaps are computed against ("" = none)
  std::vector<MethodRow> rows;
};

struct BenchOptions {
  std::vector<std::string> methods;
  std::string checkpoint_path;  // for the matnet method
  int augmentation = 1;
  int ga_iterations = 1000;
  int pso_iterations = 1000;
  std::uint64_t seed = 1;
};

// ATSP methods: nn, ni, fi, matnet. A held-karp oracle row is added as
// the gap reference whenever the instances are small enough; otherwise
// the best row serves as reference (when at least two rows exist).
BenchReport run_atsp_bench(const std::vector<atsp::AtspInstance>& set, const BenchOptions& opt);
// FFSP methods: sjf, random, ga, pso, matnet. Gaps are absolute against
// the best row.
BenchReport run_ffsp_bench(const std::vector<ffsp::FfspInstance>& set, const BenchOptions& opt);

// One summary line per method; what the CSV/text renderings show.
struct SummaryRow {
  std::string method;
  int count = 0;
  std::uint64_t seed = 0;
  double mean = 0;
  std::optional<double> gap;  // relative % (atsp) or absolute (ffsp)
  double wall_seconds = 0;
};

std::vector<SummaryRow> summarize(const BenchReport& report);
std::string render_csv(const BenchReport& report);
std::vector<SummaryRow> parse_csv(const std::string& csv);
std::string render_text(const BenchReport& report);
// Per-instance objectives: "instance,method,objective" lines. Every
// number in the rendered tables recomputes from this file.
std::string render_raw(const BenchReport& report);

}  // namespace matnet::bench
