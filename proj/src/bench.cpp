#include "matnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "matnet/trainer.hpp"

namespace matnet::bench {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename Inst, typename Fn>
MethodRow run_method(const std::string& name, const std::vector<Inst>& set, Fn&& solve_one) {
  MethodRow row;
  row.method = name;
  row.objectives.assign(set.size(), 0.0);
  const double t0 = now_seconds();
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(set.size()); ++i)
    row.objectives[static_cast<std::size_t>(i)] =
        solve_one(set[static_cast<std::size_t>(i)], static_cast<std::uint64_t>(i));
  row.wall_seconds = now_seconds() - t0;
  return row;
}

void pick_best_reference(BenchReport& report) {
  if (report.rows.size() < 2) return;
  const MethodRow* best = &report.rows[0];
  for (const auto& r : report.rows)
    if (r.mean() < best->mean()) best = &r;
  report.reference = best->method;
}

}  // namespace

double MethodRow::mean() const {
  double s = 0;
  for (double v : objectives) s += v;
  return objectives.empty() ? 0 : s / static_cast<double>(objectives.size());
}

BenchReport run_atsp_bench(const std::vector<atsp::AtspInstance>& set, const BenchOptions& opt) {
  if (set.empty()) throw std::invalid_argument("bench: empty instance set");
  BenchReport report;
  report.problem = "atsp";
  report.seed = opt.seed;
  report.count = static_cast<int>(set.size());

  model::AtspModel net;
  bool net_loaded = false;
  for (const std::string& method : opt.methods) {
    if (method == "nn") {
      report.rows.push_back(run_method(method, set, [](const atsp::AtspInstance& inst,
                                                       std::uint64_t) {
        return atsp::nearest_neighbor(inst).length;
      }));
    } else if (method == "ni") {
      report.rows.push_back(run_method(method, set, [](const atsp::AtspInstance& inst,
                                                       std::uint64_t) {
        return atsp::nearest_insertion(inst).length;
      }));
    } else if (method == "fi") {
      report.rows.push_back(run_method(method, set, [](const atsp::AtspInstance& inst,
                                                       std::uint64_t) {
        return atsp::furthest_insertion(inst).length;
      }));
    } else if (method == "matnet") {
      if (!net_loaded) {
        if (opt.checkpoint_path.empty())
          throw std::invalid_argument("bench: the matnet method needs --checkpoint");
        net = trainer::atsp_model_from(trainer::load_checkpoint(opt.checkpoint_path));
        net_loaded = true;
      }
      report.rows.push_back(run_method(method, set, [&](const atsp::AtspInstance& inst,
                                                        std::uint64_t idx) {
        infer::SolveOptions so;
        so.augmentation = opt.augmentation;
        so.seed = opt.seed + idx;
        return infer::solve_atsp(net, inst, so).best.length;
      }));
    } else {
      throw std::invalid_argument("bench: unknown atsp method '" + method + "'");
    }
  }

  if (set[0].n <= atsp::kHeldKarpMaxN) {
    report.rows.push_back(run_method("held_karp", set, [](const atsp::AtspInstance& inst,
                                                          std::uint64_t) {
      return atsp::held_karp(inst);
    }));
    report.reference = "held_karp";
  } else {
    pick_best_reference(report);
  }
  return report;
}

BenchReport run_ffsp_bench(const std::vector<ffsp::FfspInstance>& set, const BenchOptions& opt) {
  if (set.empty()) throw std::invalid_argument("bench: empty instance set");
  BenchReport report;
  report.problem = "ffsp";
  report.seed = opt.seed;
  report.count = static_cast<int>(set.size());

  model::FfspModel net;
  bool net_loaded = false;
  for (const std::string& method : opt.methods) {
    if (method == "sjf") {
      report.rows.push_back(run_method(method, set, [](const ffsp::FfspInstance& inst,
                                                       std::uint64_t) {
        return double(ffsp::sjf(inst).makespan);
      }));
    } else if (method == "random") {
      report.rows.push_back(run_method(method, set, [&](const ffsp::FfspInstance& inst,
                                                        std::uint64_t idx) {
        Rng rng = Rng::stream(opt.seed, {0xBE7C, idx});
        return double(ffsp::random_schedule(inst, rng).makespan);
      }));
    } else if (method == "ga") {
      report.rows.push_back(run_method(method, set, [&](const ffsp::FfspInstance& inst,
                                                        std::uint64_t idx) {
        ffsp::GaOptions ga;
        ga.iterations = opt.ga_iterations;
        Rng rng = Rng::stream(opt.seed, {0x6A, idx});
        return double(ffsp::ga_solve(inst, ga, rng).makespan);
      }));
    } else if (method == "pso") {
      report.rows.push_back(run_method(method, set, [&](const ffsp::FfspInstance& inst,
                                                        std::uint64_t idx) {
        ffsp::PsoOptions pso;
        pso.iterations = opt.pso_iterations;
        Rng rng = Rng::stream(opt.seed, {0x950, idx});
        return double(ffsp::pso_solve(inst, pso, rng).makespan);
      }));
    } else if (method == "matnet") {
      if (!net_loaded) {
        if (opt.checkpoint_path.empty())
          throw std::invalid_argument("bench: the matnet method needs --checkpoint");
        net = trainer::ffsp_model_from(trainer::load_checkpoint(opt.checkpoint_path));
        net_loaded = true;
      }
      report.rows.push_back(run_method(method, set, [&](const ffsp::FfspInstance& inst,
                                                        std::uint64_t idx) {
        infer::SolveOptions so;
        so.augmentation = opt.augmentation;
        so.seed = opt.seed + idx;
        return double(infer::solve_ffsp(net, inst, so).best.makespan);
      }));
    } else {
      throw std::invalid_argument("bench: unknown ffsp method '" + method + "'");
    }
  }
  pick_best_reference(report);
  return report;
}

std::vector<SummaryRow> summarize(const BenchReport& report) {
  double ref_mean = 0;
  bool have_ref = false;
  for (const auto& r : report.rows)
    if (!report.reference.empty() && r.method == report.reference) {
      ref_mean = r.mean();
      have_ref = true;
    }
  if (!report.reference.empty() && !have_ref)
    std::cerr << "bench: warning: reference method '" << report.reference
              << "' missing from the report; gap column left blank\n";

  std::vector<SummaryRow> rows;
  for (const auto& r : report.rows) {
    SummaryRow s;
    s.method = r.method;
    s.count = report.count;
    s.seed = report.seed;
    s.mean = r.mean();
    if (have_ref) {
      if (report.problem == "atsp")
        s.gap = ref_mean != 0 ? (s.mean - ref_mean) / ref_mean * 100.0 : 0.0;
      else
        s.gap = s.mean - ref_mean;  // absolute, per the scheduling convention
    }
    s.wall_seconds = r.wall_seconds;
    rows.push_back(std::move(s));
  }
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return a.method != b.method ? a.method < b.method : a.seed < b.seed;
  });
  return rows;
}

std::string render_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "method,count,seed,mean,gap,wall_seconds\n";
  for (const auto& s : summarize(report)) {
    os << s.method << ',' << s.count << ',' << s.seed << ',' << format_g(s.mean) << ',';
    if (s.gap) os << format_g(*s.gap);
    os << ',' << format_g(s.wall_seconds) << "\n";
  }
  return os.str();
}

std::vector<SummaryRow> parse_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line != "method,count,seed,mean,gap,wall_seconds")
    throw std::invalid_argument("bench csv: bad header");
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    while (cells.size() < 6) cells.push_back("");
    SummaryRow s;
    s.method = cells[0];
    s.count = std::stoi(cells[1]);
    s.seed = static_cast<std::uint64_t>(std::stoull(cells[2]));
    s.mean = std::stod(cells[3]);
    if (!cells[4].empty()) s.gap = std::stod(cells[4]);
    s.wall_seconds = std::stod(cells[5]);
    rows.push_back(std::move(s));
  }
  return rows;
}

std::string render_text(const BenchReport& report) {
  const auto rows = summarize(report);
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %14s %12s %10s %8s %10s\n", "method", "mean",
                report.problem == "atsp" ? "gap%" : "gap", "time_s", "count", "seed");
  os << buf;
  for (const auto& s : rows) {
    std::string gap = s.gap ? format_g(*s.gap) : "-";
    std::snprintf(buf, sizeof(buf), "%-12s %14.6g %12s %10.3f %8d %10llu\n", s.method.c_str(),
                  s.mean, gap.c_str(), s.wall_seconds, s.count,
                  static_cast<unsigned long long>(s.seed));
    os << buf;
  }
  if (!report.reference.empty()) os << "gap reference: " << report.reference << "\n";
  return os.str();
}

std::string render_raw(const BenchReport& report) {
  std::ostringstream os;
  os << "instance,method,objective\n";
  for (const auto& r : report.rows)
    for (std::size_t i = 0; i < r.objectives.size(); ++i)
      os << i << ',' << r.method << ',' << format_g(r.objectives[i]) << "\n";
  return os.str();
}

}  // namespace matnet::bench
