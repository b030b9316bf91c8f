#include "matnet/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "matnet/bench.hpp"
#include "matnet/config.hpp"
#include "matnet/gantt_svg.hpp"
#include "matnet/inference.hpp"
#include "matnet/lp.hpp"
#include "matnet/trainer.hpp"

namespace matnet::cli {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MATNET_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return static_cast<std::uint64_t>(v);
    throw std::invalid_argument("config: field 'MATNET_SEED' is not an integer: " +
                                std::string(env));
  }
  return 1;
}

void apply_threads(int threads) {
#if defined(_OPENMP)
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::vector<std::string> list_instance_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .txt instances under " + dir);
  return files;
}

std::string first_token(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  is >> tok;
  return tok;
}

std::vector<atsp::AtspInstance> load_atsp_set(const std::string& dir, int limit) {
  std::vector<atsp::AtspInstance> set;
  for (const auto& f : list_instance_files(dir)) {
    set.push_back(atsp::read_instance(slurp(f)));
    if (limit > 0 && static_cast<int>(set.size()) >= limit) break;
  }
  return set;
}

std::vector<ffsp::FfspInstance> load_ffsp_set(const std::string& dir, int limit) {
  std::vector<ffsp::FfspInstance> set;
  for (const auto& f : list_instance_files(dir)) {
    set.push_back(ffsp::read_instance(slurp(f)));
    if (limit > 0 && static_cast<int>(set.size()) >= limit) break;
  }
  return set;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// --- subcommand bodies --------------------------------------------------

int cmd_generate(const std::string& problem, int n, int count, int stages, int machines,
                 bool euclidean, const std::string& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir);
  char name[64];
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, {0x6E4, static_cast<std::uint64_t>(i)});
    if (problem == "atsp") {
      const atsp::AtspInstance inst =
          euclidean ? atsp::generate_euclidean(n, rng) : atsp::generate_tmat(n, rng);
      std::snprintf(name, sizeof(name), "atsp_%05d.txt", i);
      atsp::save_instance(inst, (fs::path(out_dir) / name).string());
    } else {
      const ffsp::FfspInstance inst = ffsp::generate_ffsp(stages, machines, n, rng);
      std::snprintf(name, sizeof(name), "ffsp_%05d.txt", i);
      ffsp::save_instance(inst, (fs::path(out_dir) / name).string());
    }
  }
  std::cout << "wrote " << count << " " << problem << " instances to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& preset_name, const std::string& config_path, int epochs_override,
              std::uint64_t seed, bool seed_given, const std::string& out_path,
              std::string metrics_path) {
  trainer::TrainConfig cfg;
  if (!preset_name.empty()) cfg = trainer::preset(preset_name);
  if (!config_path.empty()) {
    trainer::TrainConfig file_cfg = trainer::TrainConfig::from_text(slurp(config_path));
    if (!preset_name.empty()) {
      // preset provides defaults; the file overrides what it names
      const KeyValueConfig kv = KeyValueConfig::parse(slurp(config_path));
      trainer::TrainConfig merged = trainer::TrainConfig::from_text(cfg.to_text() + kv.serialize());
      cfg = merged;
    } else {
      cfg = file_cfg;
    }
  }
  if (epochs_override >= 0) cfg.epochs = epochs_override;
  if (seed_given) cfg.seed = seed;
  cfg.validate();
  if (metrics_path.empty()) metrics_path = out_path + ".metrics.csv";

  const trainer::Checkpoint ckpt = trainer::train(cfg, metrics_path);
  trainer::save_checkpoint(out_path, ckpt);
  std::cout << "trained " << cfg.problem << " for " << cfg.epochs << " epochs; checkpoint "
            << out_path << ", metrics " << metrics_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& set_dir, int limit, int aug,
             const std::string& mode_str, bool single_start, int sampling_only,
             std::uint64_t seed, const std::string& out_path) {
  const trainer::Checkpoint ckpt = trainer::load_checkpoint(ckpt_path);
  infer::SolveOptions opts;
  opts.mode = atsp::mode_from_string(mode_str);
  opts.pomo = !single_start;
  opts.augmentation = aug;
  opts.sampling_count = sampling_only > 0 ? sampling_only : 1;
  opts.seed = seed;

  std::ostringstream raw;
  raw << "instance,objective\n";
  double sum = 0, oracle_sum = 0;
  bool have_oracle = false;
  int count = 0;

  if (ckpt.config.problem == "atsp") {
    const model::AtspModel m = trainer::atsp_model_from(ckpt);
    const auto set = load_atsp_set(set_dir, limit);
    for (const auto& inst : set) {
      infer::SolveOptions per = opts;
      per.seed = seed + static_cast<std::uint64_t>(count);
      const auto sol = sampling_only > 0
                           ? infer::sample_only_solve(m, inst, sampling_only, per.seed)
                           : infer::solve_atsp(m, inst, per);
      raw << count << ',' << sol.best.length << "\n";
      sum += sol.best.length;
      if (inst.n <= atsp::kHeldKarpMaxN) {
        oracle_sum += atsp::held_karp(inst);
        have_oracle = true;
      }
      ++count;
    }
  } else {
    const model::FfspModel m = trainer::ffsp_model_from(ckpt);
    const auto set = load_ffsp_set(set_dir, limit);
    for (const auto& inst : set) {
      infer::SolveOptions per = opts;
      per.seed = seed + static_cast<std::uint64_t>(count);
      const auto sol = infer::solve_ffsp(m, inst, per);
      raw << count << ',' << sol.best.makespan << "\n";
      sum += sol.best.makespan;
      ++count;
    }
  }
  if (!out_path.empty()) spit(out_path, raw.str());
  std::cout.precision(10);
  std::cout << "instances: " << count << "\nmean objective: " << sum / count << "\n";
  if (have_oracle)
    std::cout << "mean oracle: " << oracle_sum / count << "\nmean gap: "
              << (sum - oracle_sum) / oracle_sum * 100 << "%\n";
  return 0;
}

int cmd_bench(const std::string& problem, const std::string& set_dir, int limit,
              const std::string& methods_csv, const std::string& ckpt_path, int aug, int ga_iters,
              int pso_iters, std::uint64_t seed, const std::string& out_prefix) {
  bench::BenchOptions opt;
  opt.methods = split_csv(methods_csv);
  if (opt.methods.empty()) throw std::invalid_argument("config: field 'methods' is empty");
  opt.checkpoint_path = ckpt_path;
  opt.augmentation = aug;
  opt.ga_iterations = ga_iters;
  opt.pso_iterations = pso_iters;
  opt.seed = seed;

  bench::BenchReport report;
  if (problem == "atsp")
    report = bench::run_atsp_bench(load_atsp_set(set_dir, limit), opt);
  else
    report = bench::run_ffsp_bench(load_ffsp_set(set_dir, limit), opt);

  const std::string text = bench::render_text(report);
  std::cout << text;
  if (!out_prefix.empty()) {
    spit(out_prefix + ".csv", bench::render_csv(report));
    spit(out_prefix + ".txt", text);
    spit(out_prefix + ".raw.csv", bench::render_raw(report));
  }
  return 0;
}

int cmd_solve(const std::string& ckpt_path, const std::string& inst_path, int aug,
              const std::string& mode_str, std::uint64_t seed, const std::string& out_path) {
  const trainer::Checkpoint ckpt = trainer::load_checkpoint(ckpt_path);
  infer::SolveOptions opts;
  opts.mode = atsp::mode_from_string(mode_str);
  opts.augmentation = aug;
  opts.seed = seed;

  const std::string text = slurp(inst_path);
  const std::string kind = first_token(text);
  const double t0 = now_seconds();
  if (kind == "ATSP") {
    if (ckpt.config.problem != "atsp")
      throw std::invalid_argument("checkpoint problem (" + ckpt.config.problem +
                                  ") does not match the ATSP instance");
    const model::AtspModel m = trainer::atsp_model_from(ckpt);
    const auto sol = infer::solve_atsp(m, atsp::read_instance(text), opts);
    const double wall = now_seconds() - t0;
    if (!out_path.empty()) spit(out_path, atsp::write_tour(sol.best));
    std::cout << "tour length: " << sol.best.length << "\nrollouts: "
              << sol.candidate_lengths.size() << "\nwall seconds: " << wall << "\n";
  } else if (kind == "FFSP") {
    if (ckpt.config.problem != "ffsp")
      throw std::invalid_argument("checkpoint problem (" + ckpt.config.problem +
                                  ") does not match the FFSP instance");
    const model::FfspModel m = trainer::ffsp_model_from(ckpt);
    const auto sol = infer::solve_ffsp(m, ffsp::read_instance(text), opts);
    const double wall = now_seconds() - t0;
    if (!out_path.empty()) spit(out_path, ffsp::write_schedule(sol.best));
    std::cout << "makespan: " << sol.best.makespan << "\nrollouts: "
              << sol.candidate_makespans.size() << "\nwall seconds: " << wall << "\n";
  } else {
    throw std::invalid_argument("unrecognized instance header '" + kind + "'");
  }
  return 0;
}

int cmd_export_mip(const std::string& inst_path, const std::string& out_path, double big_m) {
  const std::string text = slurp(inst_path);
  const std::string kind = first_token(text);
  std::string lp_text;
  if (kind == "ATSP")
    lp_text = atsp::export_mtz_lp(atsp::read_instance(text));
  else if (kind == "FFSP")
    lp_text = ffsp::export_ffsp_lp(ffsp::read_instance(text), big_m);
  else
    throw std::invalid_argument("unrecognized instance header '" + kind + "'");
  spit(out_path, lp_text);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_gantt(const std::string& inst_path, const std::string& sched_path,
              const std::string& out_path) {
  const ffsp::FfspInstance inst = ffsp::read_instance(slurp(inst_path));
  const ffsp::FfspSchedule sched = ffsp::read_schedule(slurp(sched_path));
  spit(out_path, ffsp::render_gantt_svg(inst, sched));
  std::cout << "wrote " << out_path << " (makespan " << sched.makespan << ")\n";
  return 0;
}

int cmd_oracle(const std::string& set_dir, int limit, const std::string& out_path) {
  const auto set = load_atsp_set(set_dir, limit);
  std::ostringstream os;
  os << "instance,optimal\n";
  double sum = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double opt = atsp::held_karp(set[i]);
    os << i << ',' << opt << "\n";
    sum += opt;
  }
  if (!out_path.empty()) spit(out_path, os.str());
  std::cout.precision(10);
  std::cout << "instances: " << set.size() << "\nmean optimal: " << sum / static_cast<double>(set.size())
            << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"matnet: matrix-encoding attention networks and classical baselines for ATSP/FFSP"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "master seed (env MATNET_SEED, then 1)")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
  };

  // generate
  std::string gen_problem, gen_out = "instances";
  int gen_n = 20, gen_count = 10, gen_stages = 3, gen_machines = 4;
  bool gen_euclidean = false;
  CLI::App* gen = app.add_subcommand("generate", "write random problem instances");
  gen->add_option("problem", gen_problem, "atsp or ffsp")
      ->required()
      ->check(CLI::IsMember({"atsp", "ffsp"}));
  gen->add_option("--n", gen_n, "cities (atsp) / jobs (ffsp)");
  gen->add_option("--count", gen_count, "instances to write");
  gen->add_option("--stages", gen_stages, "ffsp stages");
  gen->add_option("--machines", gen_machines, "ffsp machines per stage");
  gen->add_flag("--euclidean", gen_euclidean, "atsp: unit-square euclidean instead of tmat");
  gen->add_option("--out", gen_out, "output directory");
  add_common(gen);

  // train
  std::string train_preset, train_config, train_out = "model.ckpt", train_metrics;
  int train_epochs = -1;
  CLI::App* tr = app.add_subcommand("train", "train a model with POMO reinforcement learning");
  tr->add_option("--preset", train_preset, "named configuration")
      ->check(CLI::IsMember(trainer::preset_names()));
  tr->add_option("--config", train_config, "key=value config file ([train] section)");
  tr->add_option("--epochs", train_epochs, "override epoch count");
  tr->add_option("--out", train_out, "checkpoint path");
  tr->add_option("--metrics", train_metrics, "metrics csv path (default <out>.metrics.csv)");
  add_common(tr);

  // eval
  std::string eval_ckpt, eval_set, eval_mode = "sample", eval_out;
  int eval_aug = 1, eval_limit = 0, eval_sampling = 0;
  bool eval_single = false;
  CLI::App* ev = app.add_subcommand("eval", "solve an instance set from a checkpoint");
  ev->add_option("--checkpoint", eval_ckpt)->required();
  ev->add_option("--set", eval_set, "instance directory")->required();
  ev->add_option("--limit", eval_limit, "use only the first N instances");
  ev->add_option("--aug", eval_aug, "instance augmentations per instance");
  ev->add_option("--mode", eval_mode)->check(CLI::IsMember({"sample", "greedy"}));
  ev->add_flag("--single-start", eval_single, "one rollout per augmentation instead of all starts");
  ev->add_option("--sampling-only", eval_sampling,
                 "atsp: N sampled rollouts from one encoding (comparison arm)");
  ev->add_option("--out", eval_out, "per-instance objective csv");
  add_common(ev);

  // bench
  std::string bench_problem, bench_set, bench_methods, bench_ckpt, bench_out;
  int bench_aug = 1, bench_ga = 1000, bench_pso = 1000, bench_limit = 0;
  CLI::App* be = app.add_subcommand("bench", "compare methods over an instance set");
  be->add_option("--problem", bench_problem)->required()->check(CLI::IsMember({"atsp", "ffsp"}));
  be->add_option("--set", bench_set, "instance directory")->required();
  be->add_option("--methods", bench_methods, "comma list: nn,ni,fi,sjf,random,ga,pso,matnet")
      ->required();
  be->add_option("--limit", bench_limit, "use only the first N instances");
  be->add_option("--checkpoint", bench_ckpt, "checkpoint for the matnet method");
  be->add_option("--aug", bench_aug, "augmentations for the matnet method");
  be->add_option("--ga-iters", bench_ga);
  be->add_option("--pso-iters", bench_pso);
  be->add_option("--out", bench_out, "report prefix (.csv/.txt/.raw.csv)");
  add_common(be);

  // solve
  std::string solve_ckpt, solve_inst, solve_mode = "sample", solve_out;
  int solve_aug = 1;
  CLI::App* so = app.add_subcommand("solve", "solve one instance (use --aug 128/1280 for the long presets)");
  so->add_option("--checkpoint", solve_ckpt)->required();
  so->add_option("--instance", solve_inst)->required();
  so->add_option("--aug", solve_aug, "instance augmentations");
  so->add_option("--mode", solve_mode)->check(CLI::IsMember({"sample", "greedy"}));
  so->add_option("--out", solve_out, "solution file");
  add_common(so);

  // export-mip
  std::string mip_inst, mip_out = "model.lp";
  double mip_big_m = -1;
  CLI::App* mip = app.add_subcommand("export-mip", "write the MIP model as LP text");
  mip->add_option("--instance", mip_inst)->required();
  mip->add_option("--out", mip_out);
  mip->add_option("--big-m", mip_big_m, "override the FFSP big-M constant");
  add_common(mip);

  // gantt
  std::string gantt_inst, gantt_sched, gantt_out = "schedule.svg";
  CLI::App* ga = app.add_subcommand("gantt", "render a schedule as SVG");
  ga->add_option("--instance", gantt_inst)->required();
  ga->add_option("--schedule", gantt_sched)->required();
  ga->add_option("--out", gantt_out);
  add_common(ga);

  // oracle
  std::string oracle_set, oracle_out;
  int oracle_limit = 0;
  CLI::App* orc = app.add_subcommand("oracle", "exact optima over an ATSP set (n <= 16)");
  orc->add_option("--set", oracle_set)->required();
  orc->add_option("--limit", oracle_limit);
  orc->add_option("--out", oracle_out, "per-instance optimum csv");
  add_common(orc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (!seed_given) seed = default_seed();
    apply_threads(threads);

    if (gen->parsed())
      return cmd_generate(gen_problem, gen_n, gen_count, gen_stages, gen_machines, gen_euclidean,
                          gen_out, seed);
    if (tr->parsed())
      return cmd_train(train_preset, train_config, train_epochs, seed, seed_given, train_out,
                       train_metrics);
    if (ev->parsed())
      return cmd_eval(eval_ckpt, eval_set, eval_limit, eval_aug, eval_mode, eval_single,
                      eval_sampling, seed, eval_out);
    if (be->parsed())
      return cmd_bench(bench_problem, bench_set, bench_limit, bench_methods, bench_ckpt, bench_aug,
                       bench_ga, bench_pso, seed, bench_out);
    if (so->parsed()) return cmd_solve(solve_ckpt, solve_inst, solve_aug, solve_mode, seed, solve_out);
    if (mip->parsed()) return cmd_export_mip(mip_inst, mip_out, mip_big_m);
    if (ga->parsed()) return cmd_gantt(gantt_inst, gantt_sched, gantt_out);
    if (orc->parsed()) return cmd_oracle(oracle_set, oracle_limit, oracle_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace matnet::cli
