#include <doctest.h>

#include <map>
#include <string>

#include "fixture_fig4.hpp"
#include "matnet/ffsp.hpp"
#include "matnet/lp.hpp"

using namespace matnet;
using namespace matnet::ffsp;

TEST_CASE("generated processing times stay in [2,9]") {
  for (int i = 0; i < 100; ++i) {
    Rng rng = Rng::stream(21, {static_cast<std::uint64_t>(i)});
    auto inst = generate_ffsp(3, 4, 20, rng);
    for (const auto& stage : inst.proc)
      for (int v : stage) {
        CHECK(v >= 2);
        CHECK(v <= 9);
      }
  }
}

TEST_CASE("generated entries average 5.5 over a million draws") {
  double sum = 0;
  std::int64_t n = 0;
  Rng rng(22);
  while (n < 1000000) {
    auto inst = generate_ffsp(3, 4, 20, rng);
    sum += static_cast<double>(inst.total_work());
    n += 3 * 4 * 20;
  }
  CHECK(sum / static_cast<double>(n) == doctest::Approx(5.5).epsilon(0.05 / 5.5));
}

TEST_CASE("default configuration has three 4x20 matrices") {
  Rng rng(23);
  auto inst = generate_ffsp(3, 4, 20, rng);
  CHECK(inst.proc.size() == 3);
  for (const auto& stage : inst.proc) CHECK(stage.size() == 4 * 20);
}

TEST_CASE("single-machine single-job rollout gives the processing time") {
  Rng rng(24);
  auto inst = generate_ffsp(1, 1, 1, rng);
  // Uniform over {job, skip}: even if skip is sampled, the job lands at
  // a later t and the schedule stays valid.
  std::vector<StagePolicy> policies(1, [](int, int, const std::vector<char>& mask,
                                          bool) -> std::vector<double> {
    std::vector<double> p(mask.size(), 0.0);
    int allowed = 0;
    for (char m : mask) allowed += m != 0;
    for (std::size_t c = 0; c < mask.size(); ++c)
      if (mask[c]) p[c] = 1.0 / allowed;
    return p;
  });
  Rng roll(25);
  auto out = gantt_rollout(inst, policies, {0}, Mode::Sample, roll);
  CHECK(validate_schedule(inst, out.schedule) == std::nullopt);
  const int proc = inst.time(0, 0, 0);
  const int start = out.schedule.start(0, 0);
  CHECK(out.schedule.makespan == start + proc);
  CHECK(out.actions.size() >= 1);
}

TEST_CASE("a heavily skewed skip policy still terminates with a valid schedule") {
  Rng rng(26);
  auto inst = generate_ffsp(2, 2, 3, rng);
  // 95% of the mass on skip whenever allowed.
  std::vector<StagePolicy> policies(
      2, [](int, int, const std::vector<char>& mask, bool) -> std::vector<double> {
        std::vector<double> p(mask.size(), 0.0);
        const std::size_t skip = mask.size() - 1;
        int jobs_allowed = 0;
        for (std::size_t c = 0; c < skip; ++c) jobs_allowed += mask[c] != 0;
        const double skip_mass = mask[skip] ? 0.95 : 0.0;
        for (std::size_t c = 0; c < skip; ++c)
          if (mask[c]) p[c] = (1.0 - skip_mass) / jobs_allowed;
        if (mask[skip]) p[skip] = skip_mass;
        return p;
      });
  Rng roll(27);
  auto out = gantt_rollout(inst, policies, {0, 1}, Mode::Sample, roll);
  CHECK(validate_schedule(inst, out.schedule) == std::nullopt);
}

TEST_CASE("validator reports machine overlap as F10") {
  Rng rng(28);
  auto inst = generate_ffsp(1, 2, 2, rng);
  FfspSchedule s;
  s.stages = 1;
  s.machines = 2;
  s.jobs = 2;
  s.machine_of = {0, 0};
  s.start_of = {0, 0};  // both jobs at t=0 on machine 0
  s.makespan = std::max(inst.time(0, 0, 0), inst.time(0, 0, 1));
  auto v = validate_schedule(inst, s);
  REQUIRE(v.has_value());
  CHECK(v->rfind("F10", 0) == 0);
}

TEST_CASE("validator reports stage-order violations as F9") {
  Rng rng(29);
  auto inst = generate_ffsp(2, 1, 1, rng);
  FfspSchedule s;
  s.stages = 2;
  s.machines = 1;
  s.jobs = 1;
  s.machine_of = {0, 0};
  s.start_of = {0, 0};  // stage 1 starts before stage 0 completes
  s.makespan = inst.time(1, 0, 0);
  auto v = validate_schedule(inst, s);
  REQUIRE(v.has_value());
  CHECK(v->rfind("F9", 0) == 0);
}

TEST_CASE("validator reports a wrong makespan as F1") {
  Rng rng(30);
  auto inst = generate_ffsp(1, 1, 1, rng);
  FfspSchedule s;
  s.stages = 1;
  s.machines = 1;
  s.jobs = 1;
  s.machine_of = {0};
  s.start_of = {0};
  s.makespan = 999;
  auto v = validate_schedule(inst, s);
  REQUIRE(v.has_value());
  CHECK(v->rfind("F1", 0) == 0);
}

TEST_CASE("sjf on a single job with one machine per stage stacks its times") {
  Rng rng(31);
  auto inst = generate_ffsp(3, 1, 1, rng);
  const FfspSchedule s = sjf(inst);
  CHECK(s.makespan == inst.time(0, 0, 0) + inst.time(1, 0, 0) + inst.time(2, 0, 0));
  CHECK(validate_schedule(inst, s) == std::nullopt);
}

TEST_CASE("sjf and random means sit near their reference values") {
  const int count = 300;
  double sj = 0, rd = 0;
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::stream(32, {static_cast<std::uint64_t>(i)});
    auto inst = generate_ffsp(3, 4, 20, rng);
    sj += sjf(inst).makespan;
    Rng r2 = Rng::stream(33, {static_cast<std::uint64_t>(i)});
    rd += random_schedule(inst, r2).makespan;
  }
  CHECK(sj / count == doctest::Approx(31.3).epsilon(0.05));
  CHECK(rd / count == doctest::Approx(47.8).epsilon(0.05));
}

TEST_CASE("schedulers always emit valid schedules") {
  for (int i = 0; i < 50; ++i) {
    Rng rng = Rng::stream(34, {static_cast<std::uint64_t>(i)});
    auto inst = generate_ffsp(3, 4, 12, rng);
    CHECK(validate_schedule(inst, sjf(inst)) == std::nullopt);
    Rng r2 = Rng::stream(35, {static_cast<std::uint64_t>(i)});
    CHECK(validate_schedule(inst, random_schedule(inst, r2)) == std::nullopt);
  }
}

TEST_CASE("chromosome decoding follows machine and priority parts") {
  Rng rng(36);
  auto inst = generate_ffsp(2, 3, 1, rng);
  Chromosome c;
  c.genes = {2.5, 1.25};  // stage 0 -> machine 2, stage 1 -> machine 1
  const FfspSchedule s = decode_chromosome(inst, c);
  CHECK(s.machine(0, 0) == 2);
  CHECK(s.machine(1, 0) == 1);
  CHECK(s.start(0, 0) == 0);
  CHECK(s.start(1, 0) == s.completion(inst, 0, 0));
  CHECK(validate_schedule(inst, s) == std::nullopt);
}

TEST_CASE("lower fractional part runs first on a shared machine") {
  FfspInstance inst;
  inst.stages = 1;
  inst.machines = 1;
  inst.jobs = 2;
  inst.proc = {{4, 6}};
  Chromosome c;
  c.genes = {0.9, 0.1};  // job 1 has priority
  const FfspSchedule s = decode_chromosome(inst, c);
  CHECK(s.start(0, 1) == 0);
  CHECK(s.start(0, 0) == 6);
  CHECK(s.makespan == 10);
}

TEST_CASE("random chromosomes decode to valid schedules") {
  for (int i = 0; i < 30; ++i) {
    Rng rng = Rng::stream(37, {static_cast<std::uint64_t>(i)});
    auto inst = generate_ffsp(3, 4, 20, rng);
    Chromosome c;
    c.genes.resize(3 * 20);
    for (auto& g : c.genes) g = rng.uniform_range(0, 4);
    CHECK(validate_schedule(inst, decode_chromosome(inst, c)) == std::nullopt);
  }
}

TEST_CASE("the sjf chromosome replays sjf exactly") {
  for (int i = 0; i < 30; ++i) {
    Rng rng = Rng::stream(38, {static_cast<std::uint64_t>(i)});
    auto inst = generate_ffsp(3, 4, 20, rng);
    const FfspSchedule ref = sjf(inst);
    const FfspSchedule replay = decode_chromosome(inst, sjf_chromosome(inst));
    CHECK(replay.makespan == ref.makespan);
    CHECK(replay.machine_of == ref.machine_of);
    CHECK(replay.start_of == ref.start_of);
  }
}

TEST_CASE("ga with zero iterations returns the sjf seed result") {
  Rng rng(39);
  auto inst = generate_ffsp(3, 4, 20, rng);
  GaOptions opt;
  opt.iterations = 0;
  Rng ga_rng(40);
  const FfspSchedule out = ga_solve(inst, opt, ga_rng);
  CHECK(out.makespan == sjf(inst).makespan);
}

TEST_CASE("ga never loses to its sjf seed and improves monotonically") {
  Rng rng(41);
  auto inst = generate_ffsp(3, 4, 15, rng);
  const int sjf_ms = sjf(inst).makespan;
  int prev = 1 << 30;
  for (int iters : {0, 5, 20}) {
    GaOptions opt;
    opt.iterations = iters;
    Rng ga_rng(42);  // same stream -> same initial population
    const FfspSchedule out = ga_solve(inst, opt, ga_rng);
    CHECK(validate_schedule(inst, out) == std::nullopt);
    CHECK(out.makespan <= sjf_ms);
    CHECK(out.makespan <= prev);
    prev = out.makespan;
  }
}

TEST_CASE("pso with zero iterations returns the sjf seed result") {
  Rng rng(43);
  auto inst = generate_ffsp(3, 4, 20, rng);
  PsoOptions opt;
  opt.iterations = 0;
  Rng pso_rng(44);
  CHECK(pso_solve(inst, opt, pso_rng).makespan == sjf(inst).makespan);
}

TEST_CASE("pso never loses to its sjf seed and improves monotonically") {
  Rng rng(45);
  auto inst = generate_ffsp(3, 4, 15, rng);
  const int sjf_ms = sjf(inst).makespan;
  int prev = 1 << 30;
  for (int iters : {0, 5, 20}) {
    PsoOptions opt;
    opt.iterations = iters;
    Rng pso_rng(46);
    const FfspSchedule out = pso_solve(inst, opt, pso_rng);
    CHECK(validate_schedule(inst, out) == std::nullopt);
    CHECK(out.makespan <= sjf_ms);
    CHECK(out.makespan <= prev);
    prev = out.makespan;
  }
}

TEST_CASE("ffsp export exposes the documented variable counts") {
  Rng rng(47);
  auto inst = generate_ffsp(3, 4, 2, rng);
  lp::Model m = lp::Model::parse(export_ffsp_lp(inst));
  CHECK(m.count_vars_with_prefix("X_") == 24);
  CHECK(m.count_vars_with_prefix("Y_") == 12);
  CHECK(m.count_vars_with_prefix("C_") == 6);
  CHECK(m.count_vars_with_prefix("Cmax") == 1);
}

TEST_CASE("an sjf schedule satisfies every exported ffsp constraint") {
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng = Rng::stream(48, {static_cast<std::uint64_t>(trial)});
    auto inst = generate_ffsp(3, 4, 6, rng);
    lp::Model m = lp::Model::parse(export_ffsp_lp(inst));
    const FfspSchedule sched = sjf(inst);
    std::map<std::string, double> assign;
    for (auto& [k, v] : schedule_assignment(inst, sched)) assign[k] = v;
    auto violation = m.check_feasible(assign);
    if (violation) FAIL(*violation);
    CHECK(m.objective_value(assign) == sched.makespan);
  }
}

TEST_CASE("the makespan-25 fixture validates and replays through the rollout") {
  auto inst = fixture::fig4_instance();
  auto sched = fixture::fig4_schedule();
  CHECK(validate_schedule(inst, sched) == std::nullopt);
  CHECK(sched.makespan == 25);

  const std::vector<int> order{0, 1, 2, 3};
  const std::vector<int> actions = schedule_to_actions(inst, sched, order);
  Rng rng(49);
  auto rollout = gantt_rollout(inst, replay_policies(inst, actions), order, Mode::Sample, rng);
  CHECK(rollout.schedule.makespan == 25);
  CHECK(rollout.schedule.machine_of == sched.machine_of);
  CHECK(rollout.schedule.start_of == sched.start_of);
  CHECK(rollout.logprob == 0.0);
}

TEST_CASE("instance and schedule files round-trip") {
  Rng rng(50);
  auto inst = generate_ffsp(3, 4, 8, rng);
  auto inst_back = read_instance(write_instance(inst));
  CHECK(inst_back.proc == inst.proc);

  const FfspSchedule s = sjf(inst);
  const FfspSchedule back = read_schedule(write_schedule(s));
  CHECK(back.machine_of == s.machine_of);
  CHECK(back.start_of == s.start_of);
  CHECK(back.makespan == s.makespan);
}

TEST_CASE("validator reports missing assignments as F2") {
  Rng rng(51);
  auto inst = generate_ffsp(1, 2, 2, rng);
  FfspSchedule s;
  s.stages = 1;
  s.machines = 2;
  s.jobs = 2;
  s.machine_of = {0, -1};  // job 1 never assigned
  s.start_of = {0, -1};
  s.makespan = inst.time(0, 0, 0);
  auto v = validate_schedule(inst, s);
  REQUIRE(v.has_value());
  CHECK(v->rfind("F2", 0) == 0);
}
