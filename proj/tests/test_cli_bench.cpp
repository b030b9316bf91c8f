#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fixture_fig4.hpp"
#include "matnet/bench.hpp"
#include "matnet/cli.hpp"
#include "matnet/config.hpp"
#include "matnet/lp.hpp"
#include "matnet/trainer.hpp"

using namespace matnet;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"matnet"};
  argv.insert(argv.end(), args.begin(), args.end());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("key=value config files parse sections and reject bad lines") {
  const std::string text = "# comment\n[train]\nproblem = atsp\nn = 12\n\nlr=0.001\n";
  KeyValueConfig kv = KeyValueConfig::parse(text);
  CHECK(kv.get("train.problem") == "atsp");
  CHECK(kv.get_int("train.n") == 12);
  CHECK(kv.get_double("train.lr") == 0.001);
  CHECK_THROWS(KeyValueConfig::parse("just a line\n"));
  CHECK_THROWS(kv.get("train.missing"));

  KeyValueConfig back = KeyValueConfig::parse(kv.serialize());
  CHECK(back.values() == kv.values());
}

TEST_CASE("bench summaries: single method has a blank gap") {
  bench::BenchReport report;
  report.problem = "ffsp";
  report.count = 2;
  report.seed = 5;
  report.rows.push_back({"sjf", {30, 32}, 0.1});
  auto rows = bench::summarize(report);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean == 31);
  CHECK(!rows[0].gap.has_value());
}

TEST_CASE("bench summaries: equal means give gap zero") {
  bench::BenchReport report;
  report.problem = "ffsp";
  report.count = 2;
  report.reference = "a";
  report.rows.push_back({"a", {30, 32}, 0.1});
  report.rows.push_back({"b", {31, 31}, 0.1});
  auto rows = bench::summarize(report);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    REQUIRE(r.gap.has_value());
    CHECK(*r.gap == 0);  // absolute gap convention for scheduling
  }
}

TEST_CASE("bench csv re-parses to the in-memory summary") {
  bench::BenchReport report;
  report.problem = "atsp";
  report.count = 3;
  report.seed = 11;
  report.reference = "fi";
  report.rows.push_back({"nn", {2.0e6, 2.1e6, 1.9e6}, 0.25});
  report.rows.push_back({"fi", {1.7e6, 1.75e6, 1.65e6}, 0.5});
  const auto direct = bench::summarize(report);
  const auto parsed = bench::parse_csv(bench::render_csv(report));
  REQUIRE(parsed.size() == direct.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].method == direct[i].method);
    CHECK(parsed[i].count == direct[i].count);
    CHECK(parsed[i].seed == direct[i].seed);
    CHECK(parsed[i].mean == doctest::Approx(direct[i].mean).epsilon(1e-9));
    REQUIRE(parsed[i].gap.has_value() == direct[i].gap.has_value());
    if (parsed[i].gap) CHECK(*parsed[i].gap == doctest::Approx(*direct[i].gap).epsilon(1e-9));
  }
}

TEST_CASE("bench raw objectives recompute the summary means") {
  TempDir dir("matnet_bench_raw");
  REQUIRE(run_cli({"generate", "atsp", "--n", "9", "--count", "6", "--seed", "3", "--out",
                   dir.str().c_str()}) == 0);
  std::vector<atsp::AtspInstance> set;
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "atsp_%05d.txt", i);
    set.push_back(atsp::read_instance(slurp(dir.file(name))));
  }
  bench::BenchOptions opt;
  opt.methods = {"nn", "fi"};
  bench::BenchReport report = bench::run_atsp_bench(set, opt);
  CHECK(report.reference == "held_karp");  // n=9 oracle fits

  // Recompute each method mean from the raw per-instance file.
  std::istringstream raw(bench::render_raw(report));
  std::string line;
  std::getline(raw, line);
  std::map<std::string, std::pair<double, int>> sums;
  while (std::getline(raw, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.rfind(',');
    const std::string method = line.substr(c1 + 1, c2 - c1 - 1);
    sums[method].first += std::stod(line.substr(c2 + 1));
    sums[method].second += 1;
  }
  for (const auto& row : bench::summarize(report)) {
    REQUIRE(sums.count(row.method) == 1);
    CHECK(sums[row.method].second == report.count);
    CHECK(row.mean == doctest::Approx(sums[row.method].first / report.count).epsilon(1e-12));
  }
  // And the oracle never exceeds the heuristics.
  for (const auto& row : bench::summarize(report))
    if (row.gap) CHECK(*row.gap >= 0);
}

TEST_CASE("cli: generate is deterministic and instance files load back") {
  TempDir a("matnet_gen_a"), b("matnet_gen_b");
  REQUIRE(run_cli({"generate", "atsp", "--n", "7", "--count", "3", "--seed", "7", "--out",
                   a.str().c_str()}) == 0);
  REQUIRE(run_cli({"generate", "atsp", "--n", "7", "--count", "3", "--seed", "7", "--out",
                   b.str().c_str()}) == 0);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "atsp_%05d.txt", i);
    CHECK(slurp(a.file(name)) == slurp(b.file(name)));
  }
}

TEST_CASE("cli: unknown flags exit with the usage code") {
  CHECK(run_cli({"generate", "atsp", "--does-not-exist", "5"}) == 2);
  CHECK(run_cli({"nonsense"}) == 2);
}

TEST_CASE("cli: bad configuration exits 1 naming the field") {
  TempDir dir("matnet_badcfg");
  const std::string cfg_path = dir.file("bad.cfg");
  {
    std::ofstream f(cfg_path);
    f << "[train]\nproblem = atsp\nn = 1\n";  // n must be >= 2
  }
  CHECK(run_cli({"train", "--config", cfg_path.c_str(), "--out", dir.file("x.ckpt").c_str()}) ==
        1);
}

TEST_CASE("cli: train, eval, solve and bench cooperate on a tiny model") {
  TempDir dir("matnet_cli_flow");
  const std::string cfg_path = dir.file("toy.cfg");
  {
    std::ofstream f(cfg_path);
    f << "[train]\nproblem = atsp\nn = 6\nd_model = 16\nlayers = 1\nheads = 2\nd_ff = 16\n"
         "batch_size = 4\ninstances_per_epoch = 8\nepochs = 1\nseed = 5\n";
  }
  const std::string ckpt = dir.file("toy.ckpt");
  REQUIRE(run_cli({"train", "--config", cfg_path.c_str(), "--out", ckpt.c_str()}) == 0);
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ckpt + ".metrics.csv"));

  REQUIRE(run_cli({"generate", "atsp", "--n", "6", "--count", "4", "--seed", "31", "--out",
                   dir.file("set").c_str()}) == 0);
  REQUIRE(run_cli({"eval", "--checkpoint", ckpt.c_str(), "--set", dir.file("set").c_str(),
                   "--aug", "2", "--out", dir.file("eval.csv").c_str()}) == 0);
  CHECK(slurp(dir.file("eval.csv")).rfind("instance,objective", 0) == 0);

  REQUIRE(run_cli({"solve", "--checkpoint", ckpt.c_str(), "--instance",
                   dir.file("set/atsp_00000.txt").c_str(), "--aug", "2", "--out",
                   dir.file("sol.txt").c_str()}) == 0);
  const auto inst = atsp::read_instance(slurp(dir.file("set/atsp_00000.txt")));
  const auto tour = atsp::read_tour(slurp(dir.file("sol.txt")), inst);
  CHECK(tour.perm.size() == 6);

  REQUIRE(run_cli({"bench", "--problem", "atsp", "--set", dir.file("set").c_str(), "--methods",
                   "nn,ni,fi,matnet", "--checkpoint", ckpt.c_str(), "--out",
                   dir.file("report").c_str()}) == 0);
  const auto rows = bench::parse_csv(slurp(dir.file("report.csv")));
  CHECK(rows.size() == 5);  // 4 methods + the oracle reference row
}

TEST_CASE("cli: gantt renders the fixture with 12 lanes ending at 25") {
  TempDir dir("matnet_gantt");
  const auto inst = fixture::fig4_instance();
  const auto sched = fixture::fig4_schedule();
  ffsp::save_instance(inst, dir.file("inst.txt"));
  {
    std::ofstream f(dir.file("sched.txt"), std::ios::binary);
    f << ffsp::write_schedule(sched);
  }
  REQUIRE(run_cli({"gantt", "--instance", dir.file("inst.txt").c_str(), "--schedule",
                   dir.file("sched.txt").c_str(), "--out", dir.file("g.svg").c_str()}) == 0);
  const std::string svg = slurp(dir.file("g.svg"));

  int lanes = 0;
  for (std::size_t pos = 0; (pos = svg.find("class=\"lane\"", pos)) != std::string::npos; ++pos)
    ++lanes;
  CHECK(lanes == 12);

  int max_end = 0;
  for (std::size_t pos = 0; (pos = svg.find("data-end=\"", pos)) != std::string::npos;) {
    pos += 10;
    max_end = std::max(max_end, std::atoi(svg.c_str() + pos));
  }
  CHECK(max_end == 25);
}

TEST_CASE("cli: exported ffsp mip round-trips through the lp parser") {
  TempDir dir("matnet_mip");
  REQUIRE(run_cli({"generate", "ffsp", "--n", "3", "--stages", "2", "--machines", "2", "--count",
                   "1", "--seed", "13", "--out", dir.str().c_str()}) == 0);
  REQUIRE(run_cli({"export-mip", "--instance", dir.file("ffsp_00000.txt").c_str(), "--out",
                   dir.file("m.lp").c_str()}) == 0);
  const lp::Model m = lp::Model::parse(slurp(dir.file("m.lp")));
  CHECK(m.count_vars_with_prefix("X_") == 2 * 3 * 2);
  CHECK(m.count_vars_with_prefix("Cmax") == 1);
}

TEST_CASE("cli: MATNET_SEED is the seed fallback") {
  TempDir a("matnet_env_a"), b("matnet_env_b");
  setenv("MATNET_SEED", "41", 1);
  REQUIRE(run_cli({"generate", "atsp", "--n", "6", "--count", "1", "--out", a.str().c_str()}) ==
          0);
  unsetenv("MATNET_SEED");
  REQUIRE(run_cli({"generate", "atsp", "--n", "6", "--count", "1", "--seed", "41", "--out",
                   b.str().c_str()}) == 0);
  CHECK(slurp(a.file("atsp_00000.txt")) == slurp(b.file("atsp_00000.txt")));
}
