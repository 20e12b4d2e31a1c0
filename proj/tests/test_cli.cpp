#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "wfopt/config.hpp"
#include "wfopt/external_eval.hpp"
#include "wfopt/rng.hpp"
#include "wfopt/runner.hpp"

using namespace wfopt;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wfopt_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_small_curve(const fs::path& path) {
  std::ostringstream os;
  os << "speed ct cp\n";
  for (double u = 2.0; u <= 26.0; u += 1.0) {
    const double ct = u <= 11.0 ? 0.78 : std::max(0.78 * std::pow(11.0 / u, 2.0), 0.05);
    const double cp = u <= 11.0 ? 0.46 : std::max(0.46 * std::pow(11.4 / u, 3.0), 0.02);
    os << u << " " << ct << " " << cp << "\n";
  }
  write_file(path, os.str());
}

// minimal fast wflo case: 6x6 cells, 3 turbines, 2-state rose
std::string small_wflo_config(const std::string& out_subdir, std::uint64_t seed) {
  std::ostringstream os;
  os << "problem = wflo\n"
     << "method = switch-af\n"
     << "seed = " << seed << "\n"
     << "output_dir = " << out_subdir << "\n"
     << "wflo.curve_file = curve.txt\n"
     << "wflo.boundary_file = boundary.txt\n"
     << "wflo.rose_file = rose.txt\n"
     << "wflo.n_turbines = 3\n"
     << "bo.n_initial = 8\n"
     << "bo.budget = 14\n"
     << "bo.elite_size = 30\n"
     << "bo.epsilon1 = 0\n"
     << "bo.epsilon2 = 0\n"
     << "bo.ystar_count = 2\n"
     << "bo.hyperopt_interval = 4\n"
     << "bo.refit_evals = 20\n"
     << "de.surrogate.population = 10\n"
     << "de.surrogate.max_generations = 15\n"
     << "de.mes.population = 10\n"
     << "de.mes.max_generations = 10\n";
  return os.str();
}

void write_small_case_files(const fs::path& dir) {
  write_small_curve(dir / "curve.txt");
  write_file(dir / "boundary.txt", "0 0\n756 0\n756 756\n0 756\n");
  write_file(dir / "rose.txt", "270 9 0.6\n180 8 0.4\n");
}

TurbineSpec small_spec(const fs::path& dir) {
  TurbineSpec spec;
  load_curve_file(dir / "curve.txt", spec.ct_curve, spec.cp_curve);
  spec.validate();
  return spec;
}

}  // namespace

TEST_CASE("key-value config: parse, serialize, round-trip losslessly") {
  const std::string text =
      "# comment\n"
      "problem = benchmark\n"
      "bo.budget = 200\n"
      "wflo.k_y = 0.030000000000000002\n"
      "\n"
      "name = spaced value here\n";
  const auto cfg = KeyValueConfig::parse_text(text);
  CHECK(cfg.get_string("problem") == "benchmark");
  CHECK(cfg.get_int("bo.budget", 0) == 200);
  CHECK(cfg.get_double("wflo.k_y", 0.0) == 0.030000000000000002);
  CHECK(cfg.get_string("name") == "spaced value here");

  const auto again = KeyValueConfig::parse_text(cfg.serialize());
  CHECK(again == cfg);
  const auto third = KeyValueConfig::parse_text(again.serialize());
  CHECK(third == again);
}

TEST_CASE("key-value config: diagnostics carry line numbers and keys") {
  CHECK_THROWS_WITH_AS(KeyValueConfig::parse_text("a = 1\nbroken line\n", "cfg"),
                       doctest::Contains("cfg:2"), ConfigError);
  CHECK_THROWS_WITH_AS(KeyValueConfig::parse_text("a = 1\na = 2\n", "cfg"),
                       doctest::Contains("duplicate key 'a'"), ConfigError);
  const auto cfg = KeyValueConfig::parse_text("x = notanumber\n");
  CHECK_THROWS_WITH_AS(cfg.get_double("x"), doctest::Contains("not a number"), ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_string("missing"), doctest::Contains("missing"), ConfigError);
}

TEST_CASE("load_case: missing files are named, unknown keys are rejected") {
  const fs::path dir = fresh_dir("load_errors");
  write_file(dir / "case.cfg", small_wflo_config("out", 1));
  write_small_case_files(dir);
  fs::remove(dir / "rose.txt");
  CHECK_THROWS_WITH_AS(load_case(dir / "case.cfg"), doctest::Contains("rose.txt"), IoError);

  write_small_case_files(dir);
  write_file(dir / "typo.cfg", small_wflo_config("out", 1) + "bo.bugdet = 3\n");
  CHECK_THROWS_WITH_AS(load_case(dir / "typo.cfg"), doctest::Contains("bo.bugdet"), ConfigError);
}

TEST_CASE("validate_case accepts a good config") {
  const fs::path dir = fresh_dir("validate");
  write_file(dir / "case.cfg", small_wflo_config("out", 3));
  write_small_case_files(dir);
  CHECK(validate_case(dir / "case.cfg") == 0);
}

TEST_CASE("run_case: benchmark artifacts, replay, determinism") {
  const fs::path dir = fresh_dir("bench_run");
  const std::string base =
      "problem = benchmark\n"
      "method = switch-af\n"
      "seed = 11\n"
      "benchmark.dimension = 2\n"
      "bo.n_initial = 8\n"
      "bo.budget = 18\n"
      "bo.elite_size = 30\n"
      "bo.epsilon1 = 0\n"
      "bo.epsilon2 = 0\n"
      "bo.switch_epsilon = 0.05\n"
      "bo.ystar_count = 2\n"
      "de.surrogate.population = 10\n"
      "de.surrogate.max_generations = 15\n"
      "de.mes.population = 10\n"
      "de.mes.max_generations = 10\n";
  write_file(dir / "a.cfg", base + "output_dir = out_a\n");
  write_file(dir / "b.cfg", base + "output_dir = out_b\n");

  REQUIRE(run_case(dir / "a.cfg") == 0);
  REQUIRE(run_case(dir / "b.cfg") == 0);

  const std::string trace_a = read_file(dir / "out_a" / "trace.txt");
  const std::string trace_b = read_file(dir / "out_b" / "trace.txt");
  CHECK(trace_a == trace_b);  // byte-identical under the same seed

  std::size_t rows = 0;
  std::istringstream ss(trace_a);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 18);

  const std::string summary = read_file(dir / "out_a" / "summary.txt");
  CHECK(summary.find("terminated_by = budget") != std::string::npos);
  CHECK(summary.find("evals = 18") != std::string::npos);
  CHECK(summary.find("best_value =") != std::string::npos);

  CHECK(replay_trace(dir / "out_a" / "trace.txt") == 0);
}

TEST_CASE("replay detects a corrupted best column") {
  const fs::path dir = fresh_dir("replay_corrupt");
  write_file(dir / "trace.txt",
             "# header\n"
             "1 init 0.5 -2 -2 -2\n"
             "2 msp 0.6 -1 -1 -1\n"
             "3 msp 0.7 -3 -3 -0.5\n");  // recorded best lies
  CHECK_THROWS_AS(replay_trace(dir / "trace.txt"), ProtocolError);

  write_file(dir / "gap.txt",
             "1 init 0.5 -2 -2 -2\n"
             "3 msp 0.6 -1 -1 -1\n");  // missing eval 2
  CHECK_THROWS_AS(replay_trace(dir / "gap.txt"), ProtocolError);
}

TEST_CASE("run_case: small wflo case writes a collision-free layout") {
  const fs::path dir = fresh_dir("wflo_run");
  write_file(dir / "case.cfg", small_wflo_config("out", 5));
  write_small_case_files(dir);
  REQUIRE(run_case(dir / "case.cfg") == 0);

  const std::string layout = read_file(dir / "out" / "layout.txt");
  std::istringstream ss(layout);
  std::string line;
  std::set<std::pair<int, int>> cells;
  std::size_t rows = 0;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int id, ix, iy;
    double x, y;
    REQUIRE((ls >> id >> x >> y >> ix >> iy));
    cells.insert({ix, iy});
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(cells.size() == 3);
  CHECK(replay_trace(dir / "out" / "trace.txt") == 0);
}

TEST_CASE("run_case: direct method traces every call with phase direct") {
  const fs::path dir = fresh_dir("direct_run");
  std::string cfg = small_wflo_config("out", 7);
  cfg.replace(cfg.find("switch-af"), 9, "direct-sa");
  cfg += "sa.init_probes = 4\n";
  write_file(dir / "case.cfg", cfg);
  write_small_case_files(dir);
  REQUIRE(run_case(dir / "case.cfg") == 0);

  const std::string trace = read_file(dir / "out" / "trace.txt");
  std::istringstream ss(trace);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    CHECK(line.find(" direct ") != std::string::npos);
    ++rows;
  }
  CHECK(rows == 14);  // budget exactly
}

TEST_CASE("external evaluator: echo responder, Σf = 1 identity") {
  const fs::path dir = fresh_dir("external_echo");
  WindRose rose;
  rose.states = {{270.0, 9.0, 0.6}, {180.0, 8.0, 0.4}};
  EvaluatorBinding binding;
  binding.exchange_dir = dir;
  binding.poll_interval_s = 0.01;
  binding.timeout_s = 5.0;

  std::atomic<bool> stop{false};
  std::thread responder([&]() {
    const double fixed_power = 2.5e6;
    while (!stop) {
      for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("req_", 0) != 0 || name.find(".tmp") != std::string::npos) continue;
        const fs::path resp = dir / ("resp_" + name.substr(4));
        if (fs::exists(resp)) continue;
        const auto req = parse_request_file(entry.path());
        std::ofstream out(dir / (resp.filename().string() + ".tmp"));
        for (std::size_t j = 0; j < req.rose.states.size(); ++j) out << fixed_power << "\n";
        out.close();
        fs::rename(dir / (resp.filename().string() + ".tmp"), resp);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  });

  ExternalEvaluator evaluator(binding, rose);
  FarmLayout layout;
  layout.positions = {{100.0, 100.0}, {500.0, 400.0}};
  const double aep_value = evaluator.evaluate_aep(layout);
  CHECK(aep_value == doctest::Approx(kHoursPerYear * 2.5e6).epsilon(1e-12));
  const double again = evaluator.evaluate_aep(layout);
  CHECK(again == aep_value);
  CHECK(evaluator.last_id() == 2);  // ids are monotone
  stop = true;
  responder.join();
  CHECK(fs::exists(dir / "req_1.txt"));
  CHECK(fs::exists(dir / "req_2.txt"));
}

TEST_CASE("external evaluator: wake-model responder reproduces in-process AEP bitwise") {
  const fs::path dir = fresh_dir("external_roundtrip");
  write_small_curve(dir / "curve.txt");
  const TurbineSpec spec = small_spec(dir);
  const WakeParams params;
  WindRose rose;
  rose.states = {{270.0, 9.5, 0.5}, {200.0, 8.0, 0.3}, {45.0, 11.0, 0.2}};

  EvaluatorBinding binding;
  binding.exchange_dir = dir / "exchange";
  binding.poll_interval_s = 0.005;
  binding.timeout_s = 10.0;
  fs::create_directories(binding.exchange_dir);

  std::atomic<bool> stop{false};
  std::thread responder([&]() {
    while (!stop) {
      for (const auto& entry : fs::directory_iterator(binding.exchange_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("req_", 0) != 0 || name.find(".tmp") != std::string::npos) continue;
        if (fs::exists(binding.exchange_dir / ("resp_" + name.substr(4)))) continue;
        answer_request(entry.path(), spec, params);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  });

  ExternalEvaluator evaluator(binding, rose);
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    FarmLayout layout;
    std::set<std::pair<int, int>> used;
    while (layout.positions.size() < 5) {
      const int ix = static_cast<int>(rng.uniform_index(8));
      const int iy = static_cast<int>(rng.uniform_index(8));
      if (!used.insert({ix, iy}).second) continue;
      layout.positions.emplace_back((ix + 0.5) * 126.0, (iy + 0.5) * 126.0);
      layout.cells.emplace_back(ix, iy);
    }
    const double via_files = evaluator.evaluate_aep(layout);
    const double in_process = aep(layout, rose, spec, params);
    CHECK(via_files == in_process);  // bit-for-bit
  }
  stop = true;
  responder.join();
}

TEST_CASE("external evaluator: timeout and malformed responses") {
  const fs::path dir = fresh_dir("external_errors");
  WindRose rose;
  rose.states = {{270.0, 9.0, 1.0}};
  EvaluatorBinding binding;
  binding.exchange_dir = dir;
  binding.poll_interval_s = 0.01;
  binding.timeout_s = 0.15;

  ExternalEvaluator evaluator(binding, rose);
  FarmLayout layout;
  layout.positions = {{100.0, 100.0}};
  CHECK_THROWS_AS(evaluator.evaluate_aep(layout), TimeoutError);  // nobody answers

  // malformed response: wrong power count; the file must be retained
  std::atomic<bool> stop{false};
  std::thread bad_responder([&]() {
    while (!stop) {
      for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("req_2", 0) != 0 || name.find(".tmp") != std::string::npos) continue;
        const fs::path resp = dir / "resp_2.txt";
        if (fs::exists(resp)) continue;
        std::ofstream out(dir / "resp_2.txt.tmp");
        out << "1e6\n2e6\n";  // two powers for a one-state rose
        out.close();
        fs::rename(dir / "resp_2.txt.tmp", resp);
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  });
  CHECK_THROWS_AS(evaluator.evaluate_aep(layout), ProtocolError);
  stop = true;
  bad_responder.join();
  CHECK(fs::exists(dir / "resp_2.txt"));

  EvaluatorBinding bad;
  bad.exchange_dir = dir;
  bad.poll_interval_s = 1.0;
  bad.timeout_s = 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("binding invariant surfaces through load_case") {
  const fs::path dir = fresh_dir("binding");
  std::string cfg = small_wflo_config("out", 9);
  cfg +=
      "evaluator.mode = external-exchange\n"
      "evaluator.exchange_dir = exchange\n"
      "evaluator.poll_interval_s = 2\n"
      "evaluator.timeout_s = 1\n";
  write_file(dir / "case.cfg", cfg);
  write_small_case_files(dir);
  CHECK_THROWS_AS(load_case(dir / "case.cfg"), InvalidArgument);
}
