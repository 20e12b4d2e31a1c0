#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "wfopt/benchmarks.hpp"
#include "wfopt/rng.hpp"

using namespace wfopt;

TEST_CASE("ackley: global minimum at the origin") {
  for (const std::size_t d : {1ul, 4ul, 10ul}) {
    AckleyConfig cfg;
    cfg.dimension = d;
    CHECK(std::abs(ackley(VectorXd::Zero(static_cast<Eigen::Index>(d)), cfg)) <= 1e-12);
  }
}

TEST_CASE("ackley: frozen hand value at d=1, x=1") {
  AckleyConfig cfg;
  cfg.dimension = 1;
  VectorXd x(1);
  x << 1.0;
  // -20 exp(-0.2) - exp(cos 2pi) + 20 + e = 3.6253849 (independent calc)
  CHECK(std::abs(ackley(x, cfg) - 3.6253849) <= 1e-5);
}

TEST_CASE("ackley: even symmetry and nonnegativity on random probes") {
  AckleyConfig cfg;
  cfg.dimension = 5;
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    VectorXd x(5);
    for (int k = 0; k < 5; ++k) x[k] = rng.uniform(-cfg.bound, cfg.bound);
    const double f = ackley(x, cfg);
    CHECK(f >= 0.0);
    CHECK(f == ackley((-x).eval(), cfg));
  }
}

TEST_CASE("ackley: input validation") {
  AckleyConfig cfg;
  cfg.dimension = 3;
  CHECK_THROWS_AS(ackley(VectorXd::Zero(2), cfg), DimensionMismatch);
  AckleyConfig bad;
  bad.a = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("ga reaches the sphere optimum within tolerance") {
  const auto objective = [](const VectorXd& x) { return -x.squaredNorm(); };
  GaConfig cfg;
  cfg.max_evals = 2000;
  cfg.seed = 4;
  const auto res = ga_baseline(objective, box_space(2, -5.0, 5.0), cfg);
  CHECK(res.evals_used == 2000);
  CHECK(res.best_value >= -1e-2);
}

TEST_CASE("ga and sa honor the evaluation budget exactly") {
  for (const std::size_t budget : {1ul, 37ul, 250ul}) {
    std::size_t ga_calls = 0, sa_calls = 0;
    GaConfig ga;
    ga.max_evals = budget;
    ga.seed = 5;
    ga_baseline(
        [&](const VectorXd& x) {
          ++ga_calls;
          return -x.squaredNorm();
        },
        box_space(3, -1.0, 1.0), ga);
    CHECK(ga_calls == budget);

    SaConfig sa;
    sa.max_evals = budget;
    sa.seed = 5;
    sa_baseline(
        [&](const VectorXd& x) {
          ++sa_calls;
          return -x.squaredNorm();
        },
        box_space(3, -1.0, 1.0), sa);
    CHECK(sa_calls == budget);
  }
}

TEST_CASE("sa at zero temperature is a greedy hill-climber") {
  SaConfig cfg;
  cfg.auto_temperature = false;
  cfg.initial_temperature = 0.0;
  cfg.max_evals = 400;
  cfg.init_probes = 5;
  cfg.seed = 6;

  double current = -std::numeric_limits<double>::infinity();
  std::size_t calls = 0;
  std::vector<double> accepted_path;
  // reconstruct acceptance: with T = 0 the current value must never worsen,
  // which shows as a nondecreasing best == current sequence
  const auto res = sa_baseline(
      [&](const VectorXd& x) {
        ++calls;
        return -(x.array() - 0.5).matrix().squaredNorm();
      },
      box_space(2, -2.0, 2.0), cfg);
  (void)current;
  (void)accepted_path;
  CHECK(calls == 400);
  CHECK(res.best_value <= 0.0);

  // determinism: same seed, same outcome
  const auto res2 = sa_baseline(
      [](const VectorXd& x) { return -(x.array() - 0.5).matrix().squaredNorm(); },
      box_space(2, -2.0, 2.0), cfg);
  CHECK(res2.best_value == res.best_value);
  CHECK(res2.best_point == res.best_point);
}

TEST_CASE("sa greedy acceptance never worsens the current point") {
  // with T = 0, the trace of accepted values is recoverable from best-so-far:
  // any accepted move must match a new best or repeat the current value, so
  // we track the internal current value through a stateful objective probe
  SaConfig cfg;
  cfg.auto_temperature = false;
  cfg.initial_temperature = 0.0;
  cfg.max_evals = 200;
  cfg.init_probes = 1;
  cfg.seed = 7;

  // the SA walker starts at the single probe; replay its decisions
  std::vector<double> values;
  const auto res = sa_baseline(
      [&](const VectorXd& x) {
        const double v = -(x.array() - 0.25).matrix().squaredNorm();
        values.push_back(v);
        return v;
      },
      box_space(1, -1.0, 1.0), cfg);

  double current = values.front();
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] >= current) current = values[i];  // greedy accept
    // a worse proposal must have been rejected: current never decreases
  }
  CHECK(res.best_value == current);
}

TEST_CASE("experiment harness: determinism and trace shape on ackley") {
  AckleyConfig ack;
  ack.dimension = 2;
  const BoProblem problem = ackley_problem(ack);

  ExperimentPlan plan;
  plan.objective_id = "ackley2";
  plan.method = Method::SwitchAf;
  plan.budget = 22;
  plan.repeats = 2;
  plan.base_seed = 100;
  plan.bo.n_initial = 8;
  plan.bo.elite_size = 50;  // variance criterion out of play
  plan.bo.epsilon1 = 0.0;
  plan.bo.epsilon2 = 0.0;
  plan.bo.switch_epsilon = 0.05;
  plan.bo.ystar_count = 2;
  plan.bo.penalty.mode = PenaltyMode::Subtractive;
  plan.bo.de_surrogate.population_size = 10;
  plan.bo.de_surrogate.max_generations = 20;
  plan.bo.de_mes.population_size = 10;
  plan.bo.de_mes.max_generations = 15;
  plan.bo.de_mes.strategy = DeStrategy::Best2Bin;
  plan.bo.train.hyperopt_interval = 5;
  plan.bo.train.refit_evals = 20;

  const auto a = run_experiment(problem, plan);
  REQUIRE(a.runs.size() == 2);
  for (const auto& run : a.runs) {
    REQUIRE_FALSE(run.failed);
    CHECK(run.evals == plan.budget);
    CHECK(run.best_trace.size() == run.evals);
    CHECK(run.best <= 0.0);  // negated ackley is nonpositive
    for (std::size_t i = 1; i < run.best_trace.size(); ++i)
      CHECK(run.best_trace[i] >= run.best_trace[i - 1]);
  }

  const auto b = run_experiment(problem, plan);
  for (std::size_t r = 0; r < a.runs.size(); ++r) {
    CHECK(a.runs[r].best == b.runs[r].best);
    CHECK(a.runs[r].best_trace == b.runs[r].best_trace);
  }
  CHECK(a.runs[0].best_trace != a.runs[1].best_trace);  // different seeds differ
}

TEST_CASE("experiment harness: direct methods and the result table") {
  AckleyConfig ack;
  ack.dimension = 2;
  const BoProblem problem = ackley_problem(ack);

  ExperimentPlan plan;
  plan.objective_id = "ackley2";
  plan.method = Method::DirectDe;
  plan.budget = 150;
  plan.repeats = 2;
  plan.base_seed = 7;
  plan.de.population_size = 20;
  plan.de.tolerance = 1e-12;
  plan.bo.penalty.mode = PenaltyMode::Subtractive;

  const auto res = run_experiment(problem, plan);
  for (const auto& run : res.runs) {
    REQUIRE_FALSE(run.failed);
    CHECK(run.evals == plan.budget);
    CHECK(run.best_trace.size() == plan.budget);
  }

  const auto table = std::filesystem::temp_directory_path() / "wfopt_experiment.txt";
  write_result_table(table, res);
  std::ifstream in(table);
  REQUIRE(in.good());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 2 * plan.budget);

  CHECK(res.median_best() <= 0.0);
}

TEST_CASE("method names round-trip") {
  for (const auto m : {Method::SwitchAf, Method::MspOnly, Method::MesOnly, Method::DirectDe,
                       Method::DirectGa, Method::DirectSa}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(method_from_string("gradient-descent"), ConfigError);
}
