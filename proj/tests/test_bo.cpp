#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "wfopt/bo.hpp"
#include "wfopt/benchmarks.hpp"

using namespace wfopt;

namespace {

// small, fast settings for engine tests
BoConfig quick_config(std::uint64_t seed) {
  BoConfig cfg;
  cfg.n_initial = 8;
  cfg.budget = 20;
  cfg.elite_size = 5;
  cfg.epsilon1 = 0.0;
  cfg.epsilon2 = 0.0;
  cfg.switch_epsilon = 1e-3;
  cfg.ystar_count = 3;
  cfg.seed = seed;
  cfg.de_surrogate.population_size = 12;
  cfg.de_surrogate.max_generations = 30;
  cfg.de_surrogate.tolerance = 1e-3;
  cfg.de_mes.population_size = 12;
  cfg.de_mes.max_generations = 20;
  cfg.de_mes.strategy = DeStrategy::Best2Bin;
  cfg.de_mes.tolerance = 1e-15;
  cfg.train.hyperopt_interval = 3;
  cfg.train.refit_evals = 25;
  return cfg;
}

BoProblem paraboloid_problem(std::size_t d = 2) {
  BoProblem p;
  p.space = box_space(d, -1.0, 1.0);
  p.objective = [](const VectorXd& x) { return -(x.array() - 0.3).matrix().squaredNorm(); };
  return p;
}

}  // namespace

TEST_CASE("variance criterion hand values") {
  Dataset data;
  data.X.resize(5, 1);
  data.X << 0.1, 0.2, 0.3, 0.4, 0.5;

  data.y.resize(5);
  data.y << 10.0, 10.05, 10.2, 1.0, 2.0;  // top-3: {10, 10.05, 10.2}
  const auto [sd1, trig1] = variance_criterion(data, 3, 0.1);
  CHECK(sd1 == doctest::Approx(0.08498366).epsilon(1e-6));
  CHECK(trig1);

  data.y << 10.0, 11.0, 12.0, 1.0, 2.0;
  const auto [sd2, trig2] = variance_criterion(data, 3, 0.1);
  CHECK(sd2 == doctest::Approx(0.81649658).epsilon(1e-6));
  CHECK_FALSE(trig2);

  data.y.setConstant(7.0);
  const auto [sd3, trig3] = variance_criterion(data, 3, 0.0);
  CHECK(sd3 == 0.0);
  CHECK(trig3);

  CHECK_THROWS_AS(variance_criterion(data, 6, 0.1), InvalidArgument);
}

TEST_CASE("penalty factor and wrappers") {
  CHECK(penalty_lambda(0.0, 126.0) == 1.0);
  CHECK(penalty_lambda(126.0, 126.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(penalty_lambda(1e9, 126.0) > 0.0);
  CHECK(penalty_lambda(1e9, 126.0) < 1e-6);
  CHECK_THROWS_AS(penalty_lambda(-1.0, 126.0), InvalidArgument);

  // v = s halves a positive objective
  CHECK(apply_penalty(10.0, 0.5, PenaltyMode::Multiplicative, 0.0) == 5.0);
  // violation -> infinity drives a positive objective to zero from above
  CHECK(apply_penalty(10.0, penalty_lambda(1e12, 1.0), PenaltyMode::Multiplicative, 0.0) > 0.0);
  CHECK(apply_penalty(10.0, penalty_lambda(1e12, 1.0), PenaltyMode::Multiplicative, 0.0) < 1e-9);
  // subtractive mode strictly worsens negative objectives too
  CHECK(apply_penalty(-3.0, 0.5, PenaltyMode::Subtractive, 8.0) == doctest::Approx(-7.0));
  CHECK(apply_penalty(-3.0, 1.0, PenaltyMode::Subtractive, 8.0) == -3.0);

  DesignSpace space = box_space(1, -2.0, 2.0);
  space.feasible = [](const VectorXd& x) { return x[0] <= 0.0; };
  space.violation = [](const VectorXd& x) { return std::max(x[0], 0.0); };
  PenaltyConfig pen;
  pen.violation_scale = 1.0;
  const auto wrapped = penalized([](const VectorXd&) { return 10.0; }, space, pen);
  VectorXd feasible(1), infeasible(1);
  feasible << -1.0;
  infeasible << 1.0;
  CHECK(wrapped(feasible) == 10.0);
  CHECK(wrapped(infeasible) == doctest::Approx(5.0));
}

TEST_CASE("degenerate budget: zero iterations, terminated by budget") {
  BoConfig cfg = quick_config(1);
  cfg.budget = cfg.n_initial;
  const auto result = run_bo(paraboloid_problem(), cfg);
  CHECK(result.state.terminated_by == TerminationReason::Budget);
  CHECK(result.state.evals == cfg.n_initial);
  for (const auto& h : result.state.history) CHECK(h.iteration == 0);
}

TEST_CASE("constant objective terminates by variance at the first check") {
  BoProblem p;
  p.space = box_space(2, 0.0, 1.0);
  p.objective = [](const VectorXd&) { return 5.0; };
  BoConfig cfg = quick_config(2);
  cfg.epsilon1 = 0.1;
  const auto result = run_bo(p, cfg);
  CHECK(result.state.terminated_by == TerminationReason::Variance);
  CHECK(result.state.evals == cfg.n_initial);
  CHECK(result.best_value == 5.0);
}

TEST_CASE("epsilon1 = infinity stops immediately by variance") {
  BoConfig cfg = quick_config(3);
  cfg.epsilon1 = std::numeric_limits<double>::infinity();
  const auto result = run_bo(paraboloid_problem(), cfg);
  CHECK(result.state.terminated_by == TerminationReason::Variance);
  CHECK(result.state.evals == cfg.n_initial);
}

TEST_CASE("epsilon1 = epsilon2 = 0 runs to the budget") {
  BoConfig cfg = quick_config(4);
  const auto result = run_bo(paraboloid_problem(), cfg);
  CHECK(result.state.terminated_by == TerminationReason::Budget);
  CHECK(result.state.evals == cfg.budget);
}

TEST_CASE("a near-exact surrogate triggers the MES threshold") {
  // densely sampled smooth 1-D objective: predictive sigma collapses, so
  // max MES falls below epsilon2
  BoProblem p;
  p.space = box_space(1, 0.0, 1.0);
  p.objective = [](const VectorXd& x) { return -(x[0] - 0.3) * (x[0] - 0.3); };
  BoConfig cfg = quick_config(5);
  cfg.n_initial = 30;
  cfg.budget = 60;
  cfg.elite_size = 40;  // cannot fire before 40 samples exist
  cfg.epsilon1 = 0.0;
  cfg.epsilon2 = 1e-4;
  cfg.af_mode = AfMode::MesOnly;  // MES criterion is in play from the start
  cfg.de_mes.population_size = 16;
  cfg.de_mes.max_generations = 40;
  const auto result = run_bo(p, cfg);
  CHECK(result.state.terminated_by == TerminationReason::MesThreshold);
  CHECK(result.state.evals < cfg.budget);
}

TEST_CASE("phase is monotone and switch-af reaches mes on an easy problem") {
  BoConfig cfg = quick_config(6);
  cfg.budget = 26;
  cfg.switch_epsilon = 0.05;
  const auto result = run_bo(paraboloid_problem(1), cfg);
  bool seen_mes = false;
  for (const auto& h : result.state.history) {
    if (h.iteration == 0) continue;
    if (seen_mes) CHECK(h.phase == BoPhase::Mes);  // never returns to MSP
    seen_mes |= h.phase == BoPhase::Mes;
  }
  CHECK(seen_mes);
  CHECK(result.state.phase == BoPhase::Mes);
}

TEST_CASE("msp-only mode never enters mes and handles duplicates") {
  BoConfig cfg = quick_config(7);
  cfg.af_mode = AfMode::MspOnly;
  cfg.budget = 24;
  const auto result = run_bo(paraboloid_problem(1), cfg);
  for (const auto& h : result.state.history) CHECK(h.phase == BoPhase::Msp);
  CHECK(result.state.evals == cfg.budget);

  // proposals never duplicate an evaluated sample
  const MatrixXd& X = result.state.dataset.X;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j)
      CHECK((X.row(i) - X.row(j)).cwiseAbs().sum() > 1e-9);
}

TEST_CASE("mes-only mode explores from the first iteration") {
  BoConfig cfg = quick_config(8);
  cfg.af_mode = AfMode::MesOnly;
  cfg.budget = 16;
  const auto result = run_bo(paraboloid_problem(1), cfg);
  for (const auto& h : result.state.history)
    if (h.iteration > 0) CHECK(h.phase == BoPhase::Mes);
  CHECK(result.state.evals == cfg.budget);
}

TEST_CASE("run state bookkeeping: counters, trace, best monotone") {
  BoConfig cfg = quick_config(9);
  std::vector<TraceRow> rows;
  const auto result = run_bo(paraboloid_problem(), cfg, [&](const TraceRow& r) { rows.push_back(r); });

  CHECK(result.state.evals == result.state.dataset.size());
  CHECK(result.state.evals <= cfg.budget);
  CHECK(rows.size() == result.state.evals);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].eval_index == i + 1);
    best = std::max(best, rows[i].penalized);
    CHECK(rows[i].best_so_far == best);
    if (i > 0) CHECK(rows[i].best_so_far >= rows[i - 1].best_so_far);
  }
  CHECK(rows.front().phase == "init");
}

TEST_CASE("full-run determinism under a fixed seed") {
  BoConfig cfg = quick_config(10);
  std::vector<TraceRow> a_rows, b_rows;
  const auto a = run_bo(paraboloid_problem(), cfg, [&](const TraceRow& r) { a_rows.push_back(r); });
  const auto b = run_bo(paraboloid_problem(), cfg, [&](const TraceRow& r) { b_rows.push_back(r); });
  CHECK(a.best_value == b.best_value);
  CHECK(a.best_point == b.best_point);
  CHECK(a.state.dataset.X == b.state.dataset.X);
  REQUIRE(a_rows.size() == b_rows.size());
  for (std::size_t i = 0; i < a_rows.size(); ++i) {
    CHECK(a_rows[i].point == b_rows[i].point);
    CHECK(a_rows[i].raw == b_rows[i].raw);
    CHECK(a_rows[i].penalized == b_rows[i].penalized);
    CHECK(a_rows[i].phase == b_rows[i].phase);
  }
}

TEST_CASE("infeasible proposals carry a penalty in history") {
  // feasible region is the left half; the optimum sits on the infeasible side
  BoProblem p;
  p.space = box_space(1, -1.0, 1.0);
  p.space.feasible = [](const VectorXd& x) { return x[0] <= 0.2; };
  p.space.violation = [](const VectorXd& x) { return std::max(x[0] - 0.2, 0.0); };
  p.objective = [](const VectorXd& x) { return 1.0 - (x[0] - 0.6) * (x[0] - 0.6); };
  BoConfig cfg = quick_config(11);
  cfg.penalty.violation_scale = 0.5;
  cfg.budget = 18;
  const auto result = run_bo(p, cfg);
  for (std::size_t i = 0; i < result.state.history.size(); ++i) {
    const auto& h = result.state.history[i];
    const bool feasible = h.point[0] <= 0.2;
    if (feasible) {
      CHECK(h.penalized == h.raw);
    } else {
      CHECK(h.penalized < h.raw);  // lambda < 1 strictly worsens
    }
  }
  // the reported best is feasible
  CHECK(result.best_point[0] <= 0.2);
}

TEST_CASE("canonicalization stores snapped points and honors eq-13 with eps = 0") {
  // 1-D grid snapping: canonical points sit on 0.05-spaced centers
  BoProblem p;
  p.space = box_space(1, 0.0, 1.0);
  p.canonicalize = [](const VectorXd& x) {
    VectorXd c(1);
    c[0] = (std::floor(x[0] / 0.05) + 0.5) * 0.05;
    return c;
  };
  p.objective = [](const VectorXd& x) { return -(x[0] - 0.52) * (x[0] - 0.52); };
  BoConfig cfg = quick_config(12);
  cfg.switch_epsilon = 0.0;
  cfg.budget = 16;
  const auto result = run_bo(p, cfg);
  for (Eigen::Index i = 0; i < result.state.dataset.X.rows(); ++i) {
    const double v = result.state.dataset.X(i, 0) / 0.05 - 0.5;
    CHECK(std::abs(v - std::round(v)) <= 1e-9);
  }
  CHECK(result.state.phase == BoPhase::Mes);  // grid duplicates force the switch
}

TEST_CASE("config validation accepts the spec's own edge setups") {
  BoConfig cfg = quick_config(13);
  cfg.budget = cfg.n_initial;  // degenerate budget is legal
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon1 = 0.0;
  cfg.epsilon2 = 0.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_initial = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = quick_config(13);
  cfg.budget = cfg.n_initial - 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
