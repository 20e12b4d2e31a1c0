#include "wfopt/bo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wfopt/parallel.hpp"
#include "wfopt/rng.hpp"
#include "wfopt/sampling.hpp"

namespace wfopt {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::None: return "none";
    case TerminationReason::Budget: return "budget";
    case TerminationReason::Variance: return "variance";
    case TerminationReason::MesThreshold: return "mes-threshold";
  }
  return "none";
}

double penalty_lambda(double violation, double scale) {
  if (violation < 0.0) throw InvalidArgument("penalty: violation must be >= 0");
  if (!(scale > 0.0)) throw InvalidArgument("penalty: violation scale must be positive");
  return 1.0 / (1.0 + violation / scale);
}

double apply_penalty(double value, double lambda, PenaltyMode mode, double range_estimate) {
  if (lambda >= 1.0) return value;
  if (mode == PenaltyMode::Multiplicative) return lambda * value;
  return value - (1.0 - lambda) * range_estimate;
}

std::function<double(const VectorXd&)> penalized(const std::function<double(const VectorXd&)>& objective,
                                                 const DesignSpace& space, const PenaltyConfig& penalty) {
  return [objective, &space, penalty](const VectorXd& x) {
    const double lam = penalty_lambda(space.violation_of(x), penalty.violation_scale);
    const double raw = objective(x);
    const double range = penalty.range_estimate > 0.0 ? penalty.range_estimate : std::abs(raw) + 1.0;
    return apply_penalty(raw, lam, penalty.mode, range);
  };
}

std::pair<double, bool> variance_criterion(const Dataset& data, std::size_t elite_size, double epsilon1) {
  if (elite_size == 0) throw InvalidArgument("variance criterion: elite size must be >= 1");
  if (data.size() < elite_size) throw InvalidArgument("variance criterion: dataset smaller than elite size");
  std::vector<double> values(data.y.data(), data.y.data() + data.y.size());
  std::nth_element(values.begin(), values.begin() + static_cast<long>(elite_size), values.end(),
                   std::greater<double>());
  values.resize(elite_size);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(elite_size);
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  const double sd = std::sqrt(acc / static_cast<double>(elite_size));
  return {sd, sd <= epsilon1};
}

void BoConfig::validate() const {
  if (n_initial < 2) throw InvalidArgument("bo: n_initial must be >= 2");
  if (budget < n_initial) throw InvalidArgument("bo: budget must be >= n_initial");
  if (elite_size == 0) throw InvalidArgument("bo: elite_size must be >= 1");
  if (epsilon1 < 0.0 || epsilon2 < 0.0 || switch_epsilon < 0.0)
    throw InvalidArgument("bo: epsilon thresholds must be >= 0");
  if (ystar_count == 0) throw InvalidArgument("bo: y* pool size must be >= 1");
  de_surrogate.validate();
  de_mes.validate();
}

namespace {

struct Evaluation {
  VectorXd canonical;
  double raw = 0.0;
  double penalized = 0.0;
  double lambda = 1.0;
};

class Engine {
 public:
  Engine(const BoProblem& problem, const BoConfig& config, const TraceSink& trace)
      : problem_(problem), cfg_(config), trace_(trace) {
    problem_.space.validate();
    cfg_.validate();
    kriging_base_.bounds = problem_.space.bounds;
    kriging_base_.optimize_p = cfg_.optimize_p;
  }

  BoResult run() {
    initial_design();
    std::size_t iteration = 0;
    while (true) {
      if (state_.evals >= cfg_.budget) {
        state_.terminated_by = TerminationReason::Budget;
        break;
      }
      if (state_.dataset.size() >= cfg_.elite_size) {
        const auto [var, triggered] = variance_criterion(state_.dataset, cfg_.elite_size, cfg_.epsilon1);
        if (triggered) {
          state_.terminated_by = TerminationReason::Variance;
          break;
        }
      }
      ++iteration;
      const std::uint64_t iter_seed = mix64(cfg_.seed) ^ mix64(0xb0'0000 + iteration);
      fit_surrogate(iteration);

      const SeededInitPlan plan = incumbent_plan();
      VectorXd proposal;
      double af_value = 0.0;
      bool terminated = false;

      if (state_.phase == BoPhase::Msp && cfg_.af_mode != AfMode::MesOnly) {
        propose_msp(plan, iter_seed, proposal, af_value);
        // a converged MSP hands over within the same iteration
        if (state_.phase == BoPhase::Mes) {
          terminated = propose_mes(plan, iter_seed, proposal, af_value);
        }
      } else {
        state_.phase = BoPhase::Mes;
        terminated = propose_mes(plan, iter_seed, proposal, af_value);
      }
      if (terminated) {
        state_.terminated_by = TerminationReason::MesThreshold;
        break;
      }

      const Evaluation ev = evaluate(proposal);
      append(ev, iteration, state_.phase, af_value);
    }
    return finish();
  }

 private:
  double penalized_mean(const KrigingModel& model, const VectorXd& x) const {
    const double lam = penalty_lambda(problem_.space.violation_of(x), cfg_.penalty.violation_scale);
    const double mean = model.predict_mean(x);
    return apply_penalty(mean, lam, cfg_.penalty.mode, observed_range_);
  }

  Evaluation evaluate(const VectorXd& proposal_raw) const {
    Evaluation ev;
    ev.lambda = penalty_lambda(problem_.space.violation_of(proposal_raw), cfg_.penalty.violation_scale);
    ev.canonical = problem_.canonical(proposal_raw);
    ev.raw = problem_.objective(ev.canonical);
    const double range = cfg_.penalty.range_estimate > 0.0 ? cfg_.penalty.range_estimate
                         : observed_range_ > 0.0           ? observed_range_
                                                           : std::abs(ev.raw) + 1.0;
    ev.penalized = apply_penalty(ev.raw, ev.lambda, cfg_.penalty.mode, range);
    return ev;
  }

  void append(const Evaluation& ev, std::size_t iteration, BoPhase phase, double af_value) {
    if (min_l1_to_data(ev.canonical) <= cfg_.duplicate_guard && state_.dataset.size() > 0)
      throw Error("bo engine: duplicate proposal slipped past the guard (internal invariant)");
    state_.dataset.append(ev.canonical, ev.penalized);
    state_.evals = state_.dataset.size();
    raw_values_.push_back(ev.raw);
    lambdas_.push_back(ev.lambda);
    best_so_far_ = std::max(best_so_far_, ev.penalized);
    observed_range_ = state_.dataset.y.maxCoeff() - state_.dataset.y.minCoeff();

    state_.history.push_back(BoHistoryEntry{iteration, ev.canonical, ev.raw, ev.penalized, phase, af_value});
    if (trace_) {
      trace_(TraceRow{state_.evals, iteration == 0 ? "init" : (phase == BoPhase::Msp ? "msp" : "mes"),
                      ev.canonical, ev.raw, ev.penalized, best_so_far_});
    }
  }

  void initial_design() {
    const auto batch = constrained_lhs(problem_.space, cfg_.n_initial,
                                       std::max<std::size_t>(1, cfg_.oversample_factor) * cfg_.n_initial,
                                       mix64(cfg_.seed) ^ 0x1ce'0001);
    std::vector<Evaluation> evs(batch.size());
    std::vector<VectorXd> canon(batch.size());
    // canonicalization first (sequential: duplicate repair consumes RNG)
    Rng redraw = Rng::derive(cfg_.seed, 0x9edra3);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      VectorXd x = batch.points.row(static_cast<Eigen::Index>(i)).transpose();
      VectorXd c = problem_.canonical(x);
      int tries = 0;
      while (min_l1(canon, i, c) <= cfg_.duplicate_guard) {
        if (++tries > 1000)
          throw InfeasibleDomainError("bo engine: cannot draw distinct initial samples");
        for (std::size_t k = 0; k < problem_.space.dim(); ++k)
          x[static_cast<Eigen::Index>(k)] =
              redraw.uniform(problem_.space.bounds[k].lower, problem_.space.bounds[k].upper);
        if (!problem_.space.is_feasible(x)) continue;
        c = problem_.canonical(x);
      }
      canon[i] = std::move(c);
      evs[i].canonical = canon[i];
      evs[i].lambda = 1.0;  // constrained sampling yields feasible points
    }
    parallel_for(batch.size(), [&](std::size_t i) {
      evs[i].raw = problem_.objective(evs[i].canonical);
      evs[i].penalized = evs[i].raw;  // lambda = 1
    });
    for (auto& ev : evs) append(ev, 0, BoPhase::Msp, 0.0);
  }

  static double min_l1(const std::vector<VectorXd>& rows, std::size_t count, const VectorXd& x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) best = std::min(best, (rows[i] - x).cwiseAbs().sum());
    return best;
  }

  double min_l1_to_data(const VectorXd& x) const {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < state_.dataset.X.rows(); ++i)
      best = std::min(best, (state_.dataset.X.row(i).transpose() - x).cwiseAbs().sum());
    return best;
  }

  void fit_surrogate(std::size_t iteration) {
    KrigingConfig kc = kriging_base_;
    if (!model_) {
      kc.n_starts = cfg_.train.initial_starts;
      kc.max_evals_per_start = cfg_.train.initial_evals_per_start;
    } else if (cfg_.train.hyperopt_interval > 0 && (iteration - 1) % cfg_.train.hyperopt_interval == 0) {
      kc.n_starts = cfg_.train.refit_starts;
      kc.max_evals_per_start = cfg_.train.refit_evals;
      kc.warm_theta = model_->theta();
    } else {
      kc.n_starts = 0;
      kc.max_evals_per_start = 1;  // keep theta, refactorize with the new data
      kc.warm_theta = model_->theta();
    }
    try {
      model_ = KrigingModel::fit(state_.dataset, kc, mix64(cfg_.seed) ^ mix64(0xf17 + iteration));
    } catch (const FitFailureError& e) {
      throw FitFailureError(std::string(e.what()) + " [bo engine: evals=" + std::to_string(state_.evals) +
                            ", history persisted via trace sink]");
    }
  }

  SeededInitPlan incumbent_plan() const {
    SeededInitPlan plan = cfg_.seed_plan;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < state_.dataset.y.size(); ++i)
      if (state_.dataset.y[i] > state_.dataset.y[best]) best = i;
    plan.incumbent = state_.dataset.X.row(best).transpose();
    if (plan.random_fraction >= 1.0) {
      // default split once an incumbent exists
      plan.random_fraction = 0.5;
      plan.mutate_fraction = 0.5;
    }
    return plan;
  }

  void propose_msp(const SeededInitPlan& plan, std::uint64_t iter_seed, VectorXd& proposal, double& af_value) {
    DeConfig de = cfg_.de_surrogate;
    de.seed = mix64(iter_seed) ^ 0x3359;
    const KrigingModel& model = *model_;
    const auto res = de_optimize([&](const VectorXd& x) { return penalized_mean(model, x); },
                                 problem_.space, de, plan);
    const VectorXd candidate = problem_.canonical(res.best_point);
    af_value = res.best_value;

    const bool converged = switch_check(candidate, state_.dataset.X, cfg_.switch_epsilon) ||
                           min_l1_to_data(candidate) <= cfg_.duplicate_guard;
    if (converged && cfg_.af_mode == AfMode::Switch) {
      state_.phase = BoPhase::Mes;  // one-way handover; the MES branch proposes
      return;
    }
    if (min_l1_to_data(candidate) <= cfg_.duplicate_guard) {
      proposal = dedupe_from_population(res, iter_seed);
      return;
    }
    proposal = candidate;
  }

  // true => MES termination criterion fired
  bool propose_mes(const SeededInitPlan& plan, std::uint64_t iter_seed, VectorXd& proposal, double& af_value) {
    const KrigingModel& model = *model_;
    YStarConfig ystar;
    ystar.de = cfg_.de_surrogate;
    ystar.count = cfg_.ystar_count;
    ystar.plan = plan;
    const YStarPool pool = sample_ystars(model, problem_.space, ystar, mix64(iter_seed) ^ 0x5740,
                                         [&](const VectorXd& x) { return penalized_mean(model, x); });

    DeConfig de = cfg_.de_mes;
    de.seed = mix64(iter_seed) ^ 0x4353;
    const double sd_floor = kMesSigmaFloor * model.output_std();
    const auto res = de_optimize(
        [&](const VectorXd& x) {
          const auto [mean, variance] = model.predict(x);
          const double value = mes_from_moments(mean, std::sqrt(std::max(variance, 0.0)), pool, sd_floor);
          const double lam = penalty_lambda(problem_.space.violation_of(x), cfg_.penalty.violation_scale);
          return lam * value;  // MES is nonnegative; multiplicative penalty is safe
        },
        problem_.space, de, plan);

    af_value = res.best_value;
    if (res.best_value < cfg_.epsilon2) return true;

    const VectorXd candidate = problem_.canonical(res.best_point);
    proposal = min_l1_to_data(candidate) <= cfg_.duplicate_guard ? dedupe_from_population(res, iter_seed)
                                                                 : candidate;
    return false;
  }

  // proposal collided with an evaluated sample: walk the DE population from
  // best to worst for a fresh point, falling back to random feasible draws
  VectorXd dedupe_from_population(const DeResult& res, std::uint64_t iter_seed) const {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(res.population.rows()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return res.population_values[a] > res.population_values[b];
    });
    for (const Eigen::Index i : order) {
      if (res.population_values[i] == kNegInf) continue;
      const VectorXd cand = problem_.canonical(res.population.row(i).transpose());
      if (min_l1_to_data(cand) > cfg_.duplicate_guard) return cand;
    }
    Rng rng = Rng::derive(iter_seed, 0xdedupe);
    VectorXd x(problem_.space.dim());
    for (int tries = 0; tries < 5000; ++tries) {
      for (std::size_t k = 0; k < problem_.space.dim(); ++k)
        x[static_cast<Eigen::Index>(k)] = rng.uniform(problem_.space.bounds[k].lower, problem_.space.bounds[k].upper);
      if (!problem_.space.is_feasible(x)) continue;
      const VectorXd cand = problem_.canonical(x);
      if (min_l1_to_data(cand) > cfg_.duplicate_guard) return cand;
    }
    throw Error("bo engine: could not find a non-duplicate proposal (internal invariant)");
  }

  BoResult finish() {
    BoResult result;
    result.state = std::move(state_);
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < result.state.dataset.y.size(); ++i) {
      const bool feasible = lambdas_[static_cast<std::size_t>(i)] >= 1.0;
      if (!feasible) continue;
      if (best < 0 || raw_values_[static_cast<std::size_t>(i)] > raw_values_[static_cast<std::size_t>(best)])
        best = i;
    }
    if (best < 0) {
      // nothing strictly feasible was evaluated; report the best penalized
      best = 0;
      for (Eigen::Index i = 1; i < result.state.dataset.y.size(); ++i)
        if (result.state.dataset.y[i] > result.state.dataset.y[best]) best = i;
    }
    result.best_point = result.state.dataset.X.row(best).transpose();
    result.best_value = raw_values_[static_cast<std::size_t>(best)];
    return result;
  }

  BoProblem problem_;
  BoConfig cfg_;
  TraceSink trace_;
  KrigingConfig kriging_base_;
  BoRunState state_;
  std::optional<KrigingModel> model_;
  std::vector<double> raw_values_;
  std::vector<double> lambdas_;
  double best_so_far_ = kNegInf;
  double observed_range_ = 0.0;
};

}  // namespace

BoResult run_bo(const BoProblem& problem, const BoConfig& config, const TraceSink& trace) {
  Engine engine(problem, config, trace);
  return engine.run();
}

}  // namespace wfopt
