#include "wfopt/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "wfopt/format.hpp"
#include "wfopt/parallel.hpp"
#include "wfopt/rng.hpp"
#include "wfopt/sampling.hpp"

namespace wfopt {

void AckleyConfig::validate() const {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) throw InvalidArgument("ackley: a, b, c must be positive");
  if (dimension < 1) throw InvalidArgument("ackley: dimension must be >= 1");
}

double ackley(const VectorXd& x, const AckleyConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.size()) != cfg.dimension)
    throw DimensionMismatch("ackley: point dimension mismatch");
  const double inv_d = 1.0 / static_cast<double>(cfg.dimension);
  double sq = 0.0, cs = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    cs += std::cos(cfg.c * x[i]);
  }
  return -cfg.a * std::exp(-cfg.b * std::sqrt(inv_d * sq)) - std::exp(inv_d * cs) + cfg.a + std::exp(1.0);
}

DesignSpace ackley_space(const AckleyConfig& cfg) {
  return box_space(cfg.dimension, -cfg.bound, cfg.bound);
}

BoProblem ackley_problem(const AckleyConfig& cfg) {
  BoProblem p;
  p.space = ackley_space(cfg);
  // minimization benchmark: negated at registration so every engine maximizes
  p.objective = [cfg](const VectorXd& x) { return -ackley(x, cfg); };
  return p;
}

HeuristicResult ga_baseline(const std::function<double(const VectorXd&)>& objective, const DesignSpace& space,
                            const GaConfig& config) {
  space.validate();
  if (config.population < 2 || config.tournament < 1)
    throw InvalidArgument("ga: population must be >= 2 and tournament >= 1");
  if (config.max_evals == 0) throw InvalidArgument("ga: budget must be >= 1");

  const std::size_t d = space.dim();
  const double mut_rate = config.mutation_rate > 0.0 ? config.mutation_rate : 1.0 / static_cast<double>(d);
  HeuristicResult result;
  Rng rng = Rng::derive(config.seed, 0x6a'6a);

  const std::size_t init_n = std::min(config.population, config.max_evals);
  MatrixXd pop = constrained_lhs(space, init_n, std::max<std::size_t>(1, config.oversample_factor) * init_n,
                                 mix64(config.seed) ^ 0x6a'11)
                     .points;
  VectorXd values(static_cast<Eigen::Index>(init_n));
  for (std::size_t i = 0; i < init_n; ++i) {
    values[static_cast<Eigen::Index>(i)] = objective(pop.row(static_cast<Eigen::Index>(i)).transpose());
    ++result.evals_used;
  }

  auto best_index = [&]() {
    Eigen::Index bi = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
      if (values[i] > values[bi]) bi = i;
    return bi;
  };

  auto tournament_pick = [&]() {
    Eigen::Index winner = static_cast<Eigen::Index>(rng.uniform_index(init_n));
    for (std::size_t t = 1; t < config.tournament; ++t) {
      const Eigen::Index cand = static_cast<Eigen::Index>(rng.uniform_index(init_n));
      if (values[cand] > values[winner]) winner = cand;
    }
    return winner;
  };

  while (result.evals_used < config.max_evals) {
    MatrixXd children(init_n, d);
    const Eigen::Index elite = best_index();
    children.row(0) = pop.row(elite);
    for (std::size_t i = 1; i < init_n; ++i) {
      const Eigen::Index p1 = tournament_pick();
      const Eigen::Index p2 = tournament_pick();
      VectorXd child = pop.row(p1).transpose();
      if (rng.uniform() < config.crossover) {
        for (std::size_t k = 0; k < d; ++k)
          if (rng.uniform() < 0.5) child[static_cast<Eigen::Index>(k)] = pop(p2, static_cast<Eigen::Index>(k));
      }
      for (std::size_t k = 0; k < d; ++k) {
        if (rng.uniform() < mut_rate) {
          child[static_cast<Eigen::Index>(k)] += config.mutation_scale * space.bounds[k].span() * rng.normal();
        }
      }
      children.row(static_cast<Eigen::Index>(i)) = space.clip(child).transpose();
    }
    // elite is carried over with its known value; children consume budget
    VectorXd child_values = values;
    child_values[0] = values[elite];
    VectorXd elite_row = children.row(0).transpose();
    for (std::size_t i = 1; i < init_n && result.evals_used < config.max_evals; ++i) {
      child_values[static_cast<Eigen::Index>(i)] = objective(children.row(static_cast<Eigen::Index>(i)).transpose());
      ++result.evals_used;
      pop.row(static_cast<Eigen::Index>(i)) = children.row(static_cast<Eigen::Index>(i));
      values[static_cast<Eigen::Index>(i)] = child_values[static_cast<Eigen::Index>(i)];
    }
    pop.row(0) = elite_row.transpose();
    values[0] = child_values[0];
  }

  const Eigen::Index bi = best_index();
  result.best_point = pop.row(bi).transpose();
  result.best_value = values[bi];
  return result;
}

HeuristicResult sa_baseline(const std::function<double(const VectorXd&)>& objective, const DesignSpace& space,
                            const SaConfig& config) {
  space.validate();
  if (config.max_evals == 0) throw InvalidArgument("sa: budget must be >= 1");
  if (!(config.cooling > 0.0 && config.cooling <= 1.0)) throw InvalidArgument("sa: cooling must be in (0, 1]");

  const std::size_t d = space.dim();
  Rng rng = Rng::derive(config.seed, 0x5a'5a);
  HeuristicResult result;

  const std::size_t probes = std::max<std::size_t>(1, std::min(config.init_probes, config.max_evals));
  VectorXd current(static_cast<Eigen::Index>(d));
  double current_value = -std::numeric_limits<double>::infinity();
  std::vector<double> probe_values;
  for (std::size_t i = 0; i < probes; ++i) {
    VectorXd x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k)
      x[static_cast<Eigen::Index>(k)] = rng.uniform(space.bounds[k].lower, space.bounds[k].upper);
    const double v = objective(x);
    ++result.evals_used;
    probe_values.push_back(v);
    if (v > current_value) {
      current_value = v;
      current = x;
    }
  }
  result.best_point = current;
  result.best_value = current_value;

  double temperature = config.initial_temperature;
  if (config.auto_temperature) {
    double mean = 0.0;
    for (double v : probe_values) mean += v;
    mean /= static_cast<double>(probe_values.size());
    double acc = 0.0;
    for (double v : probe_values) acc += (v - mean) * (v - mean);
    temperature = std::sqrt(acc / static_cast<double>(probe_values.size()));
    if (!(temperature > 0.0)) temperature = 1.0;
  }

  while (result.evals_used < config.max_evals) {
    VectorXd proposal = current;
    for (std::size_t k = 0; k < d; ++k)
      proposal[static_cast<Eigen::Index>(k)] += config.step_scale * space.bounds[k].span() * rng.normal();
    proposal = space.clip(proposal);
    const double v = objective(proposal);
    ++result.evals_used;
    const double delta = v - current_value;
    const bool accept = delta >= 0.0 || (temperature > 0.0 && rng.uniform() < std::exp(delta / temperature));
    if (accept) {
      current = proposal;
      current_value = v;
    }
    if (v > result.best_value) {
      result.best_value = v;
      result.best_point = proposal;
    }
    temperature *= config.cooling;
  }
  return result;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::SwitchAf: return "switch-af";
    case Method::MspOnly: return "msp-only";
    case Method::MesOnly: return "mes-only";
    case Method::DirectDe: return "direct-de";
    case Method::DirectGa: return "direct-ga";
    case Method::DirectSa: return "direct-sa";
  }
  return "switch-af";
}

Method method_from_string(const std::string& name) {
  if (name == "switch-af") return Method::SwitchAf;
  if (name == "msp-only") return Method::MspOnly;
  if (name == "mes-only") return Method::MesOnly;
  if (name == "direct-de") return Method::DirectDe;
  if (name == "direct-ga") return Method::DirectGa;
  if (name == "direct-sa") return Method::DirectSa;
  throw ConfigError("unknown method '" + name + "'");
}

namespace {

RunRecord run_single(const BoProblem& problem, const ExperimentPlan& plan, std::uint64_t seed) {
  RunRecord rec;
  rec.seed = seed;
  try {
    if (plan.method == Method::SwitchAf || plan.method == Method::MspOnly || plan.method == Method::MesOnly) {
      BoConfig bo = plan.bo;
      bo.budget = plan.budget;
      bo.seed = seed;
      bo.af_mode = plan.method == Method::SwitchAf  ? AfMode::Switch
                   : plan.method == Method::MspOnly ? AfMode::MspOnly
                                                    : AfMode::MesOnly;
      double best = -std::numeric_limits<double>::infinity();
      const auto result = run_bo(problem, bo, [&](const TraceRow& row) {
        best = std::max(best, row.penalized);
        rec.best_trace.push_back(best);
      });
      rec.evals = result.state.evals;
      rec.best = rec.best_trace.empty() ? result.best_value : rec.best_trace.back();
      return rec;
    }

    // direct methods drive the penalized objective and count every call
    const auto pen = [&](const VectorXd& x) {
      const double lam = penalty_lambda(problem.space.violation_of(x), plan.bo.penalty.violation_scale);
      const double raw = problem.objective(problem.canonical(x));
      const double range = plan.bo.penalty.range_estimate > 0.0 ? plan.bo.penalty.range_estimate
                                                                : std::abs(raw) + 1.0;
      return apply_penalty(raw, lam, plan.bo.penalty.mode, range);
    };
    const auto traced = [&](const VectorXd& x) {
      const double v = pen(x);
      const double prev = rec.best_trace.empty() ? -std::numeric_limits<double>::infinity() : rec.best_trace.back();
      rec.best_trace.push_back(std::max(prev, v));
      return v;
    };

    if (plan.method == Method::DirectDe) {
      DeConfig de = plan.de;
      de.seed = seed;
      de.max_evals = plan.budget;
      de.max_generations = std::max<std::size_t>(de.max_generations, plan.budget);  // budget is the stop
      de.parallel_eval = false;  // sequential so the trace matches call order
      SeededInitPlan no_incumbent;
      const auto res = de_optimize(traced, problem.space, de, no_incumbent);
      rec.evals = res.evals_used;
      rec.best = res.best_value;
    } else if (plan.method == Method::DirectGa) {
      GaConfig ga = plan.ga;
      ga.seed = seed;
      ga.max_evals = plan.budget;
      const auto res = ga_baseline(traced, problem.space, ga);
      rec.evals = res.evals_used;
      rec.best = res.best_value;
    } else {
      SaConfig sa = plan.sa;
      sa.seed = seed;
      sa.max_evals = plan.budget;
      const auto res = sa_baseline(traced, problem.space, sa);
      rec.evals = res.evals_used;
      rec.best = res.best_value;
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

double ExperimentResult::median_best() const {
  std::vector<double> values;
  for (const auto& r : runs)
    if (!r.failed) values.push_back(r.best);
  if (values.empty()) throw Error("experiment: every run failed");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ExperimentResult run_experiment(const BoProblem& problem, const ExperimentPlan& plan) {
  if (plan.repeats < 1) throw InvalidArgument("experiment: repeats must be >= 1");
  ExperimentResult result;
  result.plan = plan;
  result.runs.resize(plan.repeats);
  parallel_for(plan.repeats, [&](std::size_t i) {
    result.runs[i] = run_single(problem, plan, plan.base_seed + i);
  });
  return result;
}

void write_result_table(const std::filesystem::path& path, const ExperimentResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write result table: " + path.string());
  out << "# objective " << result.plan.objective_id << " method " << to_string(result.plan.method)
      << " budget " << result.plan.budget << "\n";
  out << "# seed eval_index best_so_far\n";
  for (const auto& run : result.runs) {
    if (run.failed) {
      out << "# seed " << run.seed << " failed: " << run.error << "\n";
      continue;
    }
    for (std::size_t i = 0; i < run.best_trace.size(); ++i)
      out << run.seed << " " << (i + 1) << " " << full_precision(run.best_trace[i]) << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace wfopt
