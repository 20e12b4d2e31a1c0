#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wfopt/bo.hpp"
#include "wfopt/de.hpp"
#include "wfopt/types.hpp"

namespace wfopt {

struct AckleyConfig {
  double a = 20.0;
  double b = 0.2;
  double c = 6.283185307179586476925287;  // 2*pi
  std::size_t dimension = 2;
  double bound = 32.768;  // +/- per axis

  void validate() const;
};

double ackley(const VectorXd& x, const AckleyConfig& cfg);
DesignSpace ackley_space(const AckleyConfig& cfg);

// maximization problem wrapping the negated Ackley function
BoProblem ackley_problem(const AckleyConfig& cfg);

struct GaConfig {
  std::size_t population = 70;
  std::size_t tournament = 3;
  double crossover = 0.9;
  double mutation_rate = 0.0;   // 0 = 1/d
  double mutation_scale = 0.1;  // gaussian sd as a fraction of axis span
  std::size_t max_evals = 1000;
  std::size_t oversample_factor = 20;
  std::uint64_t seed = 0;
};

struct SaConfig {
  bool auto_temperature = true;      // set T0 from the initial-sample value spread
  double initial_temperature = 0.0;  // used when auto_temperature is off; 0 = greedy
  double cooling = 0.995;            // geometric, per step
  double step_scale = 0.1;           // gaussian proposal sd as a fraction of axis span
  std::size_t init_probes = 10;      // counted inside the budget
  std::size_t max_evals = 1000;
  std::uint64_t seed = 0;
};

struct HeuristicResult {
  VectorXd best_point;
  double best_value = 0.0;
  std::size_t evals_used = 0;
};

// generational GA: tournament selection, uniform crossover, per-gene gaussian
// mutation, single-elite carryover; honors max_evals exactly
HeuristicResult ga_baseline(const std::function<double(const VectorXd&)>& objective, const DesignSpace& space,
                            const GaConfig& config);

// simulated annealing: geometric cooling, gaussian proposals clipped to the
// box; honors max_evals exactly
HeuristicResult sa_baseline(const std::function<double(const VectorXd&)>& objective, const DesignSpace& space,
                            const SaConfig& config);

enum class Method { SwitchAf, MspOnly, MesOnly, DirectDe, DirectGa, DirectSa };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct ExperimentPlan {
  std::string objective_id;  // label for the result table
  Method method = Method::SwitchAf;
  std::size_t budget = 200;
  std::size_t repeats = 1;
  std::uint64_t base_seed = 0;

  BoConfig bo;    // BO methods; seed/budget overwritten per repeat
  DeConfig de;    // direct-de
  GaConfig ga;
  SaConfig sa;
};

struct RunRecord {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::size_t evals = 0;
  double best = 0.0;                // best penalized value (raw when feasible)
  std::vector<double> best_trace;   // best-so-far after every evaluation
};

struct ExperimentResult {
  ExperimentPlan plan;
  std::vector<RunRecord> runs;

  double median_best() const;  // over non-failed runs
};

ExperimentResult run_experiment(const BoProblem& problem, const ExperimentPlan& plan);

// rows: seed eval_index best_so_far
void write_result_table(const std::filesystem::path& path, const ExperimentResult& result);

}  // namespace wfopt
