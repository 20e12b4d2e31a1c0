#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "wfopt/acquisition.hpp"
#include "wfopt/de.hpp"
#include "wfopt/kriging.hpp"
#include "wfopt/types.hpp"

namespace wfopt {

enum class BoPhase { Msp, Mes };
enum class AfMode { Switch, MspOnly, MesOnly };
enum class TerminationReason { None, Budget, Variance, MesThreshold };

std::string to_string(TerminationReason r);

enum class PenaltyMode { Multiplicative, Subtractive };

// lambda(x) = 1/(1 + violation/scale): 1 when feasible, in (0,1) otherwise
struct PenaltyConfig {
  double violation_scale = 1.0;  // design units
  PenaltyMode mode = PenaltyMode::Multiplicative;
  double range_estimate = 0.0;  // subtractive mode; 0 = derive from observed spread
};

double penalty_lambda(double violation, double scale);

// multiplicative: lambda * value; subtractive keeps "penalty strictly
// worsens" for sign-changing objectives: value - (1 - lambda) * range
double apply_penalty(double value, double lambda, PenaltyMode mode, double range_estimate);

// penalty-wrapped objective for direct use (baselines, tests)
std::function<double(const VectorXd&)> penalized(const std::function<double(const VectorXd&)>& objective,
                                                 const DesignSpace& space, const PenaltyConfig& penalty);

// population standard deviation of the top-n objective values
std::pair<double, bool> variance_criterion(const Dataset& data, std::size_t elite_size, double epsilon1);

struct TraceRow {
  std::size_t eval_index = 0;  // 1-based
  std::string phase;           // init | msp | mes | direct
  VectorXd point;
  double raw = 0.0;
  double penalized = 0.0;
  double best_so_far = 0.0;
};
using TraceSink = std::function<void(const TraceRow&)>;

struct BoHistoryEntry {
  std::size_t iteration = 0;  // 0 for initial-design evaluations
  VectorXd point;
  double raw = 0.0;
  double penalized = 0.0;
  BoPhase phase = BoPhase::Msp;
  double af_value = 0.0;
};

struct BoRunState {
  Dataset dataset;  // canonical inputs, penalized objective values
  BoPhase phase = BoPhase::Msp;
  std::size_t evals = 0;
  std::vector<BoHistoryEntry> history;
  TerminationReason terminated_by = TerminationReason::None;
};

// Engine-level surrogate retraining cadence: full multi-start once, then
// warm-started re-optimization every hyperopt_interval infills.
struct TrainSchedule {
  int initial_starts = 5;
  int initial_evals_per_start = 0;  // 0 = auto
  std::size_t hyperopt_interval = 10;
  int refit_starts = 1;  // fresh starts besides the warm one
  int refit_evals = 60;
};

struct BoConfig {
  std::size_t n_initial = 10;
  std::size_t budget = 100;     // N_max on objective evaluations
  std::size_t elite_size = 20;  // population size of the variance criterion
  double epsilon1 = 0.1;        // variance limit; triggers on var <= eps1
  double epsilon2 = 1e-4;       // MES limit; triggers on max AF < eps2 (strict)
  double switch_epsilon = 0.0;  // L1 threshold of the MSP->MES criterion
  std::size_t ystar_count = 10;  // K
  DeConfig de_surrogate;
  DeConfig de_mes;
  AfMode af_mode = AfMode::Switch;
  PenaltyConfig penalty;
  SeededInitPlan seed_plan;  // incumbent is supplied by the engine each iteration
  std::size_t oversample_factor = 20;
  TrainSchedule train;
  bool optimize_p = false;
  double duplicate_guard = 1e-9;  // L1 collision threshold for proposals
  std::uint64_t seed = 0;

  void validate() const;
};

// One expensive-objective problem: raw objective over canonical points plus
// an optional canonicalization (grid snapping for discrete layouts).
struct BoProblem {
  DesignSpace space;
  std::function<double(const VectorXd&)> objective;
  std::function<VectorXd(const VectorXd&)> canonicalize;  // empty = identity

  VectorXd canonical(const VectorXd& x) const { return canonicalize ? canonicalize(x) : x; }
};

struct BoResult {
  VectorXd best_point;
  double best_value = 0.0;  // raw objective of the best feasible evaluation
  BoRunState state;
};

BoResult run_bo(const BoProblem& problem, const BoConfig& config, const TraceSink& trace = {});

}  // namespace wfopt
