#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "wfopt/types.hpp"

namespace wfopt {

enum class DeStrategy { Best1Bin, Best2Bin };

struct DeConfig {
  std::size_t population_size = 70;
  double mutation_low = 0.5;   // dither range for F, drawn per generation
  double mutation_high = 1.2;
  double recombination = 0.7;  // crossover probability
  DeStrategy strategy = DeStrategy::Best1Bin;
  double tolerance = 1e-3;     // relative population-spread convergence
  std::size_t max_generations = 300;
  std::uint64_t seed = 0;
  std::size_t max_evals = 0;        // 0 = unlimited; otherwise exact objective-call cap
  std::size_t oversample_factor = 20;  // constrained seeding of the population
  bool parallel_eval = true;

  void validate() const;
};

// Population seeding: a constrained-random share plus a share made by
// perturbing the incumbent best sample.
struct SeededInitPlan {
  double random_fraction = 1.0;
  double mutate_fraction = 0.0;
  std::optional<VectorXd> incumbent;
  double mutate_prob = 0.3;    // per-coordinate resample probability
  double mutate_radius = 0.1;  // fraction of axis span

  void validate() const;
};

struct DeResult {
  VectorXd best_point;
  double best_value = 0.0;
  std::size_t evals_used = 0;
  std::size_t generations = 0;
  MatrixXd population;         // final population, row-aligned with values
  VectorXd population_values;  // -inf marks never-evaluated individuals
};

MatrixXd seeded_population(const DesignSpace& space, const DeConfig& config, const SeededInitPlan& plan,
                           std::uint64_t seed);

// Bounded DE, maximizing. Individuals are clipped to the box; feasibility
// beyond the box is the objective's business (callers wrap a penalty).
DeResult de_optimize(const std::function<double(const VectorXd&)>& objective, const DesignSpace& space,
                     const DeConfig& config, const SeededInitPlan& plan);

namespace de_detail {
// One trial vector; exposed so strategy arithmetic is testable against hand
// computation with fixed donors and F.
VectorXd make_trial(const VectorXd& target, const VectorXd& best, const std::vector<VectorXd>& donors,
                    double f, double recombination, DeStrategy strategy, const DesignSpace& space,
                    std::size_t force_coord, const std::function<double()>& next_uniform);
}  // namespace de_detail

}  // namespace wfopt
