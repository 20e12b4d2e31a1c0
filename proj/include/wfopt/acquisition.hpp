#pragma once

#include <cstdint>
#include <vector>

#include "wfopt/de.hpp"
#include "wfopt/kriging.hpp"
#include "wfopt/types.hpp"

namespace wfopt {

// Sampled optimum values feeding the MES acquisition.
struct YStarPool {
  std::vector<double> values;
};

struct SwitchConfig {
  double epsilon = 0.0;  // L1 threshold of the MSP-convergence test (0 for discrete problems)
};

// per-term information gain g(gamma) = gamma*phi/(2*Phi) - ln Phi
double mes_g(double gamma);

// MES from predictive moments; sd below the floor carries no information
double mes_from_moments(double mean, double sd, const YStarPool& pool, double sd_floor);

// acquisition = surrogate mean
double msp_value(const KrigingModel& model, const VectorXd& x);

double mes_value(const KrigingModel& model, const VectorXd& x, const YStarPool& pool);

struct YStarConfig {
  DeConfig de;           // surrogate-search settings (one run per pool entry)
  std::size_t count = 10;  // K
  SeededInitPlan plan;   // typically incumbent-seeded
};

// K independent DE maximizations of the surrogate mean (or a caller-supplied
// penalized mean) from derived seeds; entries are floored to the observed
// maximum plus a small offset.
YStarPool sample_ystars(const KrigingModel& model, const DesignSpace& space, const YStarConfig& config,
                        std::uint64_t seed, const std::function<double(const VectorXd&)>& mean_objective = {});

// true iff some training row lies within L1 distance epsilon of x_star
bool switch_check(const VectorXd& x_star, const MatrixXd& training_X, double epsilon);

inline constexpr double kMesSigmaFloor = 1e-12;  // in normalized output units

}  // namespace wfopt
