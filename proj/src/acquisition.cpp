#include "wfopt/acquisition.hpp"

#include <algorithm>
#include <cmath>

#include "wfopt/math.hpp"
#include "wfopt/parallel.hpp"
#include "wfopt/rng.hpp"

namespace wfopt {

double mes_g(double gamma) {
  const double log_cdf = log_norm_cdf(gamma);
  const double hazard = norm_hazard(gamma);
  const double value = 0.5 * gamma * hazard - log_cdf;
  return value > 0.0 ? value : 0.0;  // clamp round-off at the gamma -> +inf end
}

double mes_from_moments(double mean, double sd, const YStarPool& pool, double sd_floor) {
  if (pool.values.empty()) throw InvalidArgument("mes: empty y* pool");
  if (!(sd > sd_floor)) return 0.0;
  double acc = 0.0;
  for (const double ystar : pool.values) acc += mes_g((ystar - mean) / sd);
  return acc / static_cast<double>(pool.values.size());
}

double msp_value(const KrigingModel& model, const VectorXd& x) { return model.predict(x).first; }

double mes_value(const KrigingModel& model, const VectorXd& x, const YStarPool& pool) {
  const auto [mean, variance] = model.predict(x);
  return mes_from_moments(mean, std::sqrt(std::max(variance, 0.0)), pool,
                          kMesSigmaFloor * model.output_std());
}

YStarPool sample_ystars(const KrigingModel& model, const DesignSpace& space, const YStarConfig& config,
                        std::uint64_t seed, const std::function<double(const VectorXd&)>& mean_objective) {
  if (config.count == 0) throw InvalidArgument("sample_ystars: K must be >= 1");
  const auto objective = mean_objective
                             ? mean_objective
                             : std::function<double(const VectorXd&)>(
                                   [&model](const VectorXd& x) { return model.predict_mean(x); });

  YStarPool pool;
  pool.values.resize(config.count);
  parallel_for(config.count, [&](std::size_t j) {
    DeConfig de = config.de;
    de.seed = mix64(seed) ^ mix64(0x9'57a5 + j);
    de.parallel_eval = false;  // the runs themselves are the parallel axis
    pool.values[j] = de_optimize(objective, space, de, config.plan).best_value;
  });

  // MES assumes y* at or above the best observation; raise any DE shortfall
  const double y_max = model.training_targets().maxCoeff();
  const double range = y_max - model.training_targets().minCoeff();
  const double floor = y_max + 1e-6 * range;
  for (double& v : pool.values) v = std::max(v, floor);
  return pool;
}

bool switch_check(const VectorXd& x_star, const MatrixXd& training_X, double epsilon) {
  if (x_star.size() != training_X.cols()) throw DimensionMismatch("switch_check: dimension mismatch");
  if (epsilon < 0.0) throw InvalidArgument("switch_check: epsilon must be >= 0");
  for (Eigen::Index i = 0; i < training_X.rows(); ++i) {
    if ((training_X.row(i).transpose() - x_star).cwiseAbs().sum() <= epsilon) return true;
  }
  return false;
}

}  // namespace wfopt
