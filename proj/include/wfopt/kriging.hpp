#pragma once

#include <Eigen/Cholesky>
#include <cstdint>
#include <iosfwd>
#include <optional>

#include "wfopt/types.hpp"

namespace wfopt {

struct KrigingConfig {
  std::vector<Interval> bounds;  // input normalization; must match data dimension

  double p = 2.0;          // power-exponential exponent, fixed unless optimize_p
  bool optimize_p = false;  // search p in [1, 2] alongside theta

  // log-space search box for the per-dimension weights (normalized inputs)
  double theta_lo = 1e-3;
  double theta_hi = 1e2;

  int n_starts = 5;              // LHS multi-starts over log10(theta)
  int max_evals_per_start = 0;   // 0 => 60 + 20*d, capped at 400; 1 => evaluate start only
  std::optional<VectorXd> warm_theta;  // extra start (normalized-space theta)

  double duplicate_tol = 1e-12;  // per normalized coordinate
  double nugget_floor = 1e-10;   // relative to process variance
  double nugget_cap = 1e-4;
};

// Constant-trend Kriging with power-exponential correlation. Immutable once
// fitted; prediction is const and thread-safe.
class KrigingModel {
 public:
  static KrigingModel fit(const Dataset& data, const KrigingConfig& config, std::uint64_t seed);

  // (mean, variance) in objective units; variance clipped at zero
  std::pair<double, double> predict(const VectorXd& x) const;
  double predict_mean(const VectorXd& x) const;

  // elementwise identical to per-point predict (rows of X are points)
  std::pair<VectorXd, VectorXd> predict_batch(const MatrixXd& X) const;
  VectorXd predict_mean_batch(const MatrixXd& X) const;

  std::size_t size() const { return static_cast<std::size_t>(Xn_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(Xn_.cols()); }

  double beta() const { return y_mean_ + y_std_ * beta_n_; }
  double sigma2() const { return y_std_ * y_std_ * sigma2_n_; }
  const VectorXd& theta() const { return theta_; }  // normalized-input weights
  double p() const { return p_; }
  double nugget() const { return nugget_; }
  double log_likelihood() const { return loglik_; }
  double output_std() const { return y_std_; }
  const VectorXd& training_targets() const { return y_raw_; }
  const MatrixXd& training_inputs() const { return X_raw_; }

  // key-value text dump at full decimal precision
  void dump(std::ostream& os) const;

 private:
  KrigingModel() = default;
  void predict_normalized(const VectorXd& xn, double& mean_n, double& var_n) const;
  VectorXd normalize(const VectorXd& x) const;

  MatrixXd X_raw_;
  VectorXd y_raw_;
  MatrixXd Xn_;  // n x d in [0,1]
  VectorXd yn_;  // standardized
  VectorXd x_lo_, x_span_;
  double y_mean_ = 0.0, y_std_ = 1.0;

  VectorXd theta_;
  double p_ = 2.0;
  double beta_n_ = 0.0;
  double sigma2_n_ = 0.0;
  double nugget_ = 0.0;
  double loglik_ = 0.0;

  MatrixXd chol_L_;          // lower Cholesky factor of R + nugget*I
  VectorXd alpha_;           // R^-1 (yn - beta 1)
  VectorXd w_;               // R^-1 1
  double one_Rinv_one_ = 1.0;
};

}  // namespace wfopt
