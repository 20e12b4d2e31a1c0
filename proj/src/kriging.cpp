#include "wfopt/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "wfopt/format.hpp"
#include "wfopt/parallel.hpp"
#include "wfopt/rng.hpp"
#include "wfopt/sampling.hpp"

namespace wfopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Correlation of two normalized rows given theta, p.
// R_ij = exp(-sum_k theta_k |xi_k - xj_k|^p)
MatrixXd correlation_matrix(const MatrixXd& Xn, const VectorXd& theta, double p) {
  const Eigen::Index n = Xn.rows();
  MatrixXd R = MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < Xn.cols(); ++k) {
    const auto col = Xn.col(k);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double xjk = col[j];
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double d = std::abs(col[i] - xjk);
        R(i, j) += theta[k] * (p == 2.0 ? d * d : std::pow(d, p));
      }
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    R(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      R(i, j) = std::exp(-R(i, j));
      R(j, i) = R(i, j);
    }
  }
  return R;
}

struct GlsFit {
  bool ok = false;
  double beta = 0.0;
  double sigma2 = 0.0;
  double loglik = -kInf;
  Eigen::LLT<MatrixXd> llt;
};

// Factorize R + nugget*I and compute the closed-form GLS estimates and the
// concentrated log-likelihood.
GlsFit gls_likelihood(const MatrixXd& Xn, const VectorXd& yn, const VectorXd& theta, double p,
                      double nugget) {
  GlsFit fit;
  MatrixXd R = correlation_matrix(Xn, theta, p);
  R.diagonal().array() += nugget;
  fit.llt.compute(R);
  if (fit.llt.info() != Eigen::Success) return fit;

  const Eigen::Index n = Xn.rows();
  const VectorXd ones = VectorXd::Ones(n);
  const VectorXd Rinv_y = fit.llt.solve(yn);
  const VectorXd Rinv_1 = fit.llt.solve(ones);
  const double one_R_one = ones.dot(Rinv_1);
  if (!(one_R_one > 0.0)) return fit;

  fit.beta = ones.dot(Rinv_y) / one_R_one;
  const VectorXd resid = yn - fit.beta * ones;
  fit.sigma2 = std::max(resid.dot(Rinv_y - fit.beta * Rinv_1) / static_cast<double>(n), 0.0);

  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(fit.llt.matrixLLT()(i, i));
  fit.loglik = -0.5 * (static_cast<double>(n) * std::log(std::max(fit.sigma2, 1e-300)) + logdet);
  fit.ok = std::isfinite(fit.loglik);
  return fit;
}

// Box-constrained Nelder-Mead, minimizing. Vertices are clamped into the box
// before evaluation. Returns best point ever evaluated.
struct NmResult {
  VectorXd x;
  double value = kInf;
  int evals = 0;
};

NmResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& x0,
                     const VectorXd& lo, const VectorXd& hi, double step, int max_evals) {
  const Eigen::Index d = x0.size();
  NmResult result;
  auto clamp = [&](VectorXd v) {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = std::min(std::max(v[i], lo[i]), hi[i]);
    return v;
  };
  auto eval = [&](const VectorXd& v) {
    const double val = f(v);
    ++result.evals;
    if (val < result.value) {
      result.value = val;
      result.x = v;
    }
    return val;
  };

  std::vector<VectorXd> simplex;
  std::vector<double> fv;
  simplex.push_back(clamp(x0));
  fv.push_back(eval(simplex[0]));
  for (Eigen::Index i = 0; i < d && result.evals < max_evals; ++i) {
    VectorXd v = simplex[0];
    v[i] += (v[i] + step <= hi[i]) ? step : -step;
    simplex.push_back(clamp(v));
    fv.push_back(eval(simplex.back()));
  }
  if (simplex.size() < static_cast<std::size_t>(d) + 1) return result;

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  std::vector<std::size_t> idx(simplex.size());
  while (result.evals < max_evals) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<VectorXd> s2;
      std::vector<double> f2;
      for (auto i : idx) {
        s2.push_back(simplex[i]);
        f2.push_back(fv[i]);
      }
      simplex.swap(s2);
      fv.swap(f2);
    }
    double spread = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
      spread = std::max(spread, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    if (spread < 1e-6 && std::abs(fv.back() - fv.front()) < 1e-10 * (std::abs(fv.front()) + 1.0)) break;

    VectorXd centroid = VectorXd::Zero(d);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(simplex.size() - 1);

    const VectorXd reflected = clamp(centroid + alpha * (centroid - simplex.back()));
    const double fr = eval(reflected);
    if (fr < fv.front()) {
      const VectorXd expanded = clamp(centroid + gamma * (reflected - centroid));
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex.back() = expanded;
        fv.back() = fe;
      } else {
        simplex.back() = reflected;
        fv.back() = fr;
      }
    } else if (fr < fv[fv.size() - 2]) {
      simplex.back() = reflected;
      fv.back() = fr;
    } else {
      const VectorXd contracted = clamp(centroid + rho * (simplex.back() - centroid));
      const double fc = eval(contracted);
      if (fc < fv.back()) {
        simplex.back() = contracted;
        fv.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size() && result.evals < max_evals; ++i) {
          simplex[i] = clamp(simplex[0] + sigma * (simplex[i] - simplex[0]));
          fv[i] = eval(simplex[i]);
        }
      }
    }
  }
  return result;
}

void check_duplicates(const MatrixXd& Xn, double tol) {
  const Eigen::Index n = Xn.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return Xn(a, 0) < Xn(b, 0); });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (Xn(order[j], 0) - Xn(order[i], 0) > tol) break;
      if (((Xn.row(order[i]) - Xn.row(order[j])).cwiseAbs().maxCoeff() <= tol))
        throw DuplicateSampleError("kriging fit: duplicate rows " + std::to_string(order[i]) + " and " +
                                   std::to_string(order[j]) + " (within tolerance)");
    }
  }
}

}  // namespace

KrigingModel KrigingModel::fit(const Dataset& data, const KrigingConfig& config, std::uint64_t seed) {
  const Eigen::Index n = data.X.rows();
  const Eigen::Index d = data.X.cols();
  if (n < 2) throw InvalidArgument("kriging fit: at least 2 samples required");
  if (data.y.size() != n) throw DimensionMismatch("kriging fit: |y| != rows of X");
  if (config.bounds.size() != static_cast<std::size_t>(d))
    throw DimensionMismatch("kriging fit: bounds/dimension mismatch");

  KrigingModel m;
  m.X_raw_ = data.X;
  m.y_raw_ = data.y;
  m.x_lo_.resize(d);
  m.x_span_.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto& b = config.bounds[static_cast<std::size_t>(k)];
    if (!(b.lower < b.upper)) throw InvalidArgument("kriging fit: invalid bounds");
    m.x_lo_[k] = b.lower;
    m.x_span_[k] = b.span();
  }
  m.Xn_ = (data.X.rowwise() - m.x_lo_.transpose()).array().rowwise() / m.x_span_.transpose().array();

  check_duplicates(m.Xn_, config.duplicate_tol);

  m.y_mean_ = data.y.mean();
  const double var = (data.y.array() - m.y_mean_).square().sum() / static_cast<double>(n);
  m.y_std_ = std::sqrt(var);
  if (!(m.y_std_ > 0.0)) m.y_std_ = 1.0;  // constant outputs: keep the transform invertible
  m.yn_ = (data.y.array() - m.y_mean_) / m.y_std_;

  const double lz = std::log10(config.theta_lo);
  const double hz = std::log10(config.theta_hi);
  const bool with_p = config.optimize_p;
  const Eigen::Index dim_z = with_p ? d + 1 : d;

  // search space: log10(theta) per dimension, optionally p in [1,2]
  VectorXd zlo(dim_z), zhi(dim_z);
  zlo.head(d).setConstant(lz);
  zhi.head(d).setConstant(hz);
  if (with_p) {
    zlo[d] = 1.0;
    zhi[d] = 2.0;
  }

  double nugget = config.nugget_floor;
  double best_val = kInf;
  VectorXd best_z;

  auto objective_at = [&](const VectorXd& z) {
    VectorXd theta(d);
    for (Eigen::Index k = 0; k < d; ++k) theta[k] = std::pow(10.0, z[k]);
    const double p = with_p ? z[d] : config.p;
    const GlsFit fit = gls_likelihood(m.Xn_, m.yn_, theta, p, nugget);
    return fit.ok ? -fit.loglik : kInf;
  };

  std::vector<VectorXd> starts;
  if (config.n_starts > 0) {
    DesignSpace zspace;
    for (Eigen::Index k = 0; k < dim_z; ++k) zspace.bounds.push_back({zlo[k], zhi[k]});
    const auto batch = standard_lhs(zspace, static_cast<std::size_t>(config.n_starts), mix64(seed) ^ 0x5eedu);
    for (Eigen::Index i = 0; i < batch.points.rows(); ++i) starts.push_back(batch.points.row(i).transpose());
  }
  if (config.warm_theta && config.warm_theta->size() == d) {
    VectorXd z(dim_z);
    for (Eigen::Index k = 0; k < d; ++k)
      z[k] = std::clamp(std::log10(std::max((*config.warm_theta)[k], 1e-300)), lz, hz);
    if (with_p) z[d] = std::clamp(config.p, 1.0, 2.0);
    starts.push_back(z);
  }
  if (starts.empty()) {
    VectorXd z = 0.5 * (zlo + zhi);
    starts.push_back(z);
  }

  int budget = config.max_evals_per_start;
  if (budget <= 0) budget = std::min<int>(60 + 20 * static_cast<int>(d), 400);

  // escalate the nugget only if every candidate failed to factorize
  while (true) {
    for (const auto& s : starts) {
      if (budget == 1) {
        const double v = objective_at(s);
        if (v < best_val) {
          best_val = v;
          best_z = s;
        }
      } else {
        const NmResult r = nelder_mead(objective_at, s, zlo, zhi, 0.5, budget);
        if (r.value < best_val) {
          best_val = r.value;
          best_z = r.x;
        }
      }
    }
    if (best_val < kInf) break;
    nugget *= 10.0;
    if (nugget > config.nugget_cap) break;
  }

  if (!(best_val < kInf)) {
    // report conditioning of the base correlation matrix at mid-range theta
    VectorXd theta_mid = VectorXd::Constant(d, std::pow(10.0, 0.5 * (lz + hz)));
    MatrixXd R = correlation_matrix(m.Xn_, theta_mid, config.p);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(R, Eigen::EigenvaluesOnly);
    const double emax = es.eigenvalues().maxCoeff();
    const double emin = es.eigenvalues().minCoeff();
    throw FitFailureError("kriging fit: correlation matrix not positive definite at nugget cap (condition estimate " +
                          full_precision(emax / std::max(emin, 1e-300)) + ")");
  }

  m.theta_.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) m.theta_[k] = std::pow(10.0, best_z[k]);
  m.p_ = with_p ? best_z[d] : config.p;

  // final factorization at the chosen theta, escalating the nugget if needed
  GlsFit fit;
  while (true) {
    fit = gls_likelihood(m.Xn_, m.yn_, m.theta_, m.p_, nugget);
    if (fit.ok) break;
    nugget *= 10.0;
    if (nugget > config.nugget_cap)
      throw FitFailureError("kriging fit: chosen hyperparameters not factorizable at nugget cap");
  }

  m.nugget_ = nugget;
  m.beta_n_ = fit.beta;
  m.sigma2_n_ = fit.sigma2;
  m.loglik_ = fit.loglik;
  m.chol_L_ = fit.llt.matrixL();

  const VectorXd ones = VectorXd::Ones(n);
  m.alpha_ = fit.llt.solve(m.yn_ - fit.beta * ones);
  m.w_ = fit.llt.solve(ones);
  m.one_Rinv_one_ = ones.dot(m.w_);
  return m;
}

VectorXd KrigingModel::normalize(const VectorXd& x) const {
  if (x.size() != Xn_.cols()) throw DimensionMismatch("kriging predict: point dimension mismatch");
  return (x - x_lo_).cwiseQuotient(x_span_);
}

void KrigingModel::predict_normalized(const VectorXd& xn, double& mean_n, double& var_n) const {
  const Eigen::Index n = Xn_.rows();
  VectorXd dist = VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < Xn_.cols(); ++k) {
    if (p_ == 2.0) {
      dist.array() += theta_[k] * (Xn_.col(k).array() - xn[k]).square();
    } else {
      dist.array() += theta_[k] * (Xn_.col(k).array() - xn[k]).abs().pow(p_);
    }
  }
  const VectorXd r = (-dist.array()).exp();

  mean_n = beta_n_ + r.dot(alpha_);

  // ordinary-Kriging MSE: sigma^2 (1 - r'R^-1 r + (1 - 1'R^-1 r)^2 / (1'R^-1 1))
  VectorXd v = r;
  chol_L_.triangularView<Eigen::Lower>().solveInPlace(v);
  const double u = 1.0 - w_.dot(r);
  var_n = sigma2_n_ * (1.0 - v.squaredNorm() + u * u / one_Rinv_one_);
  if (var_n < 0.0) var_n = 0.0;
}

std::pair<double, double> KrigingModel::predict(const VectorXd& x) const {
  double mean_n, var_n;
  predict_normalized(normalize(x), mean_n, var_n);
  return {y_mean_ + y_std_ * mean_n, y_std_ * y_std_ * var_n};
}

double KrigingModel::predict_mean(const VectorXd& x) const {
  const VectorXd xn = normalize(x);
  VectorXd dist = VectorXd::Zero(Xn_.rows());
  for (Eigen::Index k = 0; k < Xn_.cols(); ++k) {
    if (p_ == 2.0) {
      dist.array() += theta_[k] * (Xn_.col(k).array() - xn[k]).square();
    } else {
      dist.array() += theta_[k] * (Xn_.col(k).array() - xn[k]).abs().pow(p_);
    }
  }
  return y_mean_ + y_std_ * (beta_n_ + (-dist.array()).exp().matrix().dot(alpha_));
}

std::pair<VectorXd, VectorXd> KrigingModel::predict_batch(const MatrixXd& X) const {
  if (X.cols() != Xn_.cols()) throw DimensionMismatch("kriging predict_batch: dimension mismatch");
  VectorXd means(X.rows()), vars(X.rows());
  parallel_for(static_cast<std::size_t>(X.rows()), [&](std::size_t i) {
    const auto [mu, s2] = predict(X.row(static_cast<Eigen::Index>(i)).transpose());
    means[static_cast<Eigen::Index>(i)] = mu;
    vars[static_cast<Eigen::Index>(i)] = s2;
  });
  return {std::move(means), std::move(vars)};
}

VectorXd KrigingModel::predict_mean_batch(const MatrixXd& X) const {
  if (X.cols() != Xn_.cols()) throw DimensionMismatch("kriging predict_mean_batch: dimension mismatch");
  VectorXd means(X.rows());
  parallel_for(static_cast<std::size_t>(X.rows()), [&](std::size_t i) {
    means[static_cast<Eigen::Index>(i)] = predict_mean(X.row(static_cast<Eigen::Index>(i)).transpose());
  });
  return means;
}

void KrigingModel::dump(std::ostream& os) const {
  os << "beta " << full_precision(beta()) << "\n";
  os << "sigma2 " << full_precision(sigma2()) << "\n";
  os << "p " << full_precision(p_) << "\n";
  os << "nugget " << full_precision(nugget_) << "\n";
  os << "log_likelihood " << full_precision(loglik_) << "\n";
  os << "y_mean " << full_precision(y_mean_) << "\n";
  os << "y_std " << full_precision(y_std_) << "\n";
  os << "n " << Xn_.rows() << "\n";
  os << "d " << Xn_.cols() << "\n";
  for (Eigen::Index k = 0; k < theta_.size(); ++k) os << "theta_" << k << " " << full_precision(theta_[k]) << "\n";
  for (Eigen::Index k = 0; k < x_lo_.size(); ++k)
    os << "bounds_" << k << " " << full_precision(x_lo_[k]) << " " << full_precision(x_lo_[k] + x_span_[k]) << "\n";
  for (Eigen::Index i = 0; i < X_raw_.rows(); ++i) {
    os << "sample_" << i;
    for (Eigen::Index k = 0; k < X_raw_.cols(); ++k) os << " " << full_precision(X_raw_(i, k));
    os << " " << full_precision(y_raw_[i]) << "\n";
  }
}

}  // namespace wfopt
