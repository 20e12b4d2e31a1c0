#include "wfopt/sampling.hpp"

#include <algorithm>
#include <vector>

#include "wfopt/rng.hpp"

namespace wfopt {

namespace {

// One axis at a time: permutation fixes the bin order, then a uniform draw
// places the point inside its bin.
MatrixXd lhs_points(const DesignSpace& space, std::size_t n, Rng& rng) {
  const std::size_t d = space.dim();
  MatrixXd pts(n, d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& b = space.bounds[k];
    const double width = b.span() / static_cast<double>(n);
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < n; ++i) {
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          b.lower + (static_cast<double>(perm[i]) + rng.uniform()) * width;
    }
  }
  return pts;
}

std::size_t bin_of(double v, const Interval& b, std::size_t nbins) {
  const double t = (v - b.lower) / b.span();
  auto idx = static_cast<long>(t * static_cast<double>(nbins));
  idx = std::clamp(idx, 0L, static_cast<long>(nbins) - 1L);
  return static_cast<std::size_t>(idx);
}

MatrixXd expand_points(const MatrixXd& existing, std::size_t k, const DesignSpace& space, Rng& rng) {
  const std::size_t d = space.dim();
  const std::size_t n0 = static_cast<std::size_t>(existing.rows());
  const std::size_t nbins = n0 + k;
  MatrixXd pts(k, d);
  for (std::size_t axis = 0; axis < d; ++axis) {
    const auto& b = space.bounds[axis];
    std::vector<std::size_t> occupancy(nbins, 0);
    for (std::size_t i = 0; i < n0; ++i)
      occupancy[bin_of(existing(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(axis)), b, nbins)]++;

    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<std::size_t> empties;
    for (std::size_t bin = 0; bin < nbins; ++bin)
      if (occupancy[bin] == 0) empties.push_back(bin);

    if (empties.size() >= k) {
      const auto perm = rng.permutation(empties.size());
      for (std::size_t i = 0; i < k; ++i) chosen.push_back(empties[perm[i]]);
    } else {
      // clustered existing points: take every empty bin, then top up cycling
      // through bins from least occupied
      chosen = empties;
      std::vector<std::size_t> order(nbins);
      for (std::size_t i = 0; i < nbins; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t c) { return occupancy[a] < occupancy[c]; });
      for (std::size_t i = 0; chosen.size() < k; ++i) chosen.push_back(order[i % nbins]);
    }

    const double width = b.span() / static_cast<double>(nbins);
    const auto pair_perm = rng.permutation(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t bin = chosen[pair_perm[i]];
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(axis)) =
          b.lower + (static_cast<double>(bin) + rng.uniform()) * width;
    }
  }
  return pts;
}

bool row_equal(const MatrixXd& a, Eigen::Index i, const MatrixXd& b, Eigen::Index j) {
  return (a.row(i).array() == b.row(j).array()).all();
}

}  // namespace

SampleBatch standard_lhs(const DesignSpace& space, std::size_t n, std::uint64_t seed) {
  space.validate();
  if (n == 0) throw InvalidArgument("standard_lhs: requested zero samples");
  Rng rng(seed);
  return SampleBatch{lhs_points(space, n, rng), Provenance::InitialLhs};
}

SampleBatch expanded_lhs(const SampleBatch& existing, std::size_t k, const DesignSpace& space,
                         std::uint64_t seed) {
  space.validate();
  if (existing.size() == 0) throw InvalidArgument("expanded_lhs: existing batch is empty");
  if (k == 0) throw InvalidArgument("expanded_lhs: requested zero samples");
  if (static_cast<std::size_t>(existing.points.cols()) != space.dim())
    throw DimensionMismatch("expanded_lhs: batch/space dimension mismatch");

  Rng rng(seed);
  MatrixXd pts = expand_points(existing.points, k, space, rng);
  // exact coincidence with an existing point has probability zero; re-jitter
  // inside the bin if it ever happens
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index e = 0; e < existing.points.rows(); ++e) {
      while (row_equal(pts, i, existing.points, e)) {
        for (std::size_t axis = 0; axis < space.dim(); ++axis) {
          const auto& b = space.bounds[axis];
          const std::size_t nbins = existing.size() + k;
          const double width = b.span() / static_cast<double>(nbins);
          const std::size_t bin = bin_of(pts(i, static_cast<Eigen::Index>(axis)), b, nbins);
          pts(i, static_cast<Eigen::Index>(axis)) =
              b.lower + (static_cast<double>(bin) + rng.uniform()) * width;
        }
      }
    }
  }
  return SampleBatch{std::move(pts), Provenance::ExpandedLhs};
}

SampleBatch constrained_lhs(const DesignSpace& space, std::size_t n, std::size_t oversample,
                            std::uint64_t seed, ConstrainedLhsStats* stats) {
  space.validate();
  if (n == 0) throw InvalidArgument("constrained_lhs: requested zero samples");
  if (oversample < n) throw InvalidArgument("constrained_lhs: oversample count must be >= n");

  Rng rng(seed);
  MatrixXd generated = lhs_points(space, oversample, rng);

  std::vector<Eigen::Index> kept;  // row indices into `generated`, generation order
  auto absorb = [&](Eigen::Index from) {
    VectorXd x(space.dim());
    for (Eigen::Index i = from; i < generated.rows(); ++i) {
      x = generated.row(i).transpose();
      if (space.is_feasible(x)) kept.push_back(i);
    }
  };
  absorb(0);

  std::size_t rounds = 0;
  while (kept.size() < n) {
    if (++rounds > kExpansionRoundCap)
      throw InfeasibleDomainError("constrained_lhs: expansion round cap exceeded (feasible region too small)");
    const std::size_t k = n - kept.size();
    const Eigen::Index before = generated.rows();
    MatrixXd fresh = expand_points(generated, k, space, rng);
    generated.conservativeResize(before + fresh.rows(), Eigen::NoChange);
    generated.bottomRows(fresh.rows()) = fresh;
    absorb(before);
  }

  MatrixXd out(n, space.dim());
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = generated.row(kept[i]);
  if (stats) {
    stats->expansion_rounds = rounds;
    stats->total_generated = static_cast<std::size_t>(generated.rows());
  }
  return SampleBatch{std::move(out), Provenance::InitialLhs};
}

}  // namespace wfopt
