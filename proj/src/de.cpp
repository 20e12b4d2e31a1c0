#include "wfopt/de.hpp"

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

void DeConfig::validate() const {
  if (population_size < 5) throw InvalidArgument("de: population_size must be >= 5");
  if (!(recombination > 0.0 && recombination <= 1.0))
    throw InvalidArgument("de: recombination must be in (0, 1]");
  if (!(mutation_low >= 0.0 && mutation_low <= mutation_high && mutation_high <= 2.0))
    throw InvalidArgument("de: mutation dither range must satisfy 0 <= low <= high <= 2");
  if (max_generations == 0) throw InvalidArgument("de: max_generations must be >= 1");
}

void SeededInitPlan::validate() const {
  if (incumbent) {
    if (std::abs(random_fraction + mutate_fraction - 1.0) > 1e-9)
      throw InvalidArgument("seeded init: fractions must sum to 1 when an incumbent is present");
  } else if (random_fraction != 1.0) {
    throw InvalidArgument("seeded init: random_fraction must be 1 without an incumbent");
  }
  if (!(mutate_prob > 0.0 && mutate_prob <= 1.0) || !(mutate_radius > 0.0))
    throw InvalidArgument("seeded init: invalid mutation parameters");
}

MatrixXd seeded_population(const DesignSpace& space, const DeConfig& config, const SeededInitPlan& plan,
                           std::uint64_t seed) {
  space.validate();
  plan.validate();
  const std::size_t pop = config.population_size;
  const std::size_t d = space.dim();

  std::size_t n_mutate = 0;
  if (plan.incumbent) {
    if (static_cast<std::size_t>(plan.incumbent->size()) != d)
      throw DimensionMismatch("seeded init: incumbent dimension mismatch");
    n_mutate = static_cast<std::size_t>(std::lround(plan.mutate_fraction * static_cast<double>(pop)));
    n_mutate = std::min(n_mutate, pop);
  }
  const std::size_t n_random = pop - n_mutate;

  MatrixXd population(pop, d);
  if (n_random > 0) {
    const auto batch = constrained_lhs(space, n_random, std::max<std::size_t>(1, config.oversample_factor) * n_random,
                                       mix64(seed) ^ 0xa11cru);
    population.topRows(static_cast<Eigen::Index>(n_random)) = batch.points;
  }

  if (n_mutate > 0) {
    Rng rng = Rng::derive(seed, 0x317eed);
    const VectorXd& inc = *plan.incumbent;
    for (std::size_t row = 0; row < n_mutate; ++row) {
      VectorXd cand = inc;
      bool ok = false;
      for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
        cand = inc;
        for (std::size_t k = 0; k < d; ++k) {
          if (rng.uniform() < plan.mutate_prob) {
            const double r = plan.mutate_radius * space.bounds[k].span();
            cand[static_cast<Eigen::Index>(k)] += rng.uniform(-r, r);
          }
        }
        cand = space.clip(cand);
        ok = space.is_feasible(cand);
      }
      if (!ok) {
        // repeated infeasibility around the incumbent: fall back to a random
        // feasible draw
        int tries = 0;
        do {
          if (++tries > 1000)
            throw InfeasibleDomainError("seeded init: could not draw a feasible fallback point");
          for (std::size_t k = 0; k < d; ++k)
            cand[static_cast<Eigen::Index>(k)] = rng.uniform(space.bounds[k].lower, space.bounds[k].upper);
        } while (!space.is_feasible(cand));
      }
      population.row(static_cast<Eigen::Index>(n_random + row)) = cand.transpose();
    }
  }
  return population;
}

namespace de_detail {

VectorXd make_trial(const VectorXd& target, const VectorXd& best, const std::vector<VectorXd>& donors,
                    double f, double recombination, DeStrategy strategy, const DesignSpace& space,
                    std::size_t force_coord, const std::function<double()>& next_uniform) {
  VectorXd mutant;
  if (strategy == DeStrategy::Best1Bin) {
    mutant = best + f * (donors[0] - donors[1]);
  } else {
    mutant = best + f * (donors[0] + donors[1] - donors[2] - donors[3]);
  }
  VectorXd trial = target;
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    if (static_cast<std::size_t>(k) == force_coord || next_uniform() < recombination) trial[k] = mutant[k];
  }
  return space.clip(trial);
}

}  // namespace de_detail

DeResult de_optimize(const std::function<double(const VectorXd&)>& objective, const DesignSpace& space,
                     const DeConfig& config, const SeededInitPlan& plan) {
  space.validate();
  config.validate();
  const std::size_t pop_n = config.population_size;
  const std::size_t d = space.dim();
  const std::size_t donors_needed = config.strategy == DeStrategy::Best1Bin ? 2 : 4;
  if (pop_n < donors_needed + 1) throw InvalidArgument("de: population too small for strategy");

  DeResult result;
  MatrixXd pop = seeded_population(space, config, plan, config.seed);
  VectorXd values = VectorXd::Constant(static_cast<Eigen::Index>(pop_n), kNegInf);

  auto remaining = [&]() {
    return config.max_evals == 0 ? pop_n : (config.max_evals > result.evals_used ? config.max_evals - result.evals_used : 0);
  };

  auto evaluate_rows = [&](const MatrixXd& points, std::vector<std::size_t> rows, VectorXd& out) {
    const std::size_t count = std::min(rows.size(), remaining());
    rows.resize(count);
    auto body = [&](std::size_t idx) {
      const Eigen::Index r = static_cast<Eigen::Index>(rows[idx]);
      try {
        out[r] = objective(points.row(r).transpose());
      } catch (...) {
        std::throw_with_nested(Error("de_optimize: objective failed at generation " +
                                     std::to_string(result.generations) + ", individual " +
                                     std::to_string(rows[idx])));
      }
    };
    if (config.parallel_eval) {
      parallel_for(count, body);
    } else {
      for (std::size_t i = 0; i < count; ++i) body(i);
    }
    result.evals_used += count;
    return count;
  };

  {
    std::vector<std::size_t> all(pop_n);
    for (std::size_t i = 0; i < pop_n; ++i) all[i] = i;
    evaluate_rows(pop, all, values);
  }

  // ties resolved toward the lowest index
  auto best_index = [&]() {
    Eigen::Index bi = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
      if (values[i] > values[bi]) bi = i;
    return bi;
  };
  Eigen::Index best = best_index();

  Rng rng = Rng::derive(config.seed, 0xde0de0);
  MatrixXd trials(pop_n, d);
  VectorXd trial_values(pop_n);

  auto converged = [&]() {
    double mean = 0.0;
    std::size_t m = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (std::isfinite(values[i])) {
        mean += values[i];
        ++m;
      }
    if (m < pop_n) return false;  // unevaluated individuals: keep going
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) var += (values[i] - mean) * (values[i] - mean);
    const double spread = std::sqrt(var / static_cast<double>(m));
    return spread < config.tolerance * (std::abs(mean) + 1e-12);
  };

  for (std::size_t gen = 1; gen <= config.max_generations; ++gen) {
    if (remaining() == 0 || converged()) break;
    result.generations = gen;
    const double f = rng.uniform(config.mutation_low, config.mutation_high);

    // trial construction consumes the RNG sequentially; evaluation is the
    // only concurrent part
    for (std::size_t i = 0; i < pop_n; ++i) {
      std::size_t donor_idx[4];
      std::size_t picked = 0;
      while (picked < donors_needed) {
        const std::size_t cand = static_cast<std::size_t>(rng.uniform_index(pop_n));
        if (cand == i) continue;
        bool dup = false;
        for (std::size_t q = 0; q < picked; ++q) dup |= donor_idx[q] == cand;
        if (!dup) donor_idx[picked++] = cand;
      }
      std::vector<VectorXd> donors;
      donors.reserve(donors_needed);
      for (std::size_t q = 0; q < donors_needed; ++q)
        donors.push_back(pop.row(static_cast<Eigen::Index>(donor_idx[q])).transpose());
      const std::size_t jrand = static_cast<std::size_t>(rng.uniform_index(d));
      trials.row(static_cast<Eigen::Index>(i)) =
          de_detail::make_trial(pop.row(static_cast<Eigen::Index>(i)).transpose(), pop.row(best).transpose(),
                                donors, f, config.recombination, config.strategy, space, jrand,
                                [&]() { return rng.uniform(); })
              .transpose();
    }

    trial_values.setConstant(kNegInf);
    std::vector<std::size_t> rows(pop_n);
    for (std::size_t i = 0; i < pop_n; ++i) rows[i] = i;
    evaluate_rows(trials, rows, trial_values);

    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(pop_n); ++i) {
      if (trial_values[i] > values[i]) {
        values[i] = trial_values[i];
        pop.row(i) = trials.row(i);
      }
    }
    best = best_index();
  }

  result.best_point = pop.row(best).transpose();
  result.best_value = values[best];
  result.population = std::move(pop);
  result.population_values = std::move(values);
  return result;
}

}  // namespace wfopt
