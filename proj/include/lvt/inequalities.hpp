#pragma once

// Bell (three settings, strict anticorrelation assumed) and CHSH bounds on
// the threshold visibility, in closed form and by direct optimization over
// measurement directions.
//
// Substituting the singlet probabilities gives
//   Bell:  (V/2) (3 - |a + c - b|^2) <= 1
//   CHSH:  (V/2) (|a + b' - b|^2 + |a' - b' - b|^2 - 6) <= 2
// so the thresholds are 1 / max(Bell l.h.s. at V=1) and 2 / max(CHSH l.h.s. at V=1).
//
// The Bell form relies on P(1,1; b,b) = 0, an extra property of the singlet
// beyond local realism; CHSH uses local realism only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "lvt/core_model.hpp"
#include "lvt/errors.hpp"
#include "lvt/estimate.hpp"
#include "lvt/nelder_mead.hpp"
#include "lvt/parallel.hpp"
#include "lvt/rng.hpp"

namespace lvt {

struct BellConfiguration {
  Direction a, b, c;
};

struct ChshConfiguration {
  Direction a, a2, b, b2;

  /// Angle between b and b'.
  double phi() const { return std::acos(std::clamp(b.dot(b2), -1.0, 1.0)); }
};

/// (V/2) (3 - |a + c - b|^2); the inequality is violated iff this exceeds 1.
inline double bell_lhs(const BellConfiguration& cfg, Visibility v) {
  const Eigen::Vector3d s = cfg.a.vector() + cfg.c.vector() - cfg.b.vector();
  return 0.5 * v.value() * (3.0 - s.squaredNorm());
}

/// The same quantity from the probability-level inequality
/// P(1,1;a,b) + P(1,1;b,c) >= P(1,1;a,c) with singlet probabilities:
/// returns 1 - 4 [P(1,1;a,b) + P(1,1;b,c) - P(1,1;a,c)].
inline double bell_lhs_from_probabilities(const BellConfiguration& cfg, Visibility v) {
  const auto up = Outcome::up();
  const double slack = quantum_joint(up, up, cfg.a, cfg.b, v) + quantum_joint(up, up, cfg.b, cfg.c, v) -
                       quantum_joint(up, up, cfg.a, cfg.c, v);
  return 1.0 - 4.0 * slack;
}

/// (V/2) (|a + b' - b|^2 + |a' - b' - b|^2 - 6); violated iff above 2.
inline double chsh_lhs(const ChshConfiguration& cfg, Visibility v) {
  const Eigen::Vector3d s1 = cfg.a.vector() + cfg.b2.vector() - cfg.b.vector();
  const Eigen::Vector3d s2 = cfg.a2.vector() - cfg.b2.vector() - cfg.b.vector();
  return 0.5 * v.value() * (s1.squaredNorm() + s2.squaredNorm() - 6.0);
}

/// 4 L + 2 where L is the probability-level CHSH combination
/// P(1,1;a,b) - P(1,1;a,b') + P(1,1;a',b) + P(1,1;a',b') - P(1;a') - P(1;b) <= 0.
inline double chsh_lhs_from_probabilities(const ChshConfiguration& cfg, Visibility v) {
  const auto up = Outcome::up();
  const double combo = quantum_joint(up, up, cfg.a, cfg.b, v) - quantum_joint(up, up, cfg.a, cfg.b2, v) +
                       quantum_joint(up, up, cfg.a2, cfg.b, v) + quantum_joint(up, up, cfg.a2, cfg.b2, v) -
                       quantum_marginal(up, cfg.a2, v) - quantum_marginal(up, cfg.b, v);
  return 4.0 * combo + 2.0;
}

/// a along b' - b and a' along -(b' + b), which maximizes the CHSH l.h.s. for
/// given b, b'. Undefined (throws) when b = +-b'.
inline ChshConfiguration chsh_optimal_alignment(const Direction& b, const Direction& b2) {
  const Eigen::Vector3d diff = b2.vector() - b.vector();
  const Eigen::Vector3d sum = b2.vector() + b.vector();
  if (diff.norm() < 1e-12 || sum.norm() < 1e-12) {
    throw InvalidInput("optimal CHSH alignment is undefined for b = +-b'");
  }
  return {Direction::normalized(diff), Direction::normalized(-sum), b, b2};
}

/// 2 sqrt(2) V sin(phi/2 + pi/4): the CHSH l.h.s. at optimal alignment.
inline double chsh_angle_form(double phi, Visibility v) {
  return 2.0 * std::numbers::sqrt2 * v.value() * std::sin(0.5 * phi + 0.25 * std::numbers::pi);
}

/// Closed-form CHSH l.h.s. at optimal alignment for the given b, b'.
inline double chsh_lhs_reduced(const Direction& b, const Direction& b2, Visibility v) {
  const auto cfg = chsh_optimal_alignment(b, b2);
  return chsh_angle_form(cfg.phi(), v);
}

struct OptimizerBudget {
  int starts = 64;
  int max_evaluations = 3000;
  std::uint64_t seed = 0;
  int threads = 1;
};

template <class Config>
struct NumericThreshold {
  VisibilityEstimate estimate;
  double max_lhs = 0.0;  // maximum of the l.h.s. at V = 1
  Config best;
};

namespace detail {

inline Direction direction_from(const std::vector<double>& x, std::size_t offset) {
  return Direction::from_angles(x[offset], x[offset + 1]);
}

inline void push_angles(std::vector<double>& x, const Direction& d) {
  x.push_back(std::acos(std::clamp(d.z(), -1.0, 1.0)));
  x.push_back(std::atan2(d.y(), d.x()));
}

/// Multi-start Nelder-Mead maximization of `objective` over `directions`
/// unit vectors. Start i uses stream derive_seed(seed, i); the winner is the
/// largest value, ties going to the lower start index.
template <class Objective>
std::pair<std::vector<double>, double> maximize_over_directions(int directions, const OptimizerBudget& budget,
                                                                Objective objective) {
  if (budget.starts < 1 || budget.max_evaluations < 1) throw InvalidInput("optimizer budget must be positive");
  std::vector<std::optional<SimplexResult>> runs(budget.starts);
  parallel_for(runs.size(), budget.threads, [&](std::size_t i) {
    Rng rng = make_rng(budget.seed, i);
    std::vector<double> start;
    for (int d = 0; d < directions; ++d) push_angles(start, Direction::random(rng));
    auto negated = [&](const std::vector<double>& x) { return -objective(x); };
    auto first = nelder_mead(negated, start, 0.5, budget.max_evaluations / 2);
    runs[i] = nelder_mead(negated, first.x, 0.05, budget.max_evaluations - first.evaluations);
    runs[i]->evaluations += first.evaluations;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i]->value < runs[best]->value) best = i;
  return {runs[best]->x, -runs[best]->value};
}

}  // namespace detail

/// Maximizes (3 - |a + c - b|^2)/2 over unit a, b, c and returns 1/max.
/// With `b_equals_a` the search is restricted to b = a.
inline NumericThreshold<BellConfiguration> bell_threshold_numeric(const OptimizerBudget& budget = {},
                                                                  bool b_equals_a = false) {
  const Visibility full(1.0);
  auto make = [&](const std::vector<double>& x) {
    const Direction a = detail::direction_from(x, 0);
    const Direction c = detail::direction_from(x, 2);
    const Direction b = b_equals_a ? a : detail::direction_from(x, 4);
    return BellConfiguration{a, b, c};
  };
  const auto [x, best] =
      detail::maximize_over_directions(b_equals_a ? 2 : 3, budget, [&](const auto& p) { return bell_lhs(make(p), full); });
  NumericThreshold<BellConfiguration> out;
  out.max_lhs = best;
  out.best = make(x);
  out.estimate = {std::min(1.0, 1.0 / best), 0.0, 3, Provenance::bell, budget.seed,
                  static_cast<std::uint64_t>(budget.starts) * budget.max_evaluations};
  return out;
}

/// Maximizes the CHSH l.h.s. over four unit vectors and returns 2/max.
inline NumericThreshold<ChshConfiguration> chsh_threshold_numeric(const OptimizerBudget& budget = {}) {
  const Visibility full(1.0);
  auto make = [](const std::vector<double>& x) {
    return ChshConfiguration{detail::direction_from(x, 0), detail::direction_from(x, 2), detail::direction_from(x, 4),
                             detail::direction_from(x, 6)};
  };
  const auto [x, best] = detail::maximize_over_directions(4, budget, [&](const auto& p) { return chsh_lhs(make(p), full); });
  NumericThreshold<ChshConfiguration> out;
  out.max_lhs = best;
  out.best = make(x);
  out.estimate = {std::min(1.0, 2.0 / best), 0.0, 4, Provenance::chsh, budget.seed,
                  static_cast<std::uint64_t>(budget.starts) * budget.max_evaluations};
  return out;
}

inline constexpr double kBellThreshold = 2.0 / 3.0;
inline constexpr double kChshThreshold = 1.0 / std::numbers::sqrt2;

/// Earlier published upper bounds, quoted for comparison only.
inline constexpr double kPriorBoundCoplanar = 8.0 / (std::numbers::pi * std::numbers::pi);
inline constexpr double kPriorBoundPiOver4 = std::numbers::pi / 4.0;
inline constexpr double kPriorBoundThreeQuarters = 0.75;

}  // namespace lvt
