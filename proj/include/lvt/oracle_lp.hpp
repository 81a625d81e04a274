#pragma once

// Exact maximum visibility for a fixed, small set of settings.
//
// V g is locally representable iff it lies in the convex hull of the
// deterministic correlation matrices a b^T, a, b in {+1,-1}^N. Zero
// marginals come for free by mixing each strategy with its global sign flip.
// The LP
//
//   maximize V  s.t.  V g_jk - sum_s w_s a^s_j b^s_k = 0,  sum_s w_s = 1,
//                     V <= 1,  V, w >= 0
//
// is solved by a two-phase revised simplex whose columns are generated from
// strategy indices rather than stored; pricing over all strategies reduces to
// a maximization over the a-signs, since the best b for a fixed a is the sign
// vector of the weighted column sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lvt/errors.hpp"
#include "lvt/estimate.hpp"
#include "lvt/lhv_construct.hpp"

namespace lvt {

inline constexpr int kOracleMaxSettings = 12;

struct DeterministicStrategy {
  std::vector<int> a_signs;
  std::vector<int> b_signs;

  friend bool operator==(const DeterministicStrategy&, const DeterministicStrategy&) = default;
};

/// Number of strategies with a_signs[0] fixed to +1 (or all of them).
inline std::uint64_t strategy_count(int n, bool gauge_fixed = true) {
  if (n < 1) throw InvalidInput("strategy count needs n >= 1");
  if (n > kOracleMaxSettings) {
    throw ResourceLimit("oracle supports at most " + std::to_string(kOracleMaxSettings) + " settings per side, got " +
                        std::to_string(n));
  }
  return std::uint64_t{1} << (gauge_fixed ? 2 * n - 1 : 2 * n);
}

/// Bit layout: a_signs[1..n-1] (or a_signs[0..n-1] without gauge fixing),
/// then b_signs[0..n-1]; a set bit means -1.
inline DeterministicStrategy strategy_from_index(int n, std::uint64_t index, bool gauge_fixed = true) {
  DeterministicStrategy s{std::vector<int>(n, 1), std::vector<int>(n, 1)};
  const int first_a = gauge_fixed ? 1 : 0;
  int bit = 0;
  for (int j = first_a; j < n; ++j, ++bit) s.a_signs[j] = (index >> bit) & 1 ? -1 : 1;
  for (int k = 0; k < n; ++k, ++bit) s.b_signs[k] = (index >> bit) & 1 ? -1 : 1;
  return s;
}

inline std::vector<DeterministicStrategy> enumerate_strategies(int n, bool gauge_fixed = true) {
  const auto count = strategy_count(n, gauge_fixed);
  std::vector<DeterministicStrategy> out;
  out.reserve(count);
  for (std::uint64_t s = 0; s < count; ++s) out.push_back(strategy_from_index(n, s, gauge_fixed));
  return out;
}

struct LocalPolytopeSolution {
  double visibility = 0.0;
  std::vector<std::uint64_t> support;  // strategy indices with positive weight
  std::vector<double> weights;
  int pivots = 0;
};

namespace detail {

class CorrelationPolytopeLp {
 public:
  CorrelationPolytopeLp(const Eigen::MatrixXd& gram, bool gauge_fixed)
      : n_(static_cast<int>(gram.rows())),
        gauge_fixed_(gauge_fixed),
        strategies_(strategy_count(n_, gauge_fixed)),
        rows_(n_ * n_ + 2),
        gram_(gram) {
    if (gram.rows() != gram.cols()) throw InvalidInput("Gram matrix must be square");
    b_ = Eigen::VectorXd::Zero(rows_);
    b_(sum_row()) = 1.0;
    b_(cap_row()) = 1.0;
    basis_.resize(rows_);
    for (int r = 0; r < rows_ - 1; ++r) basis_[r] = artificial(r);
    basis_[cap_row()] = slack();
    refactor();
  }

  LocalPolytopeSolution solve() {
    run_phase(true);
    if (objective(true) < -1e-8) throw std::runtime_error("oracle LP: phase 1 infeasible");
    drive_out_artificials();
    run_phase(false);

    LocalPolytopeSolution sol;
    sol.pivots = pivots_;
    for (int r = 0; r < rows_; ++r) {
      const auto var = basis_[r];
      if (var == kVisibility) sol.visibility = std::max(0.0, x_(r));
      if (is_strategy(var) && x_(r) > 1e-12) {
        sol.support.push_back(var - 1);
        sol.weights.push_back(x_(r));
      }
    }
    sol.visibility = std::min(1.0, sol.visibility);
    return sol;
  }

 private:
  using Var = std::uint64_t;
  static constexpr Var kVisibility = 0;
  static constexpr double kEps = 1e-9;

  int sum_row() const { return n_ * n_; }
  int cap_row() const { return n_ * n_ + 1; }
  Var slack() const { return strategies_ + 1; }
  Var artificial(int r) const { return strategies_ + 2 + static_cast<Var>(r); }
  bool is_strategy(Var v) const { return v >= 1 && v <= strategies_; }
  bool is_artificial(Var v) const { return v >= strategies_ + 2; }

  double cost(Var v, bool phase1) const {
    if (phase1) return is_artificial(v) ? -1.0 : 0.0;
    return v == kVisibility ? 1.0 : 0.0;
  }

  Eigen::VectorXd column(Var v) const {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(rows_);
    if (v == kVisibility) {
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) col(j * n_ + k) = gram_(j, k);
      col(cap_row()) = 1.0;
    } else if (is_strategy(v)) {
      const auto s = strategy_from_index(n_, v - 1, gauge_fixed_);
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) col(j * n_ + k) = -s.a_signs[j] * s.b_signs[k];
      col(sum_row()) = 1.0;
    } else if (v == slack()) {
      col(cap_row()) = 1.0;
    } else {
      col(static_cast<Eigen::Index>(v - strategies_ - 2)) = 1.0;
    }
    return col;
  }

  void refactor() {
    Eigen::MatrixXd basis_matrix(rows_, rows_);
    for (int r = 0; r < rows_; ++r) basis_matrix.col(r) = column(basis_[r]);
    inverse_ = basis_matrix.partialPivLu().inverse();
    x_ = inverse_ * b_;
    since_refactor_ = 0;
  }

  double objective(bool phase1) const {
    double z = 0.0;
    for (int r = 0; r < rows_; ++r) z += cost(basis_[r], phase1) * x_(r);
    return z;
  }

  Eigen::RowVectorXd duals(bool phase1) const {
    Eigen::RowVectorXd cb(rows_);
    for (int r = 0; r < rows_; ++r) cb(r) = cost(basis_[r], phase1);
    return cb * inverse_;
  }

  bool in_basis(Var v) const { return std::find(basis_.begin(), basis_.end(), v) != basis_.end(); }

  // Reduced cost of a strategy column from its sign vectors.
  double strategy_reduced_cost(const Eigen::RowVectorXd& y, const DeterministicStrategy& s) const {
    double corr = 0.0;
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) corr += y(j * n_ + k) * s.a_signs[j] * s.b_signs[k];
    return corr - y(sum_row());
  }

  /// Most positive reduced cost among strategies: for every a the best b is
  /// b_k = sign(sum_j y_jk a_j).
  std::pair<Var, double> best_strategy(const Eigen::RowVectorXd& y) const {
    const int a_bits = gauge_fixed_ ? n_ - 1 : n_;
    const int first_a = gauge_fixed_ ? 1 : 0;
    Var best_var = 0;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> a(n_, 1);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << a_bits); ++mask) {
      for (int j = first_a; j < n_; ++j) a[j] = (mask >> (j - first_a)) & 1 ? -1 : 1;
      double value = -y(sum_row());
      std::uint64_t b_mask = 0;
      for (int k = 0; k < n_; ++k) {
        double zk = 0.0;
        for (int j = 0; j < n_; ++j) zk += y(j * n_ + k) * a[j];
        value += std::abs(zk);
        if (zk < 0.0) b_mask |= std::uint64_t{1} << k;
      }
      if (value > best) {
        best = value;
        best_var = 1 + (mask | (b_mask << a_bits));
      }
    }
    return {best_var, best};
  }

  /// Entering variable, or nullopt at optimality. Bland's rule (lowest index)
  /// when `bland` is set, otherwise the largest reduced cost.
  std::optional<Var> entering(bool phase1, bool bland) const {
    const Eigen::RowVectorXd y = duals(phase1);
    auto reduced = [&](Var v) { return cost(v, phase1) - y.dot(column(v)); };
    if (bland) {
      if (!in_basis(kVisibility) && reduced(kVisibility) > kEps) return kVisibility;
      for (Var v = 1; v <= strategies_; ++v) {
        if (!in_basis(v) && strategy_reduced_cost(y, strategy_from_index(n_, v - 1, gauge_fixed_)) > kEps) return v;
      }
      if (!in_basis(slack()) && reduced(slack()) > kEps) return slack();
      return std::nullopt;
    }
    Var best_var = 0;
    double best = kEps;
    bool found = false;
    for (Var v : {kVisibility, slack()}) {
      if (in_basis(v)) continue;
      const double d = reduced(v);
      if (d > best) {
        best = d;
        best_var = v;
        found = true;
      }
    }
    const auto [s, d] = best_strategy(y);
    if (d > best && !in_basis(s)) {
      best_var = s;
      found = true;
    }
    if (!found) return std::nullopt;
    return best_var;
  }

  /// Returns the step length taken.
  double pivot(Var enter, bool bland) {
    const Eigen::VectorXd alpha = inverse_ * column(enter);
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows_; ++r) {
      double ratio;
      if (is_artificial(basis_[r]) && !phase1_) {
        // artificial stuck at zero: any nonzero entry blocks the step
        if (std::abs(alpha(r)) <= kEps) continue;
        ratio = 0.0;
      } else {
        if (alpha(r) <= kEps) continue;
        ratio = std::max(0.0, x_(r)) / alpha(r);
      }
      if (leave < 0 || ratio < best_ratio - 1e-12) {
        leave = r;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12) {
        const bool prefer = bland ? basis_[r] < basis_[leave] : std::abs(alpha(r)) > std::abs(alpha(leave));
        if (prefer) leave = r;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    if (leave < 0) throw std::runtime_error("oracle LP: unbounded direction");
    apply_pivot(leave, enter, alpha);
    return best_ratio;
  }

  void apply_pivot(int leave, Var enter, const Eigen::VectorXd& alpha) {
    const double a = alpha(leave);
    inverse_.row(leave) /= a;
    x_(leave) /= a;
    for (int r = 0; r < rows_; ++r) {
      if (r == leave || alpha(r) == 0.0) continue;
      inverse_.row(r) -= alpha(r) * inverse_.row(leave);
      x_(r) -= alpha(r) * x_(leave);
    }
    basis_[leave] = enter;
    ++pivots_;
    if (++since_refactor_ >= 50) refactor();
  }

  void run_phase(bool phase1) {
    phase1_ = phase1;
    int degenerate_streak = 0;
    const int max_pivots = 200000;
    for (int iter = 0; iter < max_pivots; ++iter) {
      const bool bland = degenerate_streak > 30;
      const auto enter = entering(phase1, bland);
      if (!enter) return;
      const double step = pivot(*enter, bland);
      degenerate_streak = step > 1e-12 ? 0 : degenerate_streak + 1;
    }
    throw std::runtime_error("oracle LP: pivot limit reached");
  }

  void drive_out_artificials() {
    for (int r = 0; r < rows_; ++r) {
      if (!is_artificial(basis_[r])) continue;
      auto try_var = [&](Var v) {
        if (in_basis(v)) return false;
        const Eigen::VectorXd alpha = inverse_ * column(v);
        if (std::abs(alpha(r)) <= 1e-7) return false;
        apply_pivot(r, v, alpha);
        return true;
      };
      if (try_var(kVisibility) || try_var(slack())) continue;
      for (Var v = 1; v <= strategies_; ++v)
        if (try_var(v)) break;
    }
  }

  int n_;
  bool gauge_fixed_;
  Var strategies_;
  int rows_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd b_;
  std::vector<Var> basis_;
  Eigen::MatrixXd inverse_;
  Eigen::VectorXd x_;
  int since_refactor_ = 0;
  int pivots_ = 0;
  bool phase1_ = true;
};

}  // namespace detail

/// Solves the local-polytope LP for an arbitrary square correlation target.
/// A Gram matrix of zeros yields V = 1.
inline LocalPolytopeSolution solve_local_polytope(const Eigen::MatrixXd& gram, bool gauge_fixed = true) {
  const auto n = static_cast<int>(gram.rows());
  strategy_count(n, gauge_fixed);  // size guard
  if (gram.cwiseAbs().maxCoeff() == 0.0) return {1.0, {}, {}, 0};
  return detail::CorrelationPolytopeLp(gram, gauge_fixed).solve();
}

inline VisibilityEstimate max_visibility_lp(const SettingsEnsemble& settings) {
  const auto sol = solve_local_polytope(settings.gram());
  return {sol.visibility, 0.0, settings.size(), Provenance::oracle, 0, static_cast<std::uint64_t>(sol.pivots)};
}

}  // namespace lvt
