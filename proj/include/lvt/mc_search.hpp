#pragma once

// Monte-Carlo max-min search for the threshold visibility.
//
// Inner loop: for fixed settings, hill-climb over the auxiliary frame (q, t)
// and the weights rho, one random component at a time, keeping a change only
// if the visibility read off from the largest table entry increases.
// Outer loop: vary the settings and keep the smallest inner maximum.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lvt/core_model.hpp"
#include "lvt/errors.hpp"
#include "lvt/estimate.hpp"
#include "lvt/lhv_construct.hpp"
#include "lvt/parallel.hpp"
#include "lvt/rng.hpp"

namespace lvt {

struct SearchConfig {
  int n_settings = 3;
  int m_states = 4;
  int inner_iters = 20000;
  int outer_iters = 20;
  int restarts = 4;
  double step_scale = 0.1;
  int patience = 200;  // consecutive rejections before the step is halved
  std::uint64_t seed = 1;
  double rho_min = kDefaultRhoMin;
  int threads = 1;  // does not affect results

  void validate() const {
    if (n_settings < 1) throw InvalidInput("n_settings must be >= 1");
    if (m_states < 4) throw InvalidInput("m_states must be >= 4");
    if (inner_iters < 1 || outer_iters < 1 || restarts < 1 || patience < 1) {
      throw InvalidInput("iteration counts must be >= 1");
    }
    if (!(step_scale > 0.0)) throw InvalidInput("step_scale must be positive");
    if (!(rho_min > 0.0) || rho_min > 1.0 / m_states) throw InvalidInput("rho_min must lie in (0, 1/M]");
    if (threads < 1) throw InvalidInput("threads must be >= 1");
  }
};

/// Called for every candidate the inner climb evaluates (accepted or not).
/// Invoked from worker threads when config.threads > 1.
using CandidateHook = std::function<void(std::size_t restart, const AuxiliaryFrame& frame, double visibility, bool accepted)>;

struct InnerResult {
  DiscreteLhvModel model;
  AuxiliaryFrame frame;
  VisibilityEstimate estimate;
  std::size_t best_restart = 0;
  std::vector<std::vector<double>> accepted;  // per restart: V after each accepted move
};

namespace detail {

/// Euclidean projection onto {rho >= floor, sum rho = 1}.
inline Eigen::VectorXd project_to_floored_simplex(const Eigen::VectorXd& x, double floor) {
  double lo = x.minCoeff() - 1.0;
  double hi = x.maxCoeff();
  auto mass = [&](double tau) { return (x.array() - tau).max(floor).sum(); };
  for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  Eigen::VectorXd rho = (x.array() - 0.5 * (lo + hi)).max(floor);
  return rho / rho.sum();
}

// Climb schedule. For the first kSmoothedFraction of the budget a move is
// kept if it raises a p-norm surrogate of V, with p rising geometrically from
// kSurrogatePowerStart to kSurrogatePowerEnd; afterwards the exact V decides.
// A kSingleComponentFraction share of proposals moves one component, the rest
// move every component of q, t and rho together.
inline constexpr double kSmoothedFraction = 0.8;
inline constexpr double kSurrogatePowerStart = 8.0;
inline constexpr double kSurrogatePowerEnd = 256.0;
inline constexpr double kSingleComponentFraction = 0.2;

class FrameClimber {
 public:
  FrameClimber(const GramSvd& svd, const SearchConfig& config)
      : us_(svd.u * svd.p.cwiseSqrt().asDiagonal()), vs_(svd.v * svd.p.cwiseSqrt().asDiagonal()), config_(config) {}

  // Table maxima replaced by p-norms (>= max, -> max as p grows).
  double surrogate(const AuxiliaryFrame& frame, double p) const {
    const Eigen::VectorXd inv_root_rho = frame.rho.cwiseSqrt().cwiseInverse();
    const Eigen::ArrayXXd a = (us_ * (frame.q * inv_root_rho.asDiagonal())).array().abs();
    const Eigen::ArrayXXd b = (vs_ * (frame.t * inv_root_rho.asDiagonal())).array().abs();
    auto pnorm = [p](const Eigen::ArrayXXd& x) {
      const double mx = x.maxCoeff();
      if (!(mx > 0.0)) return 0.0;
      return mx * std::pow((x / mx).pow(p).sum(), 1.0 / p);
    };
    const double pa = pnorm(a), pb = pnorm(b);
    if (!(pa * pb > 0.0)) return 1.0;
    return 1.0 / (pa * pb);
  }

  // V of the model assembled from balance_frame(frame).
  double visibility(const AuxiliaryFrame& frame) const {
    const Eigen::VectorXd inv_root_rho = frame.rho.cwiseSqrt().cwiseInverse();
    const double a = (us_ * (frame.q * inv_root_rho.asDiagonal())).cwiseAbs().maxCoeff();
    const double b = (vs_ * (frame.t * inv_root_rho.asDiagonal())).cwiseAbs().maxCoeff();
    return visibility_from_max_entry(std::sqrt(a * b));
  }

  struct ClimbOutcome {
    AuxiliaryFrame frame;
    double visibility;
    std::uint64_t iterations;
    std::vector<double> accepted;
  };

  ClimbOutcome climb(Rng& rng, std::size_t restart, const CandidateHook& hook) const {
    const int m = config_.m_states;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd raw(m);
    for (int n = 0; n < m; ++n) raw(n) = uniform(rng);
    const Eigen::VectorXd rho = project_to_floored_simplex(raw / raw.sum(), config_.rho_min);
    AuxiliaryFrame current = make_frame(rho, rng(), config_.rho_min);
    double best = visibility(current);
    double p_norm = kSurrogatePowerStart;
    double current_score = surrogate(current, p_norm);
    const int smooth_iters = static_cast<int>(kSmoothedFraction * config_.inner_iters);

    ClimbOutcome out{current, best, 0, {}};
    AuxiliaryFrame best_frame = current;
    double step = config_.step_scale;
    const double min_step = config_.step_scale * 1e-7;
    int rejections = 0;
    int streak = 0;
    std::uniform_int_distribution<int> pick(0, 7 * m - 1);

    for (int it = 0; it < config_.inner_iters; ++it) {
      ++out.iterations;
      const bool smoothing = it < smooth_iters;
      if (smoothing) {
        const double p_new =
            kSurrogatePowerStart *
            std::pow(kSurrogatePowerEnd / kSurrogatePowerStart, static_cast<double>(it) / smooth_iters);
        if (p_new > 1.05 * p_norm) {
          p_norm = p_new;
          current_score = surrogate(current, p_norm);
        }
      } else if (it == smooth_iters) {
        current_score = visibility(current);
      }
      AuxiliaryFrame candidate = current;
      if (uniform(rng) < kSingleComponentFraction) {
        const int c = pick(rng);
        const double z = normal(rng);
        if (c < 3 * m) {
          const double scale = std::sqrt(candidate.q.squaredNorm() / (3.0 * m));
          candidate.q(c % 3, c / 3) += step * scale * z;
          project_out_sqrt_rho(candidate.q, candidate.rho);
        } else if (c < 6 * m) {
          const int k = c - 3 * m;
          const double scale = std::sqrt(candidate.t.squaredNorm() / (3.0 * m));
          candidate.t(k % 3, k / 3) += step * scale * z;
          project_out_sqrt_rho(candidate.t, candidate.rho);
        } else {
          Eigen::VectorXd moved = candidate.rho;
          moved(c - 6 * m) += step * z / m;
          candidate.rho = project_to_floored_simplex(moved, config_.rho_min);
          project_out_sqrt_rho(candidate.q, candidate.rho);
          project_out_sqrt_rho(candidate.t, candidate.rho);
        }
      } else {
        const double sq = std::sqrt(candidate.q.squaredNorm() / (3.0 * m));
        const double st = std::sqrt(candidate.t.squaredNorm() / (3.0 * m));
        const double d = step / std::sqrt(7.0 * m);
        for (Eigen::Index n = 0; n < m; ++n)
          for (int i = 0; i < 3; ++i) {
            candidate.q(i, n) += d * sq * normal(rng);
            candidate.t(i, n) += d * st * normal(rng);
          }
        Eigen::VectorXd moved = candidate.rho;
        for (Eigen::Index n = 0; n < m; ++n) moved(n) += d * normal(rng) / m;
        candidate.rho = project_to_floored_simplex(moved, config_.rho_min);
        project_out_sqrt_rho(candidate.q, candidate.rho);
        project_out_sqrt_rho(candidate.t, candidate.rho);
      }
      const bool ok = biorthogonalize(candidate.q, candidate.t);

      const double v = ok ? visibility(candidate) : -1.0;
      const double score = ok ? (smoothing ? surrogate(candidate, p_norm) : v) : -1.0;
      const bool accept = ok && score > current_score;
      if (hook && ok) hook(restart, candidate, v, accept);
      if (accept) {
        current_score = score;
        if (v > best) {
          best = v;
          best_frame = candidate;
        }
        current = std::move(candidate);
        out.accepted.push_back(best);
        rejections = 0;
        if (++streak >= 10) {
          step *= 2.0;
          streak = 0;
        }
      } else {
        streak = 0;
        if (++rejections >= config_.patience) {
          step *= 0.5;
          rejections = 0;
          if (step < min_step) break;
        }
      }
    }
    out.frame = std::move(best_frame);
    out.visibility = best;
    return out;
  }

 private:
  Eigen::MatrixXd us_;
  Eigen::MatrixXd vs_;
  SearchConfig config_;
};

}  // namespace detail

/// Best of `restarts` independent hill climbs at fixed settings. Restart r
/// draws from the stream derive_seed(config.seed, r), so the result does not
/// depend on the thread count.
inline InnerResult inner_maximize(const SettingsEnsemble& settings, const SearchConfig& config,
                                  const CandidateHook& hook = {}) {
  config.validate();
  const GramSvd svd = gram_svd(settings);
  const detail::FrameClimber climber(svd, config);

  std::vector<std::optional<detail::FrameClimber::ClimbOutcome>> runs(config.restarts);
  parallel_for(runs.size(), config.threads, [&](std::size_t r) {
    Rng rng = make_rng(config.seed, r);
    runs[r] = climber.climb(rng, r, hook);
  });

  std::size_t best = 0;
  std::uint64_t iterations = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    iterations += runs[r]->iterations;
    if (runs[r]->visibility > runs[best]->visibility) best = r;
  }
  InnerResult result;
  result.frame = runs[best]->frame;
  result.model = assemble_model(svd, balance_frame(svd, result.frame));
  result.best_restart = best;
  result.estimate = {result.model.visibility.value(), 0.0, settings.size(), Provenance::mc_search, config.seed,
                     iterations};
  for (auto& run : runs) result.accepted.push_back(std::move(run->accepted));
  return result;
}

/// Directions moved by a Gaussian kick of about `angle` radians.
template <class Urbg>
SettingsEnsemble perturb_settings(const SettingsEnsemble& settings, double angle, Urbg& rng) {
  std::normal_distribution<double> normal(0.0, angle);
  auto kick = [&](const std::vector<Direction>& dirs) {
    std::vector<Direction> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) {
      const Eigen::Vector3d moved = d.vector() + Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
      out.push_back(Direction::normalized(moved));
    }
    return out;
  };
  return {kick(settings.a_side()), kick(settings.b_side())};
}

struct OuterResult {
  VisibilityEstimate estimate;
  SettingsEnsemble worst_settings;
  std::vector<double> inner_maxima;  // one per outer sample, in order
};

inline constexpr int kBootstrapResamples = 200;

/// Standard deviation of the sample minimum under bootstrap resampling.
inline double bootstrap_min_std_error(const std::vector<double>& values, std::uint64_t seed,
                                      int resamples = kBootstrapResamples) {
  if (values.size() < 2) return 0.0;
  Rng rng = make_rng(seed, 0xb0075u);
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::vector<double> mins(resamples);
  for (auto& m : mins) {
    m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) m = std::min(m, values[pick(rng)]);
  }
  const double mean = std::accumulate(mins.begin(), mins.end(), 0.0) / resamples;
  double var = 0.0;
  for (double m : mins) var += (m - mean) * (m - mean);
  return std::sqrt(var / (resamples - 1));
}

/// Outer minimization over settings. Each outer step either draws fresh
/// uniform settings or perturbs the current worst ones (even odds; the first
/// step is always fresh), then runs inner_maximize on its own seed stream.
inline OuterResult outer_minimize_detailed(const SearchConfig& config) {
  config.validate();
  Rng rng = make_rng(config.seed, 0x07e7ULL);
  std::bernoulli_distribution coin(0.5);
  OuterResult out;
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t iterations = 0;
  for (int o = 0; o < config.outer_iters; ++o) {
    const bool fresh = o == 0 || coin(rng);
    SettingsEnsemble settings = fresh ? SettingsEnsemble::random(config.n_settings, rng)
                                      : perturb_settings(out.worst_settings, 0.1, rng);
    SearchConfig inner_config = config;
    inner_config.seed = derive_seed(config.seed, 1000003ULL + static_cast<std::uint64_t>(o));
    const auto inner = inner_maximize(settings, inner_config);
    iterations += inner.estimate.iterations_used;
    const double v = inner.estimate.value;
    out.inner_maxima.push_back(v);
    if (v < best) {
      best = v;
      out.worst_settings = std::move(settings);
    }
  }
  out.estimate = {best, bootstrap_min_std_error(out.inner_maxima, config.seed), config.n_settings,
                  Provenance::mc_search, config.seed, iterations};
  return out;
}

inline VisibilityEstimate outer_minimize(const SearchConfig& config) { return outer_minimize_detailed(config).estimate; }

struct SweepFailure {
  int n_settings;
  std::string message;
};

struct SweepResult {
  std::vector<VisibilityEstimate> estimates;
  std::vector<SweepFailure> failures;
};

/// One outer_minimize per N; entry i runs with seed config.seed + i.
inline SweepResult n_sweep(const std::vector<int>& n_values, const SearchConfig& config,
                           const std::function<void(const VisibilityEstimate&)>& progress = {}) {
  if (!std::is_sorted(n_values.begin(), n_values.end())) throw InvalidInput("n_values must be sorted ascending");
  SweepResult result;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    SearchConfig cfg = config;
    cfg.n_settings = n_values[i];
    cfg.seed = config.seed + i;
    try {
      result.estimates.push_back(outer_minimize(cfg));
      if (progress) progress(result.estimates.back());
    } catch (const std::exception& e) {
      result.failures.push_back({n_values[i], e.what()});
    }
  }
  return result;
}

struct ExtrapolationFit {
  VisibilityEstimate estimate;  // V_inf; n_settings = 0
  double coefficient = 0.0;     // c in V(N) = V_inf + c N^-alpha
  double alpha = 0.0;
  double residual = 0.0;        // sum of squared residuals
};

inline constexpr double kExtrapolationExponents[] = {0.25, 0.5, 0.75, 1.0};

/// Least-squares fit of V(N) = V_inf + c N^-alpha for each alpha on a fixed
/// grid, keeping the smallest residual. The uncertainty combines the
/// intercept's regression standard error with the propagated input errors.
inline ExtrapolationFit extrapolate(const std::vector<VisibilityEstimate>& estimates) {
  if (estimates.size() < 3) throw InvalidInput("extrapolation needs at least 3 estimates");
  for (std::size_t i = 0; i < estimates.size(); ++i)
    for (std::size_t j = i + 1; j < estimates.size(); ++j)
      if (estimates[i].n_settings == estimates[j].n_settings) throw InvalidInput("extrapolation needs distinct N");
  for (const auto& e : estimates)
    if (e.n_settings < 1) throw InvalidInput("extrapolation needs N >= 1");

  const auto k = static_cast<Eigen::Index>(estimates.size());
  Eigen::VectorXd y(k), sigma(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    y(i) = estimates[i].value;
    sigma(i) = estimates[i].std_error;
  }

  ExtrapolationFit best;
  best.residual = std::numeric_limits<double>::infinity();
  for (double alpha : kExtrapolationExponents) {
    Eigen::MatrixXd x(k, 2);
    for (Eigen::Index i = 0; i < k; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = std::pow(static_cast<double>(estimates[i].n_settings), -alpha);
    }
    const Eigen::Matrix2d normal = x.transpose() * x;
    const Eigen::Matrix2d normal_inv = normal.inverse();
    const Eigen::Vector2d beta = normal_inv * (x.transpose() * y);
    const double residual = (y - x * beta).squaredNorm();
    if (residual < best.residual - 1e-15) {
      const double dof = static_cast<double>(k - 2);
      const double regression_se = dof > 0 ? std::sqrt(residual / dof * normal_inv(0, 0)) : 0.0;
      // V_inf is linear in y: row 0 of (X^T X)^-1 X^T
      const Eigen::RowVectorXd weights = normal_inv.row(0) * x.transpose();
      const double propagated = std::sqrt((weights.transpose().array().square() * sigma.array().square()).sum());
      best.residual = residual;
      best.alpha = alpha;
      best.coefficient = beta(1);
      best.estimate = {beta(0), std::hypot(regression_se, propagated), 0, Provenance::mc_search,
                       estimates.front().seed, 0};
    }
  }
  return best;
}

/// Rough single-core wall-time projection used to gate long runs; the
/// constants were measured on a desktop-class core.
inline double projected_seconds(const SearchConfig& config) {
  const double per_move = 1e-6 * config.m_states + 5e-8 * config.n_settings * config.m_states;
  const double inner = static_cast<double>(config.inner_iters) * config.restarts * per_move;
  const double svd = 1e-9 * std::pow(static_cast<double>(config.n_settings), 3.0) * 5.0;
  return config.outer_iters * (inner + svd) / std::max(1, config.threads);
}

}  // namespace lvt
