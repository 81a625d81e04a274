#pragma once

// Discrete hidden-variable models for a finite set of settings.
//
// With A_{j,n} = 1 - 2 P_A(1|a_j, n) and B_{k,n} = 2 P_B(1|b_k, n) - 1 the
// representation problem becomes
//
//   sum_n rho_n A_{j,n} B_{k,n} = V a_j.b_k      (correlations)
//   |A_{j,n}| <= 1, |B_{k,n}| <= 1               (probabilities)
//   sum_n rho_n A_{j,n} = sum_n rho_n B_{k,n} = 0 (unbiased marginals)
//
// A feasible point is built from the rank-3 SVD of the Gram matrix and two
// biorthogonal triples q_i, t_i orthogonal to sqrt(rho); V is then fixed by
// the largest table entry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "lvt/core_model.hpp"
#include "lvt/errors.hpp"
#include "lvt/rng.hpp"

namespace lvt {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

inline constexpr double kDefaultRhoMin = 1e-6;
inline constexpr double kSingularValueCutoff = 1e-10;

/// N settings per side and their Gram matrix gram(j, k) = a_j . b_k.
class SettingsEnsemble {
 public:
  SettingsEnsemble() = default;
  SettingsEnsemble(std::vector<Direction> a_side, std::vector<Direction> b_side)
      : a_side_(std::move(a_side)), b_side_(std::move(b_side)) {
    if (a_side_.empty() || a_side_.size() != b_side_.size()) {
      throw InvalidInput("settings need N >= 1 directions on each side");
    }
    const auto n = static_cast<Eigen::Index>(a_side_.size());
    gram_.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) gram_(j, k) = a_side_[j].dot(b_side_[k]);
  }

  template <class Urbg>
  static SettingsEnsemble random(int n, Urbg& rng) {
    if (n < 1) throw InvalidInput("settings need N >= 1");
    std::vector<Direction> a, b;
    a.reserve(n);
    b.reserve(n);
    for (int i = 0; i < n; ++i) a.push_back(Direction::random(rng));
    for (int i = 0; i < n; ++i) b.push_back(Direction::random(rng));
    return {std::move(a), std::move(b)};
  }

  int size() const noexcept { return static_cast<int>(a_side_.size()); }
  const std::vector<Direction>& a_side() const noexcept { return a_side_; }
  const std::vector<Direction>& b_side() const noexcept { return b_side_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }

  /// N x 3 matrices with the directions as rows.
  Eigen::MatrixXd a_matrix() const { return as_rows(a_side_); }
  Eigen::MatrixXd b_matrix() const { return as_rows(b_side_); }

 private:
  static Eigen::MatrixXd as_rows(const std::vector<Direction>& dirs) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dirs.size()), 3);
    for (std::size_t i = 0; i < dirs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = dirs[i].vector().transpose();
    return m;
  }

  std::vector<Direction> a_side_;
  std::vector<Direction> b_side_;
  Eigen::MatrixXd gram_;
};

/// gram = u diag(p) v^T with three singular values in descending order.
/// For N < 3 the surplus columns of u and v are zero and their p is zero.
struct GramSvd {
  Eigen::MatrixXd u;  // N x 3
  Eigen::MatrixXd v;  // N x 3
  Eigen::Vector3d p = Eigen::Vector3d::Zero();

  Eigen::MatrixXd reconstruct() const { return u * p.asDiagonal() * v.transpose(); }
  int rank() const noexcept { return static_cast<int>((p.array() > 0.0).count()); }
};

namespace detail {

inline GramSvd truncate_svd(const Eigen::MatrixXd& u_full, const Eigen::MatrixXd& v_full,
                            const Eigen::VectorXd& values) {
  const Eigen::Index n = u_full.rows();
  const Eigen::Index kept = std::min<Eigen::Index>(3, values.size());
  GramSvd out;
  out.u = Eigen::MatrixXd::Zero(n, 3);
  out.v = Eigen::MatrixXd::Zero(v_full.rows(), 3);
  out.u.leftCols(kept) = u_full.leftCols(kept);
  out.v.leftCols(kept) = v_full.leftCols(kept);
  const double p_max = values.size() > 0 ? values(0) : 0.0;
  for (Eigen::Index i = 0; i < kept; ++i) {
    out.p(i) = (p_max > 0.0 && values(i) >= kSingularValueCutoff * p_max) ? values(i) : 0.0;
  }
  return out;
}

}  // namespace detail

/// Rank-3 SVD of the N x N Gram matrix itself. Eigen returns singular values
/// sorted descending; values below 1e-10 p_max are reported as zero.
inline GramSvd gram_svd(const SettingsEnsemble& settings) {
  const auto& g = settings.gram();
  if (g.rows() <= 16) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return detail::truncate_svd(svd.matrixU(), svd.matrixV(), svd.singularValues());
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return detail::truncate_svd(svd.matrixU(), svd.matrixV(), svd.singularValues());
}

/// Same factorization obtained from the N x 3 direction matrices:
/// a = Qa Ra, b = Qb Rb, gram = Qa (Ra Rb^T) Qb^T, SVD of the 3x3 core.
inline GramSvd gram_svd_factored(const SettingsEnsemble& settings) {
  const Eigen::MatrixXd a = settings.a_matrix();
  const Eigen::MatrixXd b = settings.b_matrix();
  const Eigen::Index k = std::min<Eigen::Index>(3, a.rows());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_a(a), qr_b(b);
  const Eigen::MatrixXd qa = qr_a.householderQ() * Eigen::MatrixXd::Identity(a.rows(), k);
  const Eigen::MatrixXd qb = qr_b.householderQ() * Eigen::MatrixXd::Identity(b.rows(), k);
  const Eigen::MatrixXd ra = qr_a.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rb = qr_b.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> core(ra * rb.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  return detail::truncate_svd(qa * core.matrixU(), qb * core.matrixV(), core.singularValues());
}

/// Three q and three t vectors in R^M with q_i . t_j = delta_ij, all
/// orthogonal to sqrt(rho).
struct AuxiliaryFrame {
  Matrix3X q;
  Matrix3X t;
  Eigen::VectorXd rho;

  int states() const noexcept { return static_cast<int>(rho.size()); }
};

/// Hidden-state weights and response tables.
struct DiscreteLhvModel {
  Eigen::VectorXd rho;      // M
  Eigen::MatrixXd a_table;  // N x M
  Eigen::MatrixXd b_table;  // N x M
  Visibility visibility;
};

namespace detail {

inline void check_weights(const Eigen::VectorXd& rho, double rho_min) {
  if (rho.size() < 4) throw InvalidInput("need M >= 4 hidden states, got " + std::to_string(rho.size()));
  if (rho.minCoeff() < rho_min * (1.0 - 1e-12)) throw InvalidInput("weight below rho_min");
  if (std::abs(rho.sum() - 1.0) > 1e-9) throw InvalidInput("weights must sum to 1");
}

/// Remove the component along sqrt(rho) from every row.
inline void project_out_sqrt_rho(Matrix3X& rows, const Eigen::VectorXd& rho) {
  const Eigen::VectorXd s = rho.cwiseSqrt();  // unit length because sum(rho) = 1
  const double norm2 = s.squaredNorm();
  for (int i = 0; i < 3; ++i) rows.row(i) -= (rows.row(i).dot(s) / norm2) * s.transpose();
}

/// t <- S^{-T} t with S = q t^T, so that q t^T = I afterwards.
/// Returns false when S is numerically singular.
inline bool biorthogonalize(const Matrix3X& q, Matrix3X& t) {
  const Eigen::Matrix3d cross = q * t.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(2) < 1e-8 * sv(0)) return false;
  t = cross.transpose().inverse() * t;
  return true;
}

}  // namespace detail

/// Random frame for the given weights. Six Gaussian M-vectors are projected
/// off sqrt(rho) and the t's biorthogonalized against the q's. A singular
/// cross-Gram is resampled from the next seed, at most 100 times.
inline AuxiliaryFrame make_frame(const Eigen::VectorXd& rho, std::uint64_t seed, double rho_min = kDefaultRhoMin) {
  detail::check_weights(rho, rho_min);
  const auto m = rho.size();
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng = make_rng(seed, attempt);
    std::normal_distribution<double> normal(0.0, 1.0);
    AuxiliaryFrame frame{Matrix3X(3, m), Matrix3X(3, m), rho};
    for (Eigen::Index n = 0; n < m; ++n)
      for (int i = 0; i < 3; ++i) frame.q(i, n) = normal(rng);
    for (Eigen::Index n = 0; n < m; ++n)
      for (int i = 0; i < 3; ++i) frame.t(i, n) = normal(rng);
    detail::project_out_sqrt_rho(frame.q, rho);
    detail::project_out_sqrt_rho(frame.t, rho);
    if (detail::biorthogonalize(frame.q, frame.t)) return frame;
  }
  throw ConstructionFailure("could not biorthogonalize auxiliary frame after 100 attempts");
}

/// Unscaled tables A' = U sqrt(p) q / sqrt(rho), B' = V sqrt(p) t / sqrt(rho).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> unscaled_tables(const GramSvd& svd, const AuxiliaryFrame& frame) {
  const Eigen::Vector3d root_p = svd.p.cwiseSqrt();
  const Eigen::VectorXd inv_root_rho = frame.rho.cwiseSqrt().cwiseInverse();
  const Matrix3X qs = frame.q * inv_root_rho.asDiagonal();
  const Matrix3X ts = frame.t * inv_root_rho.asDiagonal();
  return {(svd.u * root_p.asDiagonal()) * qs, (svd.v * root_p.asDiagonal()) * ts};
}

/// V = 1 / max(|A'|, |B'|)^2, capped at 1. Zero tables give V = 1.
inline double visibility_from_max_entry(double max_entry) noexcept {
  if (!(max_entry > 1.0)) return 1.0;
  return 1.0 / (max_entry * max_entry);
}

inline DiscreteLhvModel assemble_model(const GramSvd& svd, const AuxiliaryFrame& frame) {
  auto [a_prime, b_prime] = unscaled_tables(svd, frame);
  const double max_entry = std::max(a_prime.cwiseAbs().maxCoeff(), b_prime.cwiseAbs().maxCoeff());
  const double v = visibility_from_max_entry(max_entry);
  const double root_v = std::sqrt(v);
  return {frame.rho, root_v * a_prime, root_v * b_prime, Visibility(v)};
}

/// Rescales q by s and t by 1/s so the largest A' and B' entries coincide.
/// Biorthogonality is unchanged; the common maximum is sqrt(max|A'| max|B'|),
/// which is the smallest achievable over all such rescalings.
inline AuxiliaryFrame balance_frame(const GramSvd& svd, const AuxiliaryFrame& frame) {
  const auto [a_prime, b_prime] = unscaled_tables(svd, frame);
  const double alpha = a_prime.cwiseAbs().maxCoeff();
  const double beta = b_prime.cwiseAbs().maxCoeff();
  if (!(alpha > 0.0) || !(beta > 0.0)) return frame;
  const double s = std::sqrt(beta / alpha);
  return {frame.q * s, frame.t / s, frame.rho};
}

inline DiscreteLhvModel assemble_model(const SettingsEnsemble& settings, const AuxiliaryFrame& frame) {
  return assemble_model(gram_svd(settings), frame);
}

/// Largest violation of each constraint family; passes iff all <= tol.
struct ValidationReport {
  double correlation = 0.0;   // |sum rho A B - V gram|
  double bounds = 0.0;        // |A|, |B| above 1
  double marginals = 0.0;     // |sum rho A|, |sum rho B|
  double probability = 0.0;   // P_A(1) = (1-A)/2, P_B(1) = (1+B)/2 outside [0, 1]
  double weights = 0.0;       // negative rho or sum(rho) != 1
  bool passes = false;

  double worst() const noexcept { return std::max({correlation, bounds, marginals, probability, weights}); }
};

inline ValidationReport validate_model(const DiscreteLhvModel& model, const SettingsEnsemble& settings, double tol) {
  const Eigen::Index n = settings.size();
  if (model.a_table.rows() != n || model.b_table.rows() != n || model.a_table.cols() != model.rho.size() ||
      model.b_table.cols() != model.rho.size()) {
    throw InvalidInput("model and settings shapes do not match");
  }
  ValidationReport r;
  const Eigen::MatrixXd corr = model.a_table * model.rho.asDiagonal() * model.b_table.transpose();
  r.correlation = (corr - model.visibility.value() * settings.gram()).cwiseAbs().maxCoeff();
  const double max_entry = std::max(model.a_table.cwiseAbs().maxCoeff(), model.b_table.cwiseAbs().maxCoeff());
  r.bounds = std::max(0.0, max_entry - 1.0);
  r.marginals = std::max((model.a_table * model.rho).cwiseAbs().maxCoeff(),
                         (model.b_table * model.rho).cwiseAbs().maxCoeff());
  auto outside_unit = [](const Eigen::ArrayXXd& p) {
    return std::max({0.0, (-p).maxCoeff(), (p - 1.0).maxCoeff()});
  };
  r.probability = std::max(outside_unit((1.0 - model.a_table.array()) / 2.0),
                           outside_unit((1.0 + model.b_table.array()) / 2.0));
  r.weights = std::max(std::max(0.0, -model.rho.minCoeff()), std::abs(model.rho.sum() - 1.0));
  r.passes = r.worst() <= tol;
  return r;
}

}  // namespace lvt
