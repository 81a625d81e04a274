#pragma once

// Quantum side of the problem: the visibility-damped singlet joint
// probability, Legendre polynomials and averaging over the unit sphere.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lvt/errors.hpp"

namespace lvt {

inline constexpr double kUnitNormTolerance = 1e-9;

/// Unit vector on S^2. Construction renormalizes inputs whose norm is
/// within 1e-9 of one and rejects everything else.
class Direction {
 public:
  Direction() = default;  // +z

  Direction(double x, double y, double z) {
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw InvalidInput("direction is not a unit vector (norm " + std::to_string(norm) + ")");
    }
    x_ = x / norm;
    y_ = y / norm;
    z_ = z / norm;
  }

  explicit Direction(const Eigen::Vector3d& v) : Direction(v.x(), v.y(), v.z()) {}

  /// Normalizes an arbitrary nonzero vector.
  static Direction normalized(double x, double y, double z) {
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw InvalidInput("cannot normalize a zero or non-finite vector");
    }
    return Direction(x / norm, y / norm, z / norm);
  }
  static Direction normalized(const Eigen::Vector3d& v) { return normalized(v.x(), v.y(), v.z()); }

  /// Spherical angles: theta from +z, phi azimuth in the xy plane.
  static Direction from_angles(double theta, double phi) {
    const double s = std::sin(theta);
    return normalized(s * std::cos(phi), s * std::sin(phi), std::cos(theta));
  }

  /// Uniform on the sphere: three standard normals, normalized.
  template <class Urbg>
  static Direction random(Urbg& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
      const double x = normal(rng);
      const double y = normal(rng);
      const double z = normal(rng);
      if (x * x + y * y + z * z > 1e-24) return normalized(x, y, z);
    }
  }

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double z() const noexcept { return z_; }
  Eigen::Vector3d vector() const { return {x_, y_, z_}; }

  double dot(const Direction& o) const noexcept { return x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }
  Direction operator-() const noexcept {
    Direction d;
    d.x_ = -x_;
    d.y_ = -y_;
    d.z_ = -z_;
    return d;
  }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 1.0;
};

/// Measurement result, +1 or -1.
class Outcome {
 public:
  constexpr Outcome() = default;
  static constexpr Outcome up() { return Outcome(1); }
  static constexpr Outcome down() { return Outcome(-1); }
  static Outcome from_int(int v) {
    if (v != 1 && v != -1) throw InvalidInput("outcome must be +1 or -1, got " + std::to_string(v));
    return Outcome(v);
  }

  constexpr int value() const noexcept { return v_; }
  constexpr Outcome operator-() const noexcept { return Outcome(-v_); }
  friend constexpr bool operator==(Outcome, Outcome) = default;

 private:
  constexpr explicit Outcome(int v) : v_(v) {}
  int v_ = 1;
};

inline constexpr Outcome kOutcomes[2] = {Outcome::up(), Outcome::down()};

/// Visibility V in [0, 1].
class Visibility {
 public:
  constexpr Visibility() = default;
  explicit Visibility(double v) : v_(v) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("visibility must lie in [0, 1], got " + std::to_string(v));
  }
  constexpr double value() const noexcept { return v_; }
  friend constexpr auto operator<=>(Visibility, Visibility) = default;

 private:
  double v_ = 0.0;
};

/// P(m, m'; a, b) = (1 - m m' V a.b) / 4.
inline double quantum_joint(Outcome m, Outcome m2, const Direction& a, const Direction& b, Visibility v) noexcept {
  return 0.25 * (1.0 - m.value() * m2.value() * v.value() * a.dot(b));
}

/// Single-side marginal; always 1/2 for the singlet family.
inline double quantum_marginal(Outcome m, const Direction& a, Visibility v) noexcept {
  const Direction other = a;  // any setting on the far side gives the same sum
  return quantum_joint(m, Outcome::up(), a, other, v) + quantum_joint(m, Outcome::down(), a, other, v);
}

/// Legendre polynomial P_j(x) by the three-term recurrence.
inline double legendre(int j, double x) {
  if (j < 0) throw InvalidInput("legendre degree must be nonnegative");
  if (!(std::abs(x) <= 1.0 + 1e-12)) throw InvalidInput("legendre argument outside [-1, 1]");
  x = std::clamp(x, -1.0, 1.0);
  if (j == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < j; ++k) {
    const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Gauss-Legendre nodes and weights on [-1, 1] (weights sum to 2).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw InvalidInput("gauss_legendre needs at least one node");
  std::vector<double> nodes(n), weights(n);
  if (n == 1) {
    nodes[0] = 0.0;
    weights[0] = 2.0;
    return {nodes, weights};
  }
  // (P_n(x), P_n'(x))
  auto eval = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 1; k < n; ++k) {
      const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = eval(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = eval(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  return {nodes, weights};
}

/// Average of f over the unit sphere, i.e. the integral of f dOmega / 4pi.
/// Exact for polynomials in the direction components up to `degree`:
/// (degree+1) Gauss nodes in cos(theta) times 2(degree+1) azimuth nodes.
inline double sphere_quadrature(const std::function<double(const Direction&)>& f, int degree) {
  if (degree < 1) throw InvalidInput("quadrature degree must be >= 1");
  const auto [nodes, weights] = gauss_legendre(degree + 1);
  const int n_phi = 2 * (degree + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double z = nodes[i];
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ring = 0.0;
    for (int k = 0; k < n_phi; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / n_phi;
      ring += f(Direction::normalized(r * std::cos(phi), r * std::sin(phi), z));
    }
    total += weights[i] * ring / n_phi;
  }
  return 0.5 * total;
}

}  // namespace lvt
