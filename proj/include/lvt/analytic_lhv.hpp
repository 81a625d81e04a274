#pragma once

// Rotationally symmetric hidden-variable model: lambda is a unit vector with
// uniform density, and the response to setting n is f(m n.lambda) with f a
// finite Legendre series. Only c_0 and c_1 survive the comparison with the
// quantum prediction, which pins c_0 = 1/2 and c_1 = sqrt(3V)/2.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lvt/core_model.hpp"
#include "lvt/errors.hpp"

namespace lvt {

enum class Side { A, B };

class LegendreLhvModel {
 public:
  static constexpr int kGridPoints = 1001;

  LegendreLhvModel() : LegendreLhvModel(std::vector<double>{0.5}) {}

  explicit LegendreLhvModel(std::vector<double> coefficients) : coefficients_(std::move(coefficients)) {
    if (coefficients_.empty()) throw InvalidInput("Legendre model needs at least c_0");
    min_response_ = std::min(f(-1.0), f(1.0));
    for (int i = 0; i < kGridPoints; ++i) {
      const double x = -1.0 + 2.0 * i / (kGridPoints - 1);
      min_response_ = std::min(min_response_, f(x));
    }
  }

  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  int degree() const noexcept { return static_cast<int>(coefficients_.size()) - 1; }

  double f(double x) const {
    double sum = 0.0;
    for (int j = 0; j <= degree(); ++j) sum += coefficients_[j] * legendre(j, x);
    return sum;
  }

  /// Smallest f over the endpoints and the uniform grid.
  double min_response() const noexcept { return min_response_; }

  /// f >= 0 on [-1, 1] (grid-certified).
  bool is_nonnegative() const noexcept { return min_response_ >= 0.0; }

  /// Usable as a probability response: f >= 0 and f(x) + f(-x) = 1.
  bool is_valid() const noexcept { return is_nonnegative() && coefficients_[0] == 0.5; }

 private:
  std::vector<double> coefficients_;
  double min_response_ = 0.0;
};

/// Probability of outcome m on `side` for setting n and hidden direction lambda.
/// Side B answers with the opposite sign (identical particles).
inline double response(const LegendreLhvModel& model, Outcome m, const Direction& n, const Direction& lambda,
                       Side side = Side::A) {
  if (!model.is_nonnegative()) {
    throw InvalidModel("response function is negative somewhere (min " + std::to_string(model.min_response()) + ")");
  }
  if (model.coefficients()[0] != 0.5) throw InvalidModel("response requires c_0 = 1/2");
  const int sign = side == Side::A ? m.value() : -m.value();
  return model.f(sign * n.dot(lambda));
}

/// c_0 = 1/2, c_1 = sqrt(3v)/2. Valid exactly when v <= 1/3.
inline LegendreLhvModel model_for_visibility(Visibility v) {
  return LegendreLhvModel({0.5, std::sqrt(3.0 * v.value()) / 2.0});
}

/// Closed form P_HV(m, m'; a, b) = sum_j c_j^2 / (2j+1) P_j(-m m' a.b).
inline double reconstruct_joint(const LegendreLhvModel& model, Outcome m, Outcome m2, const Direction& a,
                                const Direction& b) {
  const double x = -m.value() * m2.value() * a.dot(b);
  double sum = 0.0;
  const auto& c = model.coefficients();
  for (int j = 0; j <= model.degree(); ++j) sum += c[j] * c[j] / (2.0 * j + 1.0) * legendre(j, x);
  return sum;
}

/// The same joint probability by averaging f(m a.lambda) f(-m' b.lambda)
/// over the sphere. Does not require f >= 0.
inline double reconstruct_joint_quadrature(const LegendreLhvModel& model, Outcome m, Outcome m2, const Direction& a,
                                           const Direction& b) {
  const int degree = std::max(1, 2 * model.degree());
  return sphere_quadrature(
      [&](const Direction& lambda) { return model.f(m.value() * a.dot(lambda)) * model.f(-m2.value() * b.dot(lambda)); },
      degree);
}

inline Visibility analytic_threshold() { return Visibility(1.0 / 3.0); }

/// Bisection on v for the point where model_for_visibility stops being valid.
/// Requires valid(lo) and !valid(hi).
inline double positivity_flip(double lo = 0.0, double hi = 1.0, double tol = 1e-12) {
  auto valid = [](double v) { return model_for_visibility(Visibility(v)).is_valid(); };
  if (!valid(lo) || valid(hi)) throw InvalidInput("positivity_flip: bracket does not straddle the flip");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (valid(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct PositivityScanRow {
  double visibility;
  double c1;
  double min_response;
  bool valid;
};

/// Validity of model_for_visibility on lo, lo+step, ... <= hi.
inline std::vector<PositivityScanRow> positivity_scan(double lo, double hi, double step) {
  if (!(step > 0.0) || lo > hi || lo < 0.0 || hi > 1.0) throw InvalidInput("bad positivity scan range");
  std::vector<PositivityScanRow> rows;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) {
    const double v = std::min(hi, lo + static_cast<double>(i) * step);
    const auto model = model_for_visibility(Visibility(v));
    rows.push_back({v, model.coefficients()[1], model.min_response(), model.is_valid()});
  }
  return rows;
}

}  // namespace lvt
