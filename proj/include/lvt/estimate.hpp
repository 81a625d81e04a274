#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "lvt/errors.hpp"

namespace lvt {

enum class Provenance { analytic, mc_search, oracle, bell, chsh };

constexpr std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::analytic: return "analytic";
    case Provenance::mc_search: return "mc-search";
    case Provenance::oracle: return "oracle";
    case Provenance::bell: return "bell";
    case Provenance::chsh: return "chsh";
  }
  return "unknown";
}

inline Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::analytic, Provenance::mc_search, Provenance::oracle, Provenance::bell, Provenance::chsh}) {
    if (to_string(p) == s) return p;
  }
  throw InvalidInput("unknown provenance '" + std::string(s) + "'");
}

/// A threshold-visibility value and where it came from.
/// n_settings is 0 for quantities that do not refer to a finite N
/// (closed forms, extrapolation to N -> infinity).
struct VisibilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_settings = 0;
  Provenance provenance = Provenance::analytic;
  std::uint64_t seed = 0;
  std::uint64_t iterations_used = 0;

  friend bool operator==(const VisibilityEstimate&, const VisibilityEstimate&) = default;
};

}  // namespace lvt
