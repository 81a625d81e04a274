#pragma once

#include <stdexcept>
#include <string>

namespace lvt {

/// Arguments outside an operation's domain (non-unit vector, |x| > 1, bad size).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// A Legendre response model whose f(x) dips below zero somewhere on [-1, 1].
class InvalidModel : public std::domain_error {
 public:
  explicit InvalidModel(const std::string& what) : std::domain_error(what) {}
};

/// Auxiliary frame could not be biorthogonalized after repeated resampling.
class ConstructionFailure : public std::runtime_error {
 public:
  explicit ConstructionFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Problem size beyond what an exact method can handle.
class ResourceLimit : public std::length_error {
 public:
  explicit ResourceLimit(const std::string& what) : std::length_error(what) {}
};

}  // namespace lvt
