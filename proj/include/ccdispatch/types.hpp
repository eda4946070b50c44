#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

namespace ccdispatch {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid or inconsistent problem data: bad dimensions, missing fields,
/// malformed files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The requested objective is not convex (a_m < 0, c_n > 0, negative Q).
struct ConvexityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain (negative multiplier, quota larger
/// than the sample, index out of range).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Internal structural inconsistency, e.g. missing coupling-row tags.
struct StructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ccdispatch
