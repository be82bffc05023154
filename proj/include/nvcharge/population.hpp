#pragma once

#include "nvcharge/rate_matrix.hpp"

namespace nvcharge {

/// Occupation probabilities over the seven levels.
class PopulationState {
 public:
  /// Throws ConfigError unless entries lie in [0, 1] and sum to 1 within 1e-9.
  explicit PopulationState(const Vector7& p);

  /// All population in a single level.
  static PopulationState pure(Level l);

  const Vector7& vector() const noexcept { return p_; }
  double operator[](Level l) const { return p_(idx(l)); }
  double operator[](std::size_t i) const { return p_(i); }

  double nv_minus() const noexcept { return p_.head<5>().sum(); }
  double nv_zero() const noexcept { return p_.tail<2>().sum(); }

 private:
  Vector7 p_;
};

/// Clamps round-off negatives (>= -tol) to zero and rejects anything worse.
/// Used by the propagators whose outputs are valid up to floating point error.
PopulationState make_population_checked(const Vector7& p, const char* origin, double tol = 1e-10);

}  // namespace nvcharge
