#include "nvcharge/population.hpp"

#include <algorithm>
#include <cmath>

#include "nvcharge/error.hpp"

namespace nvcharge {

PopulationState::PopulationState(const Vector7& p) : p_(p) {
  FieldChecker fc("population state");
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    fc.require(std::isfinite(p(i)) && p(i) >= 0.0 && p(i) <= 1.0,
               "p" + std::to_string(i), "must lie in [0, 1]");
  }
  fc.require(std::abs(p.sum() - 1.0) <= 1e-9, "sum", "populations must sum to 1");
  fc.throw_if_failed();
}

PopulationState PopulationState::pure(Level l) {
  Vector7 v = Vector7::Zero();
  v(idx(l)) = 1.0;
  return PopulationState(v);
}

PopulationState make_population_checked(const Vector7& p, const char* origin, double tol) {
  Vector7 q = p;
  for (std::size_t i = 0; i < kNumLevels; ++i) {
    if (!std::isfinite(q(i)) || q(i) < -tol || q(i) > 1.0 + tol || std::abs(q.sum() - 1.0) > 1e-9) {
      throw NumericalError(std::string(origin) + ": result is not a valid population vector");
    }
    q(i) = std::clamp(q(i), 0.0, 1.0);
  }
  return PopulationState(q);
}

}  // namespace nvcharge
