#pragma once

#include <cmath>
#include <cstdint>

#include "lsam/errors.hpp"

namespace lsam {

// Step-size schedule alpha_k = c0 / (k + k0)^gamma.
struct StepSchedule {
  double c0 = 0.0;
  long k0 = 0;
  double gamma = 0.0;

  void validate() const {
    if (!(c0 > 0.0)) {
      throw InvalidArgumentError("StepSchedule: c0 must be positive");
    }
    if (k0 < 0) {
      throw InvalidArgumentError("StepSchedule: k0 must be non-negative");
    }
    if (!(gamma >= 0.5 && gamma < 1.0)) {
      throw InvalidArgumentError("StepSchedule: gamma must lie in [1/2, 1)");
    }
  }
};

inline double step_size(const StepSchedule& schedule, long k) {
  if (k < 1) {
    throw InvalidArgumentError("step_size: k must be >= 1");
  }
  return schedule.c0 *
         std::pow(double(k) + double(schedule.k0), -schedule.gamma);
}

}  // namespace lsam
