#pragma once

#include <cmath>
#include <span>

namespace lsam {

// Standard normal CDF through erfc; absolute error well below 1e-14.
double normal_cdf(double x);

// Inverse standard normal CDF (Wichura's rational approximations),
// p in (0, 1).
double normal_quantile(double p);

// Linear-interpolation quantile (R type 7). `quantile` copies and sorts.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::span<const double> data, double p);
double median(std::span<const double> data);

// Compensated (Neumaier) summation.
double neumaier_sum(std::span<const double> xs);

// Running compensated accumulator for streaming sums.
struct NeumaierAcc {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const noexcept { return sum + comp; }
};

}  // namespace lsam
