#pragma once

#include <stdexcept>

namespace lsam {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad sizes, counts, values, or argument combinations.
struct InvalidArgumentError : Error {
  using Error::Error;
};

// Config file / override problems. CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// No solvable grid layout within the resample budget.
struct LayoutInfeasibleError : Error {
  using Error::Error;
};

// Policy iteration failed to stabilize within the sweep budget.
struct NonConvergenceError : Error {
  using Error::Error;
};

// Stationary solve singular, or stationary mass vanishes somewhere.
// CLI exit code 3.
struct ReducibleChainError : Error {
  using Error::Error;
};

// A sampled feature row kept a (near) zero norm after resampling.
struct DegenerateFeatureError : Error {
  using Error::Error;
};

// System matrix too ill-conditioned to invert. CLI exit code 3.
struct SingularMatrixError : Error {
  using Error::Error;
};

// Poisson equation residual above tolerance. CLI exit code 3.
struct PoissonSolveError : Error {
  using Error::Error;
};

// Lyapunov solve ill-posed. CLI exit code 3.
struct NotHurwitzError : Error {
  using Error::Error;
};

// lambda_min of the design matrix below threshold. CLI exit code 3.
struct DegenerateDesignError : Error {
  using Error::Error;
};

// An iterate escaped the safety bound. CLI exit code 4.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace lsam
