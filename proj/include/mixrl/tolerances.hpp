#pragma once

// Central numeric tolerances. Everything that gates a validation or a solver
// acceptance lives here so tests and library code agree on one set of numbers.

namespace mixrl::tol {

// Row-stochasticity / distribution sum checks.
inline constexpr double kStochastic = 1e-12;

// Infinity-norm residual accepted for a steady-state solve (mu P vs mu).
inline constexpr double kSteadyState = 1e-10;

// Per-state residual accepted for the bias (Poisson) equation.
inline constexpr double kBias = 1e-8;

// Span-seminorm stopping threshold for relative value iteration.
inline constexpr double kRviSpan = 1e-9;
inline constexpr long kRviMaxIter = 1000000;

// Default ergodicity smoothing strength.
inline constexpr double kSmoothEps = 1e-6;

// Convergence threshold for shortest-stochastic-path value iteration.
inline constexpr double kSspTol = 1e-10;
inline constexpr long kSspMaxIter = 1000000;

// Identity checks that should hold to floating-point exactness.
inline constexpr double kExact = 1e-12;

// Margin a candidate gain must clear before a planner commits a policy row.
inline constexpr double kImproveTol = 1e-12;

}  // namespace mixrl::tol
