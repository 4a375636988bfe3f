#pragma once

#include <optional>
#include <stdexcept>

#include "coevo/society.hpp"

namespace coevo {

/// Bisection failed to reach the requested residual tolerance.
class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solved steady state: mean quality plus everything derived from it.
struct SteadyState {
  double q_bar = 0.0;      ///< mean quality, in [0, 1)
  double rate_good = 0.0;  ///< welfare drift of Q=+1 agents, (1-w) + w*q_bar
  double rate_bad = 0.0;   ///< welfare drift of Q=-1 agents, -(1-w) + w*q_bar, <= 0
  std::optional<double> lambda1;  ///< lambda_d / rate_good; absent when degenerate
  std::optional<double> lambda2;  ///< lambda_d / |rate_bad|; absent when degenerate
  double mass_good = 0.5;  ///< population fraction with Q=+1, (1+q_bar)/2
  double mass_bad = 0.5;   ///< population fraction with Q=-1, (1-q_bar)/2
  bool degenerate = false; ///< w = 1 (or within ~1e-8 of it): welfare is a point mass at 0
};

/// g(z): the mean quality implied by candidate mean quality z,
///   g(z) = e^{-u}/(2 - e^{-u}),  u = lambda_d*r/(1 - w - w*z).
/// Defined for z < (1-w)/w (exponent positive); throws std::domain_error otherwise.
double fixed_point_rhs(const SocietyParams& p, double z);

/// Residual g(z) - z of the steady-state fixed point. Strictly decreasing in z
/// on its domain, which is what makes the bisection bracket valid.
double fixed_point_residual(const SocietyParams& p, double z);

/// Unique steady-state mean quality. Bisection on the proven-monotone residual;
/// w = 1 returns 0 without iteration. Postcondition |g(q) - q| <= tol.
double solve_mean_quality(const SocietyParams& p, double tol = 1e-12);

/// Solves for q_bar and fills in drifts, decay constants and mass fractions.
SteadyState solve_steady_state(const SocietyParams& p, double tol = 1e-12);

}  // namespace coevo
