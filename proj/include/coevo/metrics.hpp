#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coevo/society.hpp"
#include "coevo/steady_state.hpp"

namespace coevo {

/// Operation needs a proper welfare density but the state is a point mass (w = 1).
class degenerate_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Quality : int { bad = -1, good = +1 };

/// Closed-form steady-state societal metrics.
struct SocietyMetrics {
  double pop = 0.0;            ///< total population mass, lambda_b/(lambda_d*(1+q_bar))
  double x_bar = 0.0;          ///< average welfare, (r + 1/lambda_d)*q_bar
  double t_bar = 0.0;          ///< average lifetime, population-share weighted
  double t_bar_newborn = 0.0;  ///< diagnostic: newborn-weighted lifetime, (1/lambda_d)/(1+q_bar)
  double var_x = 0.0;          ///< welfare variance of the stationary density
  double cf = 0.0;             ///< cumulative welfare, pop * x_bar
  double x_bar_good = 0.0;     ///< mean welfare of Q=+1 agents, 1/lambda1
  double x_bar_bad = 0.0;      ///< mean welfare of Q=-1 agents, in (-r, 0]
  double t_good = 0.0;         ///< mean lifetime of Q=+1 agents, 1/lambda_d
  double t_bad = 0.0;          ///< mean lifetime of Q=-1 agents
  std::optional<double> t2;    ///< boundary-hit time r/|rate_bad|; absent when degenerate
  double rate_natural = 0.0;   ///< death mass-rate from the Poisson clock, lambda_d*pop
  double rate_boundary = 0.0;  ///< death mass-rate at the boundary, lambda_b - rate_natural
};

/// Stationary population density sampled on a welfare grid.
struct DensityProfile {
  std::vector<double> grid;    ///< ordered sample points; grid.front() == -r
  std::vector<double> values;  ///< p(x) >= 0 at each point
  double x_max = 0.0;          ///< positive-side cutoff
};

double population(const SocietyParams& p, const SteadyState& ss);
double average_welfare(const SocietyParams& p, const SteadyState& ss);

/// Conditional mean welfare by quality; throws degenerate_error when w = 1.
double conditional_mean_welfare(const SocietyParams& p, const SteadyState& ss, Quality q);

double average_lifetime(const SocietyParams& p, const SteadyState& ss);
double welfare_variance(const SocietyParams& p, const SteadyState& ss);
double cumulative_welfare(const SocietyParams& p, const SteadyState& ss);

/// (rate_natural, rate_boundary); the two sum to lambda_b exactly.
std::pair<double, double> death_rate_decomposition(const SocietyParams& p, const SteadyState& ss);

/// Population density p(x). Zero below -r; jump at 0 with ratio lambda1/lambda2.
/// Throws degenerate_error when the state is a point mass.
double density_at(const SocietyParams& p, const SteadyState& ss, double x);

/// Mass of the stationary population with welfare in [a, b] (closed form).
double density_mass(const SocietyParams& p, const SteadyState& ss, double a, double b);

/// Plot-ready density table on [-r, x_max]; x_max <= 0 picks 40/lambda1.
DensityProfile density_profile(const SocietyParams& p, const SteadyState& ss,
                               double x_max = 0.0, int n = 513);

/// Everything above in one record (degenerate case returns the point-mass values).
SocietyMetrics compute_metrics(const SocietyParams& p, const SteadyState& ss);

}  // namespace coevo
