#include "coevo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coevo {
namespace {

// Lower incomplete gamma gamma(n, theta) = int_0^theta s^{n-1} e^{-s} ds for n = 2, 3.
// The closed forms 1 - e^{-t}(1+t) and 2 - e^{-t}(t^2+2t+2) cancel catastrophically
// for small theta, so switch to the alternating series there.
double lower_gamma(int n, double theta) {
  if (theta <= 0.0) return 0.0;
  if (n == 1) return -std::expm1(-theta);
  if (theta < 0.3) {
    // sum_k (-1)^k theta^{n+k} / (k! (n+k))
    double term = std::pow(theta, n) / n;
    double sum = term;
    for (int k = 1; k < 40; ++k) {
      term *= -theta * (n + k - 1.0) / (k * (n + k));
      sum += term;
      if (std::abs(term) < 1e-20 * std::abs(sum)) break;
    }
    return sum;
  }
  const double e = std::exp(-theta);
  if (n == 2) return 1.0 - e * (1.0 + theta);
  return 2.0 - e * (theta * theta + 2.0 * theta + 2.0);
}

void require_solved(const SteadyState& ss) {
  if (ss.degenerate) return;
  if (!ss.lambda1 || !ss.lambda2) {
    throw std::logic_error("metrics: steady state missing decay constants");
  }
}

void require_density(const SteadyState& ss) {
  if (ss.degenerate) {
    throw degenerate_error(
        "density undefined at w = 1: the welfare distribution is a point mass at 0");
  }
}

// Shared intermediates of the piecewise-exponential density.
struct Derived {
  double l1, l2, theta, g1, g2, g3;
};

Derived derive(const SocietyParams& p, const SteadyState& ss) {
  Derived d;
  d.l1 = *ss.lambda1;
  d.l2 = *ss.lambda2;
  d.theta = d.l2 * p.r;
  d.g1 = lower_gamma(1, d.theta);
  d.g2 = lower_gamma(2, d.theta);
  d.g3 = lower_gamma(3, d.theta);
  return d;
}

}  // namespace

double population(const SocietyParams& p, const SteadyState& ss) {
  return p.lambda_b / (p.lambda_d * (1.0 + ss.q_bar));
}

double average_welfare(const SocietyParams& p, const SteadyState& ss) {
  return (p.r + 1.0 / p.lambda_d) * ss.q_bar;
}

double conditional_mean_welfare(const SocietyParams& p, const SteadyState& ss, Quality q) {
  require_density(ss);
  require_solved(ss);
  const Derived d = derive(p, ss);
  if (q == Quality::good) return 1.0 / d.l1;
  return -d.g2 / (d.l2 * d.g1);  // equals -1/l2 + r e^{-l2 r}/(1 - e^{-l2 r})
}

double average_lifetime(const SocietyParams& p, const SteadyState& ss) {
  if (ss.degenerate) return 1.0 / p.lambda_d;
  const Derived d = derive(p, ss);
  const double t_good = 1.0 / p.lambda_d;
  const double t_bad = d.g1 / p.lambda_d;
  return ss.mass_good * t_good + ss.mass_bad * t_bad;
}

double welfare_variance(const SocietyParams& p, const SteadyState& ss) {
  if (ss.degenerate) return 0.0;
  const Derived d = derive(p, ss);
  const double ex2_good = 2.0 / (d.l1 * d.l1);
  const double ex2_bad = d.g3 / (d.l2 * d.l2 * d.g1);
  const double ex2 = ss.mass_good * ex2_good + ss.mass_bad * ex2_bad;
  const double x_bar = average_welfare(p, ss);
  return ex2 - x_bar * x_bar;
}

double cumulative_welfare(const SocietyParams& p, const SteadyState& ss) {
  return (p.r + 1.0 / p.lambda_d) * (p.lambda_b / p.lambda_d) * ss.q_bar / (1.0 + ss.q_bar);
}

std::pair<double, double> death_rate_decomposition(const SocietyParams& p,
                                                   const SteadyState& ss) {
  if (ss.degenerate) return {p.lambda_b, 0.0};
  const double natural = p.lambda_d * population(p, ss);
  return {natural, p.lambda_b - natural};  // boundary rate = lambda_d*q_bar*pop, summing exactly
}

double density_at(const SocietyParams& p, const SteadyState& ss, double x) {
  require_density(ss);
  require_solved(ss);
  if (x < -p.r) return 0.0;
  const double norm = p.lambda_b / (2.0 * p.lambda_d);  // pop/(2 - e^{-l2 r}) in closed form
  if (x >= 0.0) return norm * *ss.lambda1 * std::exp(-*ss.lambda1 * x);
  return norm * *ss.lambda2 * std::exp(*ss.lambda2 * x);
}

double density_mass(const SocietyParams& p, const SteadyState& ss, double a, double b) {
  require_density(ss);
  require_solved(ss);
  if (b <= a) return 0.0;
  const double norm = p.lambda_b / (2.0 * p.lambda_d);
  double mass = 0.0;
  const double a0 = std::max(a, -p.r);
  const double b0 = std::min(b, 0.0);
  if (b0 > a0) mass += norm * (std::exp(*ss.lambda2 * b0) - std::exp(*ss.lambda2 * a0));
  const double a1 = std::max(a, 0.0);
  if (b > a1) {
    const double upper = std::isinf(b) ? 0.0 : std::exp(-*ss.lambda1 * b);
    mass += norm * (std::exp(-*ss.lambda1 * a1) - upper);
  }
  return mass;
}

DensityProfile density_profile(const SocietyParams& p, const SteadyState& ss, double x_max,
                               int n) {
  require_density(ss);
  require_solved(ss);
  if (n < 2) throw std::invalid_argument("density_profile: need at least 2 grid points");
  if (x_max <= 0.0) x_max = 40.0 / *ss.lambda1;
  if (x_max <= -p.r) throw std::invalid_argument("density_profile: x_max must exceed -r");
  DensityProfile prof;
  prof.x_max = x_max;
  prof.grid.resize(n);
  prof.values.resize(n);
  const double step = (x_max + p.r) / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double x = (i == 0) ? -p.r : (i == n - 1 ? x_max : -p.r + step * i);
    prof.grid[i] = x;
    prof.values[i] = density_at(p, ss, x);
  }
  return prof;
}

SocietyMetrics compute_metrics(const SocietyParams& p, const SteadyState& ss) {
  SocietyMetrics m;
  if (ss.degenerate) {
    m.pop = p.lambda_b / p.lambda_d;
    m.x_bar = 0.0;
    m.var_x = 0.0;
    m.cf = 0.0;
    m.x_bar_good = 0.0;
    m.x_bar_bad = 0.0;
    m.t_good = 1.0 / p.lambda_d;
    m.t_bad = 1.0 / p.lambda_d;
    m.t_bar = 1.0 / p.lambda_d;
    m.t_bar_newborn = 1.0 / p.lambda_d;
    m.t2.reset();
    m.rate_natural = p.lambda_b;
    m.rate_boundary = 0.0;
    return m;
  }
  require_solved(ss);
  const Derived d = derive(p, ss);
  m.pop = population(p, ss);
  m.x_bar = average_welfare(p, ss);
  m.x_bar_good = 1.0 / d.l1;
  m.x_bar_bad = -d.g2 / (d.l2 * d.g1);
  m.t_good = 1.0 / p.lambda_d;
  m.t_bad = d.g1 / p.lambda_d;
  m.t_bar = ss.mass_good * m.t_good + ss.mass_bad * m.t_bad;
  m.t_bar_newborn = (1.0 / p.lambda_d) / (1.0 + ss.q_bar);
  m.var_x = welfare_variance(p, ss);
  m.cf = m.pop * m.x_bar;
  m.t2 = p.r / -ss.rate_bad;
  const auto rates = death_rate_decomposition(p, ss);
  m.rate_natural = rates.first;
  m.rate_boundary = rates.second;
  return m;
}

}  // namespace coevo
