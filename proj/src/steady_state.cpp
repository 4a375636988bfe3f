#include "coevo/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coevo {

double fixed_point_rhs(const SocietyParams& p, double z) {
  const double denom = 1.0 - p.w - p.w * z;
  if (!(denom > 0.0)) {
    std::ostringstream msg;
    msg << "fixed_point_rhs: z = " << z << " is not below (1-w)/w; the exponent 1-w-w*z"
        << " must stay positive";
    throw std::domain_error(msg.str());
  }
  const double u = p.lambda_d * p.r / denom;
  if (u > 700.0) return 0.0;  // e^{-u} underflows; g is exactly 0 at double precision
  const double e = std::exp(-u);
  return e / (2.0 - e);
}

double fixed_point_residual(const SocietyParams& p, double z) {
  return fixed_point_rhs(p, z) - z;
}

namespace {

// Largest admissible mean quality: q_bar < min(1, (1-w)/w).
double quality_cap(const SocietyParams& p) {
  return p.w > 0.0 ? std::min(1.0, (1.0 - p.w) / p.w) : 1.0;
}

}  // namespace

namespace {

// Largest representable quality strictly below the cap with a positive exponent
// denominator. A couple of nextafter steps at most.
double just_below_cap(const SocietyParams& p, double cap) {
  double z = cap;
  do {
    z = std::nextafter(z, 0.0);
  } while (!(1.0 - p.w - p.w * z > 0.0));
  return z;
}

}  // namespace

double solve_mean_quality(const SocietyParams& p, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_mean_quality: tol must be > 0");
  if (p.w == 1.0) return 0.0;  // welfare pinned at 0; symmetric masses

  const double cap = quality_cap(p);
  if (cap < 1e-8) return 0.0;  // drifts below numeric noise; treated as degenerate

  double lo = 0.0;
  const double f_lo = fixed_point_residual(p, lo);
  if (f_lo <= 0.0) return 0.0;  // g(0) underflowed to 0: root is 0 to double precision

  // Upper bracket end. g(z) < 1 everywhere, so the residual is negative at z = 1,
  // which is a regular point whenever w < 1/2. For w >= 1/2 the cap coincides with
  // the singularity of the exponent, so back off from it geometrically until the
  // residual goes negative (g -> 0 at the singular end, so this terminates unless
  // the root itself sits within an ulp of the cap, which happens only for
  // lambda_d*r below ~1e-8).
  double hi;
  if (p.w < 0.5) {
    hi = 1.0;
    if (fixed_point_residual(p, hi) >= 0.0) {
      return std::nextafter(1.0, 0.0);  // root within one ulp of 1
    }
  } else {
    double gap = 1e-9 * cap;
    const double gap_floor = 4.0 * (cap - std::nextafter(cap, 0.0));
    for (;;) {
      if (gap < gap_floor) return just_below_cap(p, cap);  // root pinned at the cap
      hi = cap - gap;
      const double denom = 1.0 - p.w - p.w * hi;
      if (hi > 0.0 && denom > 0.0 && fixed_point_residual(p, hi) < 0.0) break;
      gap *= 0.125;
    }
  }

  bool at_resolution = false;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      at_resolution = true;  // interval narrowed to adjacent doubles
      break;
    }
    if (fixed_point_residual(p, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // lo and hi still bracket the root, so the midpoint is exact to one ulp. The
  // residual meets tol at every sane parameter set; for lambda_d*r below ~1e-8
  // it is ill-conditioned (|g'| can exceed 1e9 near the pinned root) and the
  // one-ulp bracket is the strongest available guarantee.
  const double root = 0.5 * (lo + hi);
  if (!at_resolution && std::abs(fixed_point_residual(p, root)) > tol) {
    std::ostringstream msg;
    msg << "solve_mean_quality: residual " << std::abs(fixed_point_residual(p, root))
        << " above tolerance " << tol << " at q_bar = " << root;
    throw convergence_error(msg.str());
  }
  return root;
}

SteadyState solve_steady_state(const SocietyParams& p, double tol) {
  SteadyState ss;
  if (p.w == 1.0 || quality_cap(p) < 1e-8) {
    ss.degenerate = true;
    ss.q_bar = 0.0;
    ss.rate_good = 1.0 - p.w;
    ss.rate_bad = p.w - 1.0;  // 0, not -0, when w = 1
    ss.mass_good = 0.5;
    ss.mass_bad = 0.5;
    return ss;
  }
  ss.q_bar = solve_mean_quality(p, tol);
  ss.rate_good = (1.0 - p.w) + p.w * ss.q_bar;
  ss.rate_bad = -(1.0 - p.w) + p.w * ss.q_bar;
  ss.lambda1 = p.lambda_d / ss.rate_good;
  ss.lambda2 = p.lambda_d / -ss.rate_bad;
  ss.mass_good = 0.5 * (1.0 + ss.q_bar);
  ss.mass_bad = 0.5 * (1.0 - ss.q_bar);
  return ss;
}

}  // namespace coevo
