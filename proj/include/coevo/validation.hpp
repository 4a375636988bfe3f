#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coevo/society.hpp"

namespace coevo {

/// Shape of a metric along a parameter grid.
enum class Verdict {
  monotone_increasing,
  monotone_decreasing,
  decreases_then_increases,
  non_monotone_other,
};

const char* to_string(Verdict v);

/// Asked to assert a theorem outside its proven parameter region.
class guard_violation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct SweepSpec {
  SocietyParams base{};
  std::string param;         ///< one of lambda_b, lambda_d, r, w
  std::vector<double> grid;  ///< strictly increasing, length >= 3
  std::string metric;        ///< q_bar, x_bar, pop, t_bar, t_bar_newborn, var_x, cf, t_good, t_bad, mass_good
  std::string guard_note;    ///< optional region annotation, carried into reports
};

struct SweepPoint {
  double value = 0.0;
  double metric = 0.0;
  bool ok = false;
  std::string error;  ///< per-point solver failure, recorded rather than fatal
};

struct SweepReport {
  SweepSpec spec;
  std::vector<SweepPoint> points;
  Verdict verdict = Verdict::non_monotone_other;
  bool zero_slope = false;  ///< every successive difference within tolerance
  std::optional<double> turning_point;  ///< grid argmin, set for decreases_then_increases
  std::string theorem_tag;
};

/// Metric value at one parameter point (solves the steady state internally).
double evaluate_metric(const SocietyParams& p, const std::string& metric);

/// Evaluates the metric over the grid and classifies the shape with the given
/// absolute tolerance on successive differences.
SweepReport sweep(const SweepSpec& spec, double tol = 1e-10, int jobs = 1);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// q_bar and x_bar non-increasing in each of w, lambda_d, r.
std::vector<CheckResult> check_lemma2(const SocietyParams& base);

/// pop increasing in lambda_b, w, r; decreasing in lambda_d (guard w < 1/2 for part d).
std::vector<CheckResult> check_theorem2(const SocietyParams& base);

/// cf increasing in lambda_b; decreasing in lambda_d, w; decreasing in r under the
/// guard lambda_d*r <= eps < 1/2 and w < 1/2 - eps.
std::vector<CheckResult> check_theorem3(const SocietyParams& base, double eps = 0.2);

/// var(w=0) > var(w=1) = 0, plus the large-r monotonicities in w and lambda_d.
std::vector<CheckResult> check_theorem5(const SocietyParams& base);

/// Lifetime-vs-collectivism regime classification around theta* = ln(1 + sqrt(2)/2).
struct Theorem4Report {
  double theta = 0.0;           ///< lambda_d * r
  bool above_threshold = false; ///< theta > theta*
  bool boundary_case = false;   ///< theta == theta* within 1e-12
  Verdict verdict = Verdict::non_monotone_other;
  std::optional<double> turning_point;   ///< located w* (or r*) with q_bar = sqrt(2)-1
  std::optional<double> q_at_turning;
  bool pass = false;
  std::string detail;
};

inline constexpr double theta_star = 0.53479999673957037;  ///< ln(1 + sqrt(2)/2)

Theorem4Report check_theorem4(const SocietyParams& base);       ///< t_bar vs w
Theorem4Report check_theorem4_vs_r(const SocietyParams& base);  ///< t_bar vs r

/// Number of residual sign changes over a dense z grid (Theorem 1 expects exactly 1).
int check_uniqueness(const SocietyParams& p, double grid_step = 1e-4);

struct SuiteReport {
  std::vector<CheckResult> checks;
  bool all_pass = false;
};

/// Default grids for the theorem suite.
std::vector<double> default_w_grid();    ///< {0, 0.05, ..., 0.95, 1}
std::vector<double> default_log_grid();  ///< {0.25, 0.5, 1, 2, 4}

/// Runs every lemma/theorem check on the default grids.
SuiteReport run_theorem_suite(const SocietyParams& base, double eps = 0.2, int jobs = 1);

}  // namespace coevo
