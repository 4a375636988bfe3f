#include "coevo/validation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "coevo/format.hpp"
#include "coevo/metrics.hpp"
#include "coevo/steady_state.hpp"

namespace coevo {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::monotone_increasing:
      return "monotone-increasing";
    case Verdict::monotone_decreasing:
      return "monotone-decreasing";
    case Verdict::decreases_then_increases:
      return "decreases-then-increases";
    default:
      return "non-monotone-other";
  }
}

double evaluate_metric(const SocietyParams& p, const std::string& metric) {
  const SteadyState ss = solve_steady_state(p);
  if (metric == "q_bar") return ss.q_bar;
  if (metric == "mass_good") return ss.mass_good;
  const SocietyMetrics m = compute_metrics(p, ss);
  if (metric == "x_bar") return m.x_bar;
  if (metric == "pop") return m.pop;
  if (metric == "t_bar") return m.t_bar;
  if (metric == "t_bar_newborn") return m.t_bar_newborn;
  if (metric == "var_x") return m.var_x;
  if (metric == "cf") return m.cf;
  if (metric == "t_good") return m.t_good;
  if (metric == "t_bad") return m.t_bad;
  if (metric == "x_bar_good") return m.x_bar_good;
  if (metric == "x_bar_bad") return m.x_bar_bad;
  throw std::invalid_argument("unknown metric: " + metric);
}

namespace {

SocietyParams with_param(const SocietyParams& base, const std::string& name, double v) {
  double lb = base.lambda_b;
  double ld = base.lambda_d;
  double r = base.r;
  double w = base.w;
  if (name == "lambda_b") {
    lb = v;
  } else if (name == "lambda_d") {
    ld = v;
  } else if (name == "r") {
    r = v;
  } else if (name == "w") {
    w = v;
  } else {
    throw std::invalid_argument("unknown sweep parameter: " + name);
  }
  return validate_params(lb, ld, r, w);
}

void classify(SweepReport& rep, double tol) {
  std::vector<double> vals;
  std::vector<double> grid;
  for (const auto& pt : rep.points) {
    if (pt.ok) {
      vals.push_back(pt.metric);
      grid.push_back(pt.value);
    }
  }
  bool any_inc = false;
  bool any_dec = false;
  int first_inc = -1;
  int last_dec = -1;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
    const double d = vals[i + 1] - vals[i];
    if (d > tol) {
      any_inc = true;
      if (first_inc < 0) first_inc = static_cast<int>(i);
    }
    if (d < -tol) {
      any_dec = true;
      last_dec = static_cast<int>(i);
    }
  }
  if (!any_inc && !any_dec) {
    rep.zero_slope = true;  // constant series; direction label carries no information
    rep.verdict = Verdict::monotone_increasing;
    return;
  }
  if (!any_dec) {
    rep.verdict = Verdict::monotone_increasing;
    return;
  }
  if (!any_inc) {
    rep.verdict = Verdict::monotone_decreasing;
    return;
  }
  if (first_inc > last_dec) {
    rep.verdict = Verdict::decreases_then_increases;
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
      if (vals[i] < vals[argmin]) argmin = i;
    }
    rep.turning_point = grid[argmin];
    return;
  }
  rep.verdict = Verdict::non_monotone_other;
}

}  // namespace

namespace {

bool known_metric(const std::string& name) {
  static const char* names[] = {"q_bar",  "mass_good", "x_bar",      "pop",
                                "t_bar",  "t_bar_newborn", "var_x",  "cf",
                                "t_good", "t_bad",     "x_bar_good", "x_bar_bad"};
  for (const char* n : names) {
    if (name == n) return true;
  }
  return false;
}

bool known_param(const std::string& name) {
  return name == "lambda_b" || name == "lambda_d" || name == "r" || name == "w";
}

}  // namespace

SweepReport sweep(const SweepSpec& spec, double tol, int jobs) {
  if (spec.grid.size() < 3) throw std::invalid_argument("sweep: grid needs at least 3 points");
  for (std::size_t i = 0; i + 1 < spec.grid.size(); ++i) {
    if (!(spec.grid[i] < spec.grid[i + 1])) {
      throw std::invalid_argument("sweep: grid must be strictly increasing");
    }
  }
  if (!known_param(spec.param)) {
    throw std::invalid_argument("unknown sweep parameter: " + spec.param);
  }
  if (!known_metric(spec.metric)) {
    throw std::invalid_argument("unknown metric: " + spec.metric);
  }
  SweepReport rep;
  rep.spec = spec;
  rep.points.resize(spec.grid.size());
  const auto eval_point = [&rep, &spec](std::size_t i) {
    SweepPoint pt;
    pt.value = spec.grid[i];
    try {
      pt.metric = evaluate_metric(with_param(spec.base, spec.param, spec.grid[i]), spec.metric);
      pt.ok = true;
    } catch (const std::exception& e) {
      pt.ok = false;
      pt.error = e.what();
    }
    rep.points[i] = pt;
  };
  if (jobs <= 1 || spec.grid.size() < 8) {
    for (std::size_t i = 0; i < spec.grid.size(); ++i) eval_point(i);
  } else {
    std::vector<std::future<void>> futs;
    const std::size_t chunk = (spec.grid.size() + jobs - 1) / jobs;
    for (std::size_t start = 0; start < spec.grid.size(); start += chunk) {
      const std::size_t stop = std::min(start + chunk, spec.grid.size());
      futs.push_back(std::async(std::launch::async, [start, stop, &eval_point] {
        for (std::size_t i = start; i < stop; ++i) eval_point(i);
      }));
    }
    for (auto& f : futs) f.get();
  }
  classify(rep, tol);
  return rep;
}

std::vector<double> default_w_grid() {
  std::vector<double> g;
  for (int i = 0; i < 20; ++i) g.push_back(i * 0.05);
  g.push_back(1.0);
  return g;
}

std::vector<double> default_log_grid() { return {0.25, 0.5, 1.0, 2.0, 4.0}; }

namespace {

constexpr double kMonotoneTol = 1e-10;

std::string points_brief(const SweepReport& rep) {
  std::ostringstream os;
  os << rep.points.size() << " points, " << to_string(rep.verdict);
  if (rep.zero_slope) os << " (zero slope)";
  return os.str();
}

bool non_increasing(const SweepReport& rep) {
  return rep.zero_slope || rep.verdict == Verdict::monotone_decreasing;
}

bool non_decreasing(const SweepReport& rep) {
  return rep.zero_slope || rep.verdict == Verdict::monotone_increasing;
}

SweepReport run_sweep(const SocietyParams& base, const std::string& param,
                      std::vector<double> grid, const std::string& metric,
                      const std::string& tag, const std::string& guard = "") {
  SweepSpec spec;
  spec.base = base;
  spec.param = param;
  spec.grid = std::move(grid);
  spec.metric = metric;
  spec.guard_note = guard;
  SweepReport rep = sweep(spec, kMonotoneTol);
  rep.theorem_tag = tag;
  return rep;
}

}  // namespace

std::vector<CheckResult> check_lemma2(const SocietyParams& base) {
  std::vector<CheckResult> out;
  const struct {
    const char* name;
    const char* param;
    std::vector<double> grid;
  } parts[] = {
      {"lemma2a (vs w)", "w", default_w_grid()},
      {"lemma2b (vs lambda_d)", "lambda_d", default_log_grid()},
      {"lemma2c (vs r)", "r", default_log_grid()},
  };
  for (const auto& part : parts) {
    const SweepReport rq = run_sweep(base, part.param, part.grid, "q_bar", part.name);
    const SweepReport rx = run_sweep(base, part.param, part.grid, "x_bar", part.name);
    CheckResult res;
    res.name = part.name;
    res.pass = non_increasing(rq) && non_increasing(rx);
    res.detail = "q_bar: " + points_brief(rq) + "; x_bar: " + points_brief(rx);
    out.push_back(std::move(res));
  }
  return out;
}

std::vector<CheckResult> check_theorem2(const SocietyParams& base) {
  if (base.w >= 0.5) {
    throw guard_violation("theorem2d requires w < 1/2; got w = " + num17(base.w));
  }
  std::vector<CheckResult> out;
  const auto push = [&out](const char* name, const SweepReport& rep, bool pass) {
    out.push_back({name, pass, points_brief(rep)});
  };
  const SweepReport ra = run_sweep(base, "lambda_b", default_log_grid(), "pop", "theorem2a");
  push("theorem2a pop vs lambda_b", ra, ra.verdict == Verdict::monotone_increasing && !ra.zero_slope);
  const SweepReport rb = run_sweep(base, "w", default_w_grid(), "pop", "theorem2b");
  push("theorem2b pop vs w", rb, rb.verdict == Verdict::monotone_increasing && !rb.zero_slope);
  const SweepReport rc = run_sweep(base, "r", default_log_grid(), "pop", "theorem2c");
  push("theorem2c pop vs r", rc, rc.verdict == Verdict::monotone_increasing && !rc.zero_slope);
  const SweepReport rd =
      run_sweep(base, "lambda_d", default_log_grid(), "pop", "theorem2d", "w < 1/2");
  push("theorem2d pop vs lambda_d (w < 1/2)", rd,
       rd.verdict == Verdict::monotone_decreasing && !rd.zero_slope);
  return out;
}

std::vector<CheckResult> check_theorem3(const SocietyParams& base, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw std::invalid_argument("theorem3: need 0 < eps < 1/2");
  }
  if (base.w >= 0.5 - eps) {
    throw guard_violation("theorem3c requires w < 1/2 - eps; got w = " + num17(base.w) +
                          " with eps = " + num17(eps));
  }
  std::vector<CheckResult> out;
  const auto push = [&out](const char* name, const SweepReport& rep, bool pass) {
    out.push_back({name, pass, points_brief(rep)});
  };
  const SweepReport ra = run_sweep(base, "lambda_b", default_log_grid(), "cf", "theorem3a");
  push("theorem3a cf vs lambda_b", ra, ra.verdict == Verdict::monotone_increasing && !ra.zero_slope);
  const SweepReport rb = run_sweep(base, "lambda_d", default_log_grid(), "cf", "theorem3b");
  push("theorem3b cf vs lambda_d", rb, rb.verdict == Verdict::monotone_decreasing && !rb.zero_slope);
  std::vector<double> r_grid;
  for (int i = 1; i <= 4; ++i) r_grid.push_back(0.25 * i * eps / base.lambda_d);
  const SweepReport rc =
      run_sweep(base, "r", r_grid, "cf", "theorem3c", "lambda_d*r <= eps, w < 1/2 - eps");
  push("theorem3c cf vs r (guarded)", rc,
       rc.verdict == Verdict::monotone_decreasing && !rc.zero_slope);
  const SweepReport rd = run_sweep(base, "w", default_w_grid(), "cf", "theorem3d");
  push("theorem3d cf vs w", rd, rd.verdict == Verdict::monotone_decreasing && !rd.zero_slope);
  return out;
}

std::vector<CheckResult> check_theorem5(const SocietyParams& base) {
  std::vector<CheckResult> out;
  const double var0 =
      evaluate_metric(validate_params(base.lambda_b, base.lambda_d, base.r, 0.0), "var_x");
  const double var1 =
      evaluate_metric(validate_params(base.lambda_b, base.lambda_d, base.r, 1.0), "var_x");
  {
    CheckResult res;
    res.name = "theorem5 var(w=0) > var(w=1) = 0";
    res.pass = var0 > kMonotoneTol && var1 == 0.0;
    res.detail = "var(w=0) = " + num(var0, 12) + ", var(w=1) = " + num(var1, 12);
    out.push_back(std::move(res));
  }
  // r -> infinity regime: sample it at lambda_d*r = 200 where the boundary is unreachable
  const SocietyParams big_r =
      validate_params(base.lambda_b, base.lambda_d, 200.0 / base.lambda_d, base.w);
  const SweepReport rw =
      run_sweep(big_r, "w", default_w_grid(), "var_x", "theorem5a", "r -> infinity");
  out.push_back({"theorem5a large-r var vs w",
                 rw.verdict == Verdict::monotone_decreasing && !rw.zero_slope,
                 points_brief(rw)});
  const std::vector<double> ld_grid = default_log_grid();
  const SocietyParams big_r2 =
      validate_params(base.lambda_b, base.lambda_d, 200.0 / ld_grid.front(), base.w);
  const SweepReport rl = run_sweep(big_r2, "lambda_d", ld_grid, "var_x", "theorem5b",
                                   "r -> infinity");
  out.push_back({"theorem5b large-r var vs lambda_d",
                 rl.verdict == Verdict::monotone_decreasing && !rl.zero_slope,
                 points_brief(rl)});
  return out;
}

namespace {

constexpr double sqrt2_minus_1 = 0.41421356237309515;

// Location where q_bar(base with `param` = x) crosses sqrt(2)-1; q_bar is strictly
// decreasing in both w and r, so plain bisection applies.
std::optional<double> find_q_crossing(const SocietyParams& base, const std::string& param,
                                      double lo, double hi) {
  const auto q_at = [&](double x) {
    return solve_steady_state(with_param(base, param, x)).q_bar;
  };
  double f_lo = q_at(lo) - sqrt2_minus_1;
  double f_hi = q_at(hi) - sqrt2_minus_1;
  if (f_lo < 0.0 || f_hi > 0.0) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (q_at(mid) - sqrt2_minus_1 > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Theorem4Report classify_theorem4(const SocietyParams& base, const std::string& param,
                                 const std::vector<double>& grid, double cross_lo,
                                 double cross_hi) {
  Theorem4Report rep;
  rep.theta = base.lambda_d * base.r;
  rep.above_threshold = rep.theta > theta_star;
  rep.boundary_case = std::abs(rep.theta - theta_star) <= 1e-12;

  SweepReport sw = run_sweep(base, param, grid, "t_bar", "theorem4");
  rep.verdict = sw.verdict;
  std::ostringstream detail;
  detail << "t_bar vs " << param << ": " << points_brief(sw) << "; lambda_d*r = "
         << num(rep.theta, 12);

  // The non-monotone regime turns exactly where q_bar crosses sqrt(2)-1.
  const std::optional<double> star = find_q_crossing(base, param, cross_lo, cross_hi);
  if (star) {
    rep.turning_point = *star;
    rep.q_at_turning = solve_steady_state(with_param(base, param, *star)).q_bar;
  }

  if (rep.above_threshold || rep.boundary_case) {
    rep.pass = non_decreasing(sw) && !sw.zero_slope;
    if (rep.boundary_case) detail << "; boundary case lambda_d*r = theta*";
  } else {
    bool ok = sw.verdict == Verdict::decreases_then_increases && star.has_value();
    if (ok) {
      ok = std::abs(*rep.q_at_turning - sqrt2_minus_1) <= 1e-6;
      // grid argmin must sit next to the located turning point
      if (ok && sw.turning_point) {
        double step = grid[1] - grid[0];
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
          step = std::max(step, grid[i + 1] - grid[i]);
        }
        ok = std::abs(*sw.turning_point - *star) <= step + 1e-12;
      }
      // and t_bar must rise on both sides of it
      if (ok) {
        const double h = 0.01 * (cross_hi - cross_lo);
        const double t_star = evaluate_metric(with_param(base, param, *star), "t_bar");
        const double t_left =
            evaluate_metric(with_param(base, param, std::max(cross_lo, *star - h)), "t_bar");
        const double t_right =
            evaluate_metric(with_param(base, param, std::min(cross_hi, *star + h)), "t_bar");
        ok = t_left >= t_star && t_right >= t_star;
      }
      if (ok) {
        detail << "; turning " << param << "* = " << num(*star, 12) << " with q_bar = "
               << num(*rep.q_at_turning, 12);
      }
    }
    rep.pass = ok;
  }
  rep.detail = detail.str();
  return rep;
}

}  // namespace

Theorem4Report check_theorem4(const SocietyParams& base) {
  return classify_theorem4(base, "w", default_w_grid(), 0.0, 1.0);
}

Theorem4Report check_theorem4_vs_r(const SocietyParams& base) {
  // A turning point r* = theta*(1 - sqrt(2) w)/lambda_d exists only for w < 1/sqrt(2);
  // above that q_bar stays below sqrt(2)-1 and lifetime rises with r throughout.
  if (base.w >= 1.0 / std::sqrt(2.0)) {
    Theorem4Report rep;
    SweepReport sw = run_sweep(base, "r", default_log_grid(), "t_bar", "theorem4c");
    rep.theta = base.lambda_d * base.r;
    rep.above_threshold = true;
    rep.verdict = sw.verdict;
    rep.pass = non_decreasing(sw);
    rep.detail = "t_bar vs r (w >= 1/sqrt(2)): " + points_brief(sw);
    return rep;
  }
  const double r_star = theta_star * (1.0 - std::sqrt(2.0) * base.w) / base.lambda_d;
  std::vector<double> grid;
  for (int i = 0; i < 13; ++i) grid.push_back(r_star * 0.25 * std::pow(16.0, i / 12.0));
  SocietyParams at_low = base;  // regime is judged from the swept range, not base.r
  at_low.r = grid.front();
  Theorem4Report rep =
      classify_theorem4(at_low, "r", grid, grid.front(), grid.back());
  rep.theta = base.lambda_d * grid.front();
  rep.above_threshold = rep.theta > theta_star;
  return rep;
}

int check_uniqueness(const SocietyParams& p, double grid_step) {
  if (p.w == 1.0) throw degenerate_error("check_uniqueness: w = 1 has no fixed-point scan");
  if (!(grid_step > 0.0)) throw std::invalid_argument("check_uniqueness: grid_step must be > 0");
  // g(z) < 1 everywhere, so no crossing exists at z >= 1; capping the scan keeps
  // the w -> 0 domain finite without losing roots.
  double z_hi = 1.5;
  if (p.w > 0.0) z_hi = std::min(z_hi, (1.0 - p.w) / p.w - grid_step);
  int changes = 0;
  int prev_sign = 0;
  for (double z = -1.0 + grid_step; z <= z_hi; z += grid_step) {
    const double f = fixed_point_residual(p, z);
    const int sign = f > 0.0 ? 1 : -1;
    if (prev_sign != 0 && sign != prev_sign) ++changes;
    prev_sign = sign;
  }
  return changes;
}

SuiteReport run_theorem_suite(const SocietyParams& base, double eps, int /*jobs*/) {
  SuiteReport suite;
  const auto add = [&suite](std::vector<CheckResult> results) {
    for (auto& r : results) suite.checks.push_back(std::move(r));
  };
  add(check_lemma2(base));
  add(check_theorem2(base));
  add(check_theorem3(base, eps));

  const auto add_t4 = [&suite](const std::string& name, const Theorem4Report& rep) {
    suite.checks.push_back({name, rep.pass, rep.detail});
  };
  add_t4("theorem4b t_bar vs w (lambda_d*r = 1)",
         check_theorem4(validate_params(base.lambda_b, base.lambda_d, 1.0 / base.lambda_d,
                                        base.w)));
  add_t4("theorem4b t_bar vs w (lambda_d*r = 0.3)",
         check_theorem4(validate_params(base.lambda_b, base.lambda_d, 0.3 / base.lambda_d,
                                        base.w)));
  add_t4("theorem4c t_bar vs r", check_theorem4_vs_r(base));

  add(check_theorem5(base));

  {
    CheckResult res;
    res.name = "theorem1 uniqueness sign-scan";
    res.pass = true;
    std::ostringstream detail;
    for (const double w : {0.0, 0.3, 0.6, 0.9}) {
      const int n = check_uniqueness(validate_params(base.lambda_b, base.lambda_d, base.r, w));
      res.pass = res.pass && n == 1;
      detail << "w=" << num(w, 3) << ":" << n << " ";
    }
    res.detail = "sign changes " + detail.str();
    suite.checks.push_back(std::move(res));
  }

  suite.all_pass = true;
  for (const auto& c : suite.checks) suite.all_pass = suite.all_pass && c.pass;
  return suite;
}

}  // namespace coevo
