#pragma once

// Test-side adaptive Simpson quadrature. Deliberately independent of the
// library's closed-form moment expressions so the two routes can check each
// other.

#include <cmath>
#include <functional>

namespace oracle {

using Fn = std::function<double(double)>;

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const Fn& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const Fn& f, double a, double b, double tol = 1e-13) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  return adapt(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 50);
}

}  // namespace oracle
