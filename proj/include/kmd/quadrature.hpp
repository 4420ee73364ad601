#pragma once

#include <cmath>
#include <functional>

namespace kmd {

namespace detail {

template <typename F>
double simpson(const F& f, double a, double fa, double b, double fb,
               double c, double fc) {
  return (fa + 4.0 * fc + fb) * (b - a) / 6.0;
}

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa,
                            double fb, double fm, double whole, double tol,
                            int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (fa + 4.0 * flm + fm) * (m - a) / 6.0;
  double right = (fm + 4.0 * frm + fb) * (b - m) / 6.0;
  double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol)
    return left + right + err / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol,
                              depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol,
                              depth - 1);
}

}  // namespace detail

// Adaptive Simpson with Richardson correction. The interval is first cut
// into `segments` panels so that symmetric integrands cannot fool the
// refinement test.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                        int max_depth = 48, int segments = 8) {
  if (!(b > a)) return 0.0;
  double total = 0.0;
  double h = (b - a) / segments;
  for (int s = 0; s < segments; ++s) {
    double lo = a + s * h, hi = a + (s + 1) * h;
    double mid = 0.5 * (lo + hi);
    double flo = f(lo), fhi = f(hi), fmid = f(mid);
    double whole = (flo + 4.0 * fmid + fhi) * (hi - lo) / 6.0;
    total += detail::adaptive_simpson_rec(f, lo, hi, flo, fhi, fmid, whole,
                                          tol / segments, max_depth);
  }
  return total;
}

}  // namespace kmd
