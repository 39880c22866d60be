#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "fracobs/weights.hpp"

namespace fracobs {

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {0.129484966168869693270611432679082,
                                                        0.279705391489276667901467771423780,
                                                        0.381830050505118944950369775488975,
                                                        0.417959183673469387755102040816327};

template <typename Scalar, typename F>
void gk15(F& f, Scalar lo, Scalar hi, Scalar& result, Scalar& error) {
  const Scalar center = Scalar(0.5) * (lo + hi);
  const Scalar half = Scalar(0.5) * (hi - lo);
  const Scalar fc = f(center);
  Scalar kronrod = fc * Scalar(kKronrodWeights[7]);
  Scalar gauss = fc * Scalar(kGaussWeights[3]);
  for (int k = 0; k < 7; ++k) {
    const Scalar dx = half * Scalar(kKronrodNodes[k]);
    const Scalar sum = f(center - dx) + f(center + dx);
    kronrod += Scalar(kKronrodWeights[k]) * sum;
    if (k % 2 == 1) gauss += Scalar(kGaussWeights[k / 2]) * sum;
  }
  result = kronrod * half;
  error = std::abs((kronrod - gauss) * half);
}

template <typename Scalar, typename F>
Scalar adaptive_gk(F& f, Scalar lo, Scalar hi, Scalar abs_tol, int depth, bool& ok) {
  Scalar value{}, error{};
  gk15(f, lo, hi, value, error);
  if (error <= abs_tol || std::abs(hi - lo) <= std::numeric_limits<Scalar>::epsilon() * (std::abs(lo) + std::abs(hi))) {
    return value;
  }
  if (depth <= 0) {
    ok = false;
    return value;
  }
  const Scalar mid = Scalar(0.5) * (lo + hi);
  return adaptive_gk(f, lo, mid, abs_tol / Scalar(2), depth - 1, ok) +
         adaptive_gk(f, mid, hi, abs_tol / Scalar(2), depth - 1, ok);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod 7/15 quadrature of f over [lo, hi] (either orientation).
/// Throws ConvergenceError when the bisection depth is exhausted.
template <typename Scalar, typename F>
Scalar integrate_adaptive(F&& f, Scalar lo, Scalar hi, Scalar abs_tol, int max_depth = 48) {
  if (lo == hi) return Scalar(0);
  if (hi < lo) return -integrate_adaptive(f, hi, lo, abs_tol, max_depth);
  bool ok = true;
  const Scalar value = detail::adaptive_gk(f, lo, hi, abs_tol, max_depth, ok);
  if (!ok || !std::isfinite(value)) {
    throw ConvergenceError("adaptive quadrature did not reach tolerance");
  }
  return value;
}

}  // namespace fracobs
