#pragma once

#include <array>

namespace modalkin::quadrature {

/// Panels used over a full integration span when none is specified.
inline constexpr int kDefaultPanels = 20;

// 5-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 9.
inline constexpr std::array<double, 5> kNodes = {
    -0.906179845938663992797626878299, -0.538469310105683091036314420700, 0.0,
    0.538469310105683091036314420700, 0.906179845938663992797626878299};
inline constexpr std::array<double, 5> kWeights = {
    0.236926885056189087514264040720, 0.478628670499366468041291514836,
    0.568888888888888888888888888889, 0.478628670499366468041291514836,
    0.236926885056189087514264040720};

/// Composite 5-point Gauss-Legendre over [a, b] with `panels` equal panels.
/// `f(s)` may return any type closed under + and scalar *; summation order is
/// fixed so results are reproducible bit for bit.
template <class T, class F>
T integrate(double a, double b, int panels, F&& f, T zero) {
  const double h = (b - a) / panels;
  const double half = 0.5 * h;
  T total = zero;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    T panel = zero;
    for (std::size_t k = 0; k < kNodes.size(); ++k) {
      panel = panel + kWeights[k] * f(mid + half * kNodes[k]);
    }
    total = total + half * panel;
  }
  return total;
}

}  // namespace modalkin::quadrature
