#pragma once

#include <cmath>
#include <cstdint>

namespace arff::detail {

// Branch-free sin/cos for moderate arguments (|x| < 2^20 * pi/2), written so
// that loops over arrays vectorize. Three-part Cody-Waite reduction to
// [-pi/4, pi/4] followed by the fdlibm kernel polynomials; absolute error is
// a few ulps of 1 across the supported range.
inline void sincos(double x, double& s, double& c) noexcept {
  constexpr double kTwoOverPi = 6.36619772367581382433e-01;
  constexpr double kPio2Hi = 1.57079632673412561417e+00;
  constexpr double kPio2Mid = 6.07710050630396597660e-11;
  constexpr double kPio2Lo = 2.02226624871116645580e-21;

  constexpr double kS1 = -1.66666666666666324348e-01;
  constexpr double kS2 = 8.33333333332248946124e-03;
  constexpr double kS3 = -1.98412698298579493134e-04;
  constexpr double kS4 = 2.75573137070700676789e-06;
  constexpr double kS5 = -2.50507602534068634195e-08;
  constexpr double kS6 = 1.58969099521155010221e-10;

  constexpr double kC1 = 4.16666666666666019037e-02;
  constexpr double kC2 = -1.38888888888741095749e-03;
  constexpr double kC3 = 2.48015872894767294178e-05;
  constexpr double kC4 = -2.75573143513906633035e-07;
  constexpr double kC5 = 2.08757232129817482790e-09;
  constexpr double kC6 = -1.13596475577881948265e-11;

  const double q = std::nearbyint(x * kTwoOverPi);
  double r = x - q * kPio2Hi;
  r -= q * kPio2Mid;
  r -= q * kPio2Lo;

  const double z = r * r;
  const double sin_r = r + r * z * (kS1 + z * (kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)))));
  const double cos_r = 1.0 - 0.5 * z + z * z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));

  const auto quadrant = static_cast<std::int64_t>(q) & 3;
  const bool swap = (quadrant & 1) != 0;
  const double s0 = swap ? cos_r : sin_r;
  const double c0 = swap ? sin_r : cos_r;
  s = (quadrant & 2) ? -s0 : s0;
  c = (quadrant == 1 || quadrant == 2) ? -c0 : c0;
}

}  // namespace arff::detail
