#pragma once

// Radially symmetric profiles on a uniform grid r_i = i h, i = 0..M, plus
// the sixth-order radial operators and quadrature shared by the ground-state
// and self-similar profile solvers.

#include <cstddef>
#include <vector>

#include "mzk/fields.hpp"

namespace mzk {

/// Tail shape used for ghost values beyond r_max: exp(-kappa r) r^(-power),
/// or K0(r)^kappa when `bessel` is set (the exact linear asymptote of
/// Laplacian(f) = f, and of its square).
struct TailModel {
  double kappa = 1.0;
  double power = 0.5;
  bool bessel = false;
  double ratio(double r_from, double r_to) const;

  static TailModel k0(double exponent = 1.0) { return {exponent, 0.0, true}; }
};

struct RadialProfile {
  std::vector<double> r;       // r[0] = 0, uniform spacing
  std::vector<double> values;
  std::vector<double> derivs;  // d/dr at the samples
  double r_max = 0.0;
  double decay_rate = 0.0;     // fitted exponential rate of |values| near r_max

  /// Builds a profile from samples; derivatives default to sixth-order
  /// finite differences (even parity at r = 0, `tail` ghosts past r_max).
  static RadialProfile from_samples(std::vector<double> r, std::vector<double> values,
                                    const TailModel& tail,
                                    std::vector<double> derivs = {});

  std::size_t size() const { return r.size(); }
  double h() const { return r.size() > 1 ? r[1] - r[0] : 0.0; }

  /// Cubic Hermite interpolation in r; exponential continuation past r_max.
  double value_at(double rr) const;
  double deriv_at(double rr) const;

  /// Ratio |f(r_max)| / |f(0)| (infinity for a zero center value).
  double tail_ratio() const;
};

/// Sixth-order discrete radial operators with even reflection at r = 0 and
/// tail-model ghosts past r_max.
namespace radial {

std::vector<double> d1(const std::vector<double>& f, double h, const TailModel& tail);
std::vector<double> d2(const std::vector<double>& f, double h, const TailModel& tail);
/// f'' + f'/r, with the r = 0 limit 2 f''(0).
std::vector<double> laplacian(const std::vector<double>& f, double h, const TailModel& tail);

/// Stencil weights of d2 and d1 (7 points, offsets -3..3).
extern const double kD1[7];
extern const double kD2[7];

/// 2 pi * int_0^inf g(r) r dr for even g sampled on the grid: trapezoid with
/// the Euler-Maclaurin end correction at r = 0 and an exponential tail
/// closure fitted on the last samples.
double integral_2d(const std::vector<double>& g, double h);

/// Log-linear fit of |g| on the last `fraction` of samples; returns the rate.
double fit_decay_rate(const std::vector<double>& r, const std::vector<double>& g,
                      double fraction = 0.1);

}  // namespace radial

/// Samples f(scale * |x - center|) on the grid (minimal-image distance).
RealField2D sample_radial(const RadialProfile& p, const Grid2D& g, double cx, double cy,
                          double scale = 1.0);

}  // namespace mzk
