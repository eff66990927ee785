#include "mzk/radial.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mzk/error.hpp"
#include "mzk/spectral.hpp"

namespace mzk {

double TailModel::ratio(double r_from, double r_to) const {
  if (bessel) {
    return std::pow(std::cyl_bessel_k(0.0, r_to) / std::cyl_bessel_k(0.0, r_from), kappa);
  }
  return std::exp(-kappa * (r_to - r_from)) * std::pow(r_from / r_to, power);
}

namespace radial {

const double kD1[7] = {-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
const double kD2[7] = {1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0,
                       3.0 / 2.0,  -3.0 / 20.0, 1.0 / 90.0};

namespace {

double at(const std::vector<double>& f, long i, double h, const TailModel& tail) {
  const long m = static_cast<long>(f.size()) - 1;
  if (i < 0) return f[static_cast<std::size_t>(-i)];
  if (i <= m) return f[static_cast<std::size_t>(i)];
  return f.back() * tail.ratio(static_cast<double>(m) * h, static_cast<double>(i) * h);
}

std::vector<double> apply(const std::vector<double>& f, const double (&w)[7], double scale,
                          double h, const TailModel& tail) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double s = 0.0;
    for (int k = -3; k <= 3; ++k) s += w[k + 3] * at(f, static_cast<long>(i) + k, h, tail);
    out[i] = s * scale;
  }
  return out;
}

}  // namespace

std::vector<double> d1(const std::vector<double>& f, double h, const TailModel& tail) {
  auto out = apply(f, kD1, 1.0 / h, h, tail);
  if (!out.empty()) out[0] = 0.0;
  return out;
}

std::vector<double> d2(const std::vector<double>& f, double h, const TailModel& tail) {
  return apply(f, kD2, 1.0 / (h * h), h, tail);
}

std::vector<double> laplacian(const std::vector<double>& f, double h, const TailModel& tail) {
  const auto a = d2(f, h, tail);
  const auto b = d1(f, h, tail);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    out[i] = i == 0 ? 2.0 * a[0] : a[i] + b[i] / (static_cast<double>(i) * h);
  }
  return out;
}

double fit_decay_rate(const std::vector<double>& r, const std::vector<double>& g,
                      double fraction) {
  const std::size_t n = r.size();
  const std::size_t count = std::max<std::size_t>(4, static_cast<std::size_t>(fraction * n));
  if (n < count) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t used = 0;
  for (std::size_t i = n - count; i < n; ++i) {
    const double a = std::abs(g[i]);
    if (!(a > 0.0) || !std::isfinite(a)) return 0.0;
    const double y = std::log(a);
    sx += r[i];
    sy += y;
    sxx += r[i] * r[i];
    sxy += r[i] * y;
    ++used;
  }
  const double u = static_cast<double>(used);
  const double slope = (u * sxy - sx * sy) / (u * sxx - sx * sx);
  return -slope;
}

double integral_2d(const std::vector<double>& g, double h) {
  const std::size_t n = g.size();
  if (n < 8) throw DomainError("radial quadrature needs at least 8 samples");
  double trap = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) trap += g[i] * static_cast<double>(i) * h;
  const double R = static_cast<double>(n - 1) * h;
  trap += 0.5 * g.back() * R;
  trap *= h;
  // Euler-Maclaurin correction at r = 0 for G(r) = r g(r):
  // G'(0) = g(0), G'''(0) = 3 g''(0).
  double g2 = 0.0;
  for (int k = -3; k <= 3; ++k) g2 += kD2[k + 3] * g[static_cast<std::size_t>(std::abs(k))];
  g2 /= h * h;
  double integral = trap + h * h / 12.0 * g[0] - std::pow(h, 4) / 720.0 * 3.0 * g2;
  // Exponential tail closure.
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<double>(i) * h;
  const double kappa = fit_decay_rate(r, g);
  if (kappa > 0.0) integral += g.back() * (R / kappa + 1.0 / (kappa * kappa));
  return 2.0 * std::numbers::pi * integral;
}

}  // namespace radial

RadialProfile RadialProfile::from_samples(std::vector<double> r, std::vector<double> values,
                                          const TailModel& tail, std::vector<double> derivs) {
  if (r.size() != values.size() || r.size() < 8) {
    throw ContractError("radial profile needs matching r/value arrays with >= 8 samples");
  }
  if (r[0] != 0.0) throw ContractError("radial profile must start at r = 0");
  const double h = r[1] - r[0];
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(std::abs(r[i] - r[i - 1] - h) <= 1e-9 * h)) {
      throw ContractError("radial profile samples must be uniformly spaced");
    }
  }
  require_finite(values, "radial profile");
  RadialProfile p;
  if (derivs.empty()) derivs = radial::d1(values, h, tail);
  if (derivs.size() != values.size()) throw ContractError("derivative array size mismatch");
  p.r = std::move(r);
  p.values = std::move(values);
  p.derivs = std::move(derivs);
  p.r_max = p.r.back();
  p.decay_rate = radial::fit_decay_rate(p.r, p.values);
  return p;
}

double RadialProfile::value_at(double rr) const {
  rr = std::abs(rr);
  if (rr >= r_max) {
    return decay_rate > 0.0 ? values.back() * std::exp(-decay_rate * (rr - r_max)) : 0.0;
  }
  const double hh = h();
  const std::size_t i = std::min(static_cast<std::size_t>(rr / hh), size() - 2);
  const double s = (rr - r[i]) / hh;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * values[i] + h10 * hh * derivs[i] + h01 * values[i + 1] + h11 * hh * derivs[i + 1];
}

double RadialProfile::deriv_at(double rr) const {
  const double sign = rr < 0.0 ? -1.0 : 1.0;
  rr = std::abs(rr);
  if (rr >= r_max) {
    return decay_rate > 0.0 ? -decay_rate * values.back() * std::exp(-decay_rate * (rr - r_max))
                            : 0.0;
  }
  const double hh = h();
  const std::size_t i = std::min(static_cast<std::size_t>(rr / hh), size() - 2);
  const double s = (rr - r[i]) / hh;
  const double s2 = s * s;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  return sign * ((d00 * values[i] + d01 * values[i + 1]) / hh + d10 * derivs[i] +
                 d11 * derivs[i + 1]);
}

double RadialProfile::tail_ratio() const {
  if (values.empty() || values[0] == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(values.back()) / std::abs(values[0]);
}

RealField2D sample_radial(const RadialProfile& p, const Grid2D& g, double cx, double cy,
                          double scale) {
  RealField2D out(g);
  parallel_for(g.nx, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double dx = wrapped_offset(g.x(i), cx, g.L);
      for (std::size_t j = 0; j < g.ny; ++j) {
        const double dy = wrapped_offset(g.y(j), cy, g.L);
        out(i, j) = p.value_at(scale * std::hypot(dx, dy));
      }
    }
  });
  return out;
}

}  // namespace mzk
