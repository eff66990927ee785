#include "mzk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mzk {
namespace {

struct Reduced {
  double log_c = 0.0;
  double p = 1.0;
  double ssr = 0.0;
  double slope = 0.0;  // d ssr / dT
};

// Exact linear solve for (log c, p) at fixed T. The envelope theorem makes
// the T-derivative of the reduced objective its partial derivative.
Reduced reduce(const std::vector<double>& t, const std::vector<double>& ly, double T,
               RateModel model) {
  const std::size_t m = t.size();
  std::vector<double> lx(m);
  for (std::size_t i = 0; i < m; ++i) lx[i] = std::log(T - t[i]);
  Reduced r;
  if (model == RateModel::fixed_exponent_1) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += ly[i] + lx[i];
    r.log_c = s / static_cast<double>(m);
    r.p = 1.0;
  } else {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(m);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    r.p = sxx > 0.0 ? -sxy / sxx : 0.0;
    r.log_c = my + r.p * mx;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double res = ly[i] - r.log_c + r.p * lx[i];
    r.ssr += res * res;
    r.slope += 2.0 * r.p * res / (T - t[i]);
  }
  return r;
}

std::string describe(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

RateFit fit_rate(const std::vector<double>& t_all, const std::vector<double>& y_all,
                 RateModel model, const FitOptions& opt) {
  if (t_all.size() != y_all.size()) throw ContractError("time and value series differ in length");
  if (!(opt.tail_fraction > 0.0 && opt.tail_fraction <= 1.0)) {
    throw DomainError("tail fraction must lie in (0, 1]");
  }
  const std::size_t n = t_all.size();
  const std::size_t need = std::max<std::size_t>(opt.min_samples, 3);
  if (n < need) {
    throw FitFailure("rate fit needs at least " + std::to_string(need) + " samples, got " +
                     std::to_string(n));
  }
  std::size_t m = static_cast<std::size_t>(std::ceil(opt.tail_fraction * static_cast<double>(n)));
  m = std::clamp(m, need, n);
  const std::vector<double> t(t_all.end() - static_cast<long>(m), t_all.end());
  const std::vector<double> y(y_all.end() - static_cast<long>(m), y_all.end());
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(y[i])) throw FitFailure("non-finite sample in series");
    if (!(y[i] > 0.0)) throw FitFailure("non-positive value at t = " + describe(t[i]));
    if (i > 0 && !(t[i] > t[i - 1])) throw FitFailure("sample times are not increasing");
  }
  if (!(y.back() > y.front())) {
    throw FitFailure("tail is not increasing: y goes from " + describe(y.front()) + " to " +
                     describe(y.back()));
  }
  std::vector<double> ly(m);
  for (std::size_t i = 0; i < m; ++i) ly[i] = std::log(y[i]);

  // Coarse scan of the gap T - t_last on a log scale, then bisection on the slope.
  const double t_last = t.back();
  const double span = t.back() - t.front();
  const int scan = 240;
  const double g_lo = span * 1e-12, g_hi = span * 1e6;
  int best = -1;
  double best_ssr = std::numeric_limits<double>::infinity();
  std::vector<double> gaps(scan + 1);
  for (int k = 0; k <= scan; ++k) {
    gaps[k] = g_lo * std::pow(g_hi / g_lo, static_cast<double>(k) / scan);
    const double ssr = reduce(t, ly, t_last + gaps[k], model).ssr;
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best = k;
    }
  }
  if (best == scan) {
    throw FitFailure("misfit keeps decreasing as T grows; no finite singular time (last t = " +
                     describe(t_last) + ")");
  }
  double a = t_last + gaps[std::max(best - 1, 0)];
  double b = t_last + gaps[std::min(best + 1, scan)];
  double T = t_last + gaps[best];
  const double sa = reduce(t, ly, a, model).slope, sb = reduce(t, ly, b, model).slope;
  if (sa < 0.0 && sb > 0.0) {
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (reduce(t, ly, mid, model).slope < 0.0 ? a : b) = mid;
    }
    T = 0.5 * (a + b);
  } else if (best == 0) {
    throw FitFailure("misfit minimum sits at the last sample time; the series is too steep");
  }
  const Reduced r = reduce(t, ly, T, model);
  if (!std::isfinite(r.ssr) || !std::isfinite(r.log_c) || !std::isfinite(r.p)) {
    throw FitFailure("rate fit diverged");
  }
  if (T - t_last > opt.max_extrapolation * span) {
    throw FitFailure("fitted singular time " + describe(T) + " lies far beyond the last sample " +
                     describe(t_last));
  }
  const double rms = std::sqrt(r.ssr / static_cast<double>(m));
  if (rms > opt.max_rms_log_residual) {
    throw FitFailure("rms log misfit " + describe(rms) + " is too large for a power-law rate");
  }
  RateFit f;
  f.c = std::exp(r.log_c);
  f.T_est = T;
  f.exponent = r.p;
  f.rms_log_residual = rms;
  f.samples_used = m;
  return f;
}

std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::grad_E: return "grad_E";
    case NormKind::n_norm: return "n_norm";
    case NormKind::full_norm: return "full_norm";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::super_rate: return "super-rate";
    case Verdict::fail: return "fail";
    case Verdict::not_blowing_up: return "not blowing up";
  }
  return "?";
}

std::string to_string(RateModel m) {
  return m == RateModel::fixed_exponent_1 ? "fixed_exponent_1" : "free_exponent";
}

NormKind parse_norm_kind(const std::string& s) {
  if (s == "grad_E") return NormKind::grad_E;
  if (s == "n_norm") return NormKind::n_norm;
  if (s == "full_norm") return NormKind::full_norm;
  throw ConfigError("unknown norm '" + s + "' (expected grad_E, n_norm or full_norm)");
}

RateModel parse_rate_model(const std::string& s) {
  if (s == "fixed_exponent_1") return RateModel::fixed_exponent_1;
  if (s == "free_exponent") return RateModel::free_exponent;
  throw ConfigError("unknown model '" + s + "' (expected fixed_exponent_1 or free_exponent)");
}

std::vector<double> norm_series(const std::vector<Diagnostics>& rows, NormKind which) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& d : rows) {
    switch (which) {
      case NormKind::grad_E: out.push_back(d.grad_E); break;
      case NormKind::n_norm: out.push_back(d.n_norm); break;
      case NormKind::full_norm:
        out.push_back(std::sqrt(d.mass + d.grad_E * d.grad_E + d.n_norm * d.n_norm +
                                d.v_norm * d.v_norm));
        break;
    }
  }
  return out;
}

LowerBoundVerdict check_lower_bound(const RateFit& fit, NormKind which,
                                    const std::optional<MassContext>& ctx, double tolerance) {
  LowerBoundVerdict v;
  v.which = which;
  v.exponent = fit.exponent;
  v.tolerance = tolerance;
  if (fit.exponent < 1.0 - tolerance) {
    v.verdict = Verdict::fail;
    v.message = "exponent " + describe(fit.exponent) + " below 1";
  } else if (fit.exponent > 1.0 + tolerance) {
    v.verdict = Verdict::super_rate;
    v.message = "exponent " + describe(fit.exponent) + " exceeds 1; bound holds with room";
  } else {
    v.verdict = Verdict::pass;
    v.message = "exponent " + describe(fit.exponent) + " matches 1/(T-t)";
  }
  if (ctx && which != NormKind::full_norm) {
    const double excess = ctx->mass - ctx->q_mass / (1.0 + ctx->eta);
    if (excess > 0.0) v.normalized_constant = fit.c * std::sqrt(excess);
  }
  return v;
}

RateAssessment assess_rate(const std::vector<double>& t, const std::vector<double>& y,
                           RateModel model, NormKind which, const std::optional<MassContext>& ctx,
                           const FitOptions& opt, double tolerance) {
  RateAssessment a;
  try {
    a.fit = fit_rate(t, y, model, opt);
  } catch (const FitFailure& e) {
    a.verdict.verdict = Verdict::not_blowing_up;
    a.verdict.which = which;
    a.verdict.tolerance = tolerance;
    a.verdict.message = e.what();
    return a;
  }
  a.verdict = check_lower_bound(*a.fit, which, ctx, tolerance);
  return a;
}

Classification classify_initial_data(const SystemState& s, double eta, double q_mass,
                                     bool radial) {
  Classification c;
  const ConservedQuantities q = hamiltonian(s, eta);
  c.mass = q.mass;
  c.window = threshold_window(eta, q_mass);
  c.in_window = c.window.contains(c.mass);
  c.hamiltonian = q.hamiltonian;
  c.negative_energy = q.hamiltonian < 0.0;
  c.radial = radial;
  if (radial && c.negative_energy) {
    c.note = "radial with H < 0: the solution blows up, in finite time or at infinity";
  } else if (c.negative_energy) {
    c.note = "H < 0 but not declared radial: no blow-up alternative applies";
  } else if (c.mass < c.window.lower) {
    c.note = "mass below the lower threshold";
  } else {
    c.note = "H >= 0: no blow-up criterion applies";
  }
  return c;
}

RatioSeries sobolev_ratio_monitor(const std::vector<Diagnostics>& rows) {
  RatioSeries out;
  for (const auto& d : rows) {
    if (!(d.n_norm > 0.0)) {
      ++out.skipped;
      continue;
    }
    out.samples.emplace_back(d.t, d.grad_E / d.n_norm);
  }
  if (out.samples.empty()) return out;
  const double t0 = out.samples.front().first, t1 = out.samples.back().first;
  const double cut = t0 + 0.75 * (t1 - t0);
  for (const auto& [t, r] : out.samples) {
    if (t < cut) continue;
    out.tail_min = out.tail_min ? std::min(*out.tail_min, r) : r;
    out.tail_max = out.tail_max ? std::max(*out.tail_max, r) : r;
  }
  return out;
}

}  // namespace mzk
