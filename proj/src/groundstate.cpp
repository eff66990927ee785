#include "mzk/groundstate.hpp"

#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "mzk/error.hpp"
#include "mzk/spectral.hpp"

namespace mzk {

namespace {

namespace ode = boost::numeric::odeint;

using State = std::array<double, 2>;  // (Q, Q')

void rhs(const State& s, State& ds, double r) {
  ds[0] = s[1];
  ds[1] = -s[1] / r + s[0] - s[0] * s[0] * s[0];
}

enum class Branch { too_small, too_large };

auto make_stepper(double tol) {
  return ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<State>());
}

// Taylor start away from the r = 0 singularity.
State series_start(double a, double r0) {
  const double c2 = (a - a * a * a) / 4.0;
  const double c4 = (1.0 - 3.0 * a * a) * c2 / 16.0;
  return {a + c2 * r0 * r0 + c4 * std::pow(r0, 4), 2.0 * c2 * r0 + 4.0 * c4 * std::pow(r0, 3)};
}

struct Outward {
  bool crossed = false;
  bool turned = false;
  State at_match{};
};

// Integrates outward through the sample radii r_1 .. r_match, stopping early
// on a zero crossing or an upturn. The final profile is assembled through the
// same call sequence, so the classification and the samples agree bit for bit.
Outward shoot_out(double a, double r0, double h, std::size_t i_match, double tol,
                  std::vector<double>* q = nullptr, std::vector<double>* dq = nullptr) {
  Outward out;
  State s = series_start(a, r0);
  auto stepper = make_stepper(tol);
  double r = r0;
  for (std::size_t i = 1; i <= i_match; ++i) {
    const double r_next = static_cast<double>(i) * h;
    ode::integrate_adaptive(stepper, rhs, s, r, r_next, 0.5 * h);
    r = r_next;
    if (q) {
      (*q)[i] = s[0];
      (*dq)[i] = s[1];
    }
    if (s[0] < 0.0) {
      out.crossed = true;
      return out;
    }
    if (s[1] > 0.0) {
      out.turned = true;
      return out;
    }
  }
  out.at_match = s;
  return out;
}

// Integrates the decaying branch inward from its K0 asymptote at r_max
// through the sample radii down to r_match.
State shoot_in(double amplitude, double h, std::size_t i_max, std::size_t i_match, double tol,
               std::vector<double>* q = nullptr, std::vector<double>* dq = nullptr) {
  const double r_max = static_cast<double>(i_max) * h;
  State s{amplitude * std::cyl_bessel_k(0.0, r_max), -amplitude * std::cyl_bessel_k(1.0, r_max)};
  if (q) {
    (*q)[i_max] = s[0];
    (*dq)[i_max] = s[1];
  }
  auto stepper = make_stepper(tol);
  double r = r_max;
  for (std::size_t i = i_max; i-- > i_match;) {
    const double r_next = static_cast<double>(i) * h;
    ode::integrate_adaptive(stepper, rhs, s, r, r_next, -0.5 * h);
    r = r_next;
    if (q && i > i_match) {
      (*q)[i] = s[0];
      (*dq)[i] = s[1];
    }
  }
  return s;
}

Branch classify(double a, double r0, double h, std::size_t i_match, const State& inward,
                double tol) {
  const Outward o = shoot_out(a, r0, h, i_match, tol);
  if (o.crossed) return Branch::too_large;
  if (o.turned) return Branch::too_small;
  const double ld_out = o.at_match[1] / o.at_match[0];
  const double ld_in = inward[1] / inward[0];
  return ld_out < ld_in ? Branch::too_large : Branch::too_small;
}

double max_residual(const std::vector<double>& q, double h, const TailModel& tail) {
  const auto lap = radial::laplacian(q, h, tail);
  double res = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    res = std::max(res, std::abs(lap[i] - q[i] + q[i] * q[i] * q[i]));
  }
  return res;
}

}  // namespace

GroundState solve_Q(double r_max, int n_points, double tol) {
  if (!(r_max >= 15.0)) throw DomainError("solve_Q requires r_max >= 15");
  if (n_points < 2000) throw DomainError("solve_Q requires n_points >= 2000");
  if (!(tol > 0.0 && tol <= 1e-10)) throw DomainError("solve_Q requires 0 < tol <= 1e-10");

  const double ode_tol = std::max(1e-15, std::min(tol, 1e-12) * 1e-2);
  const std::size_t M = static_cast<std::size_t>(n_points) - 1;
  const double h = r_max / static_cast<double>(M);
  const double r0 = std::min(1e-3, 0.5 * h);
  const std::size_t i_match = static_cast<std::size_t>(std::min(8.0, 0.5 * r_max) / h);

  double amplitude = 3.5;
  double lo = 1.0, hi = 4.0, a = 0.0;
  int steps = 0;
  for (int pass = 0; pass < 4; ++pass) {
    const State inward = shoot_in(amplitude, h, M, i_match, ode_tol);
    lo = 1.0;
    hi = 4.0;
    const Branch b_lo = classify(lo, r0, h, i_match, inward, ode_tol);
    const Branch b_hi = classify(hi, r0, h, i_match, inward, ode_tol);
    if (b_lo != Branch::too_small || b_hi != Branch::too_large) {
      std::ostringstream msg;
      msg << "shooting bracket [" << lo << ", " << hi << "] does not straddle Q(0): "
          << "lower end " << (b_lo == Branch::too_small ? "decays too slowly" : "crosses zero")
          << ", upper end " << (b_hi == Branch::too_small ? "decays too slowly" : "crosses zero");
      throw SolverFailure(msg.str());
    }
    steps = 0;
    while (true) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (classify(mid, r0, h, i_match, inward, ode_tol) == Branch::too_large ? hi : lo) = mid;
      ++steps;
    }
    a = 0.5 * (lo + hi);
    const Outward o = shoot_out(a, r0, h, i_match, ode_tol);
    if (o.crossed || o.turned) throw SolverFailure("converged Q(0) left the decaying branch");
    const double updated = amplitude * o.at_match[0] / inward[0];
    const bool settled = std::abs(updated / amplitude - 1.0) < 1e-13;
    amplitude = updated;
    if (settled) break;
  }

  // Assemble samples: outward branch up to r_match, inward branch beyond.
  std::vector<double> r(M + 1), q(M + 1), dq(M + 1);
  for (std::size_t i = 0; i <= M; ++i) r[i] = static_cast<double>(i) * h;
  q[0] = a;
  dq[0] = 0.0;
  shoot_out(a, r0, h, i_match, ode_tol, &q, &dq);
  shoot_in(amplitude, h, M, i_match, ode_tol, &q, &dq);

  for (std::size_t i = 0; i < M; ++i) {
    if (!(q[i] > 0.0)) throw SolverFailure("ground state is not positive on [0, r_max)");
    if (i > 0 && !(dq[i] < 0.0)) throw SolverFailure("ground state is not strictly decreasing");
  }

  const TailModel tail = TailModel::k0();
  GroundState gs;
  gs.profile = RadialProfile::from_samples(r, q, tail, dq);
  gs.q0 = a;
  gs.tail_amplitude = amplitude;
  gs.match_radius = static_cast<double>(i_match) * h;
  gs.bisection_steps = steps;

  // Residual on a verification grid no coarser than kVerifyStep, so the
  // stencil truncation error stays below the threshold.
  constexpr double kVerifyStep = 0.01;
  double res = 0.0;
  if (h <= kVerifyStep) {
    res = max_residual(q, h, tail);
  } else {
    const std::size_t Mv = static_cast<std::size_t>(std::ceil(r_max / kVerifyStep));
    const double hv = r_max / static_cast<double>(Mv);
    const std::size_t iv = static_cast<std::size_t>(gs.match_radius / hv);
    const double r0v = std::min(r0, 0.5 * hv);
    std::vector<double> qv(Mv + 1), dqv(Mv + 1);
    qv[0] = a;
    const Outward ov = shoot_out(a, r0v, hv, iv, ode_tol, &qv, &dqv);
    const double av = amplitude * ov.at_match[0] / shoot_in(amplitude, hv, Mv, iv, ode_tol)[0];
    shoot_in(av, hv, Mv, iv, ode_tol, &qv, &dqv);
    res = max_residual(qv, hv, tail);
  }
  gs.ode_residual = res;
  if (!(res < 1e-8)) {
    std::ostringstream msg;
    msg << "ground-state ODE residual " << res << " exceeds 1e-8";
    throw SolverFailure(msg.str());
  }

  std::vector<double> q2(M + 1), q4(M + 1), g2(M + 1);
  for (std::size_t i = 0; i <= M; ++i) {
    q2[i] = q[i] * q[i];
    q4[i] = q2[i] * q2[i];
    g2[i] = dq[i] * dq[i];
  }
  gs.mass = radial::integral_2d(q2, h);
  gs.quartic = radial::integral_2d(q4, h);
  gs.grad_norm_sq = radial::integral_2d(g2, h);
  return gs;
}

PohozaevDefects pohozaev_check(const RadialProfile& q) {
  PohozaevDefects d;
  bool zero = true;
  for (double v : q.values) zero = zero && v == 0.0;
  if (zero) {
    d.degenerate = true;
    return d;
  }
  const double h = q.h();
  std::vector<double> q2(q.size()), q4(q.size()), g2(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    q2[i] = q.values[i] * q.values[i];
    q4[i] = q2[i] * q2[i];
    g2[i] = q.derivs[i] * q.derivs[i];
  }
  const double m = radial::integral_2d(q2, h);
  const double p4 = radial::integral_2d(q4, h);
  const double gr = radial::integral_2d(g2, h);
  d.mass_identity = std::abs(m - 0.5 * p4) / m;
  d.gradient_identity = gr > 0.0 ? std::abs(gr - 0.5 * p4) / gr : 0.0;
  return d;
}

GnResult gn_check(const ComplexField2D& u, double q_mass) {
  if (!(q_mass > 0.0)) throw DomainError("gn_check requires a positive ground-state mass");
  GnResult r;
  r.lhs = 0.5 * l4_norm_4(u);
  r.rhs = l2_norm_sq(u) / q_mass * gradient_norm_sq(u);
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-9);
  return r;
}

ThresholdWindow threshold_window(double eta, double q_mass) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive");
  if (!(q_mass > 0.0)) throw DomainError("ground-state mass must be positive");
  return ThresholdWindow{eta, q_mass / (1.0 + eta), q_mass / eta};
}

ComplexField2D random_localized_field(const Grid2D& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int K = 1 + static_cast<int>(unit(rng) * 6.0);
  const double sigma = g.L * (0.04 + 0.04 * unit(rng));
  const double cx = g.L * (0.45 + 0.1 * unit(rng)), cy = g.L * (0.45 + 0.1 * unit(rng));
  std::vector<cplx> modes(g.size(), cplx(0.0));
  for (int a = -K; a <= K; ++a) {
    for (int b = -K; b <= K; ++b) {
      const double w = std::exp(-0.5 * (a * a + b * b) / double(K * K));
      const std::size_t i = static_cast<std::size_t>((a + static_cast<long>(g.nx)) % static_cast<long>(g.nx));
      const std::size_t j = static_cast<std::size_t>((b + static_cast<long>(g.ny)) % static_cast<long>(g.ny));
      const double re = normal(rng), im = normal(rng);
      modes[i * g.ny + j] = w * cplx(re, im);
    }
  }
  std::vector<cplx> p = spectral::inverse(g, std::move(modes));
  ComplexField2D u(g);
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double dx = g.x(i) - cx;
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double dy = g.y(j) - cy;
      u(i, j) = p[i * g.ny + j] * static_cast<double>(g.size()) *
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  return u;
}

}  // namespace mzk
