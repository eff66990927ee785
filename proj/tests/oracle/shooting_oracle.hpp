#pragma once

// Brute-force reference for the radial ground state: fixed-step RK4 on
// Q'' + Q'/r - Q + Q^3 = 0 with bisection on Q(0) over [2, 3].
// Deliberately shares no code with the library solver.

#include <cmath>

namespace mzk::oracle {

struct ShootingResult {
  double q0 = 0.0;
  double mass = 0.0;  // 2*pi * int Q^2 r dr
};

namespace detail {

// State: (Q, Q', m) with m' = 2 pi r Q^2.
struct S {
  double q, p, m;
};

inline S rhs(double r, const S& s) {
  const double two_pi = 2.0 * std::acos(-1.0);
  return {s.p, -s.p / r + s.q - s.q * s.q * s.q, two_pi * r * s.q * s.q};
}

// +1: profile crossed zero (Q(0) too large), -1: profile turned upward
// (too small), 0: neither before r_end. Mass accumulated until Q < q_stop.
inline int shoot(double a, double h, double r_end, double q_stop, double* mass) {
  // Series start off the coordinate singularity.
  const double r0 = h;
  const double c2 = (a - a * a * a) / 4.0;
  const double c4 = (1.0 - 3.0 * a * a) * c2 / 16.0;
  S s{a + c2 * r0 * r0 + c4 * r0 * r0 * r0 * r0, 2.0 * c2 * r0 + 4.0 * c4 * r0 * r0 * r0, 0.0};
  // mass on [0, r0] from the series
  const double two_pi = 2.0 * std::acos(-1.0);
  s.m = two_pi * a * a * r0 * r0 / 2.0;
  double r = r0;
  bool mass_done = false;
  while (r < r_end) {
    const S k1 = rhs(r, s);
    const S a2{s.q + 0.5 * h * k1.q, s.p + 0.5 * h * k1.p, s.m + 0.5 * h * k1.m};
    const S k2 = rhs(r + 0.5 * h, a2);
    const S a3{s.q + 0.5 * h * k2.q, s.p + 0.5 * h * k2.p, s.m + 0.5 * h * k2.m};
    const S k3 = rhs(r + 0.5 * h, a3);
    const S a4{s.q + h * k3.q, s.p + h * k3.p, s.m + h * k3.m};
    const S k4 = rhs(r + h, a4);
    s.q += h / 6.0 * (k1.q + 2 * k2.q + 2 * k3.q + k4.q);
    s.p += h / 6.0 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
    const double m_new = s.m + h / 6.0 * (k1.m + 2 * k2.m + 2 * k3.m + k4.m);
    if (!mass_done) {
      s.m = m_new;
      if (s.q < q_stop) {
        mass_done = true;
        if (mass) *mass = s.m;
      }
    }
    r += h;
    if (s.q < 0.0) return +1;
    if (s.p > 0.0) return -1;
  }
  if (mass && !mass_done) *mass = s.m;
  return 0;
}

}  // namespace detail

inline ShootingResult shooting_oracle(double h = 2e-4, double r_end = 30.0) {
  double lo = 2.0, hi = 3.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const int branch = detail::shoot(mid, h, r_end, 0.0, nullptr);
    if (branch > 0) hi = mid; else lo = mid;
  }
  ShootingResult out;
  out.q0 = 0.5 * (lo + hi);
  detail::shoot(out.q0, h, r_end, 1e-8, &out.mass);
  return out;
}

}  // namespace mzk::oracle
