#pragma once

// Ground state Q of -Laplacian(V) + V = V^3 (radial, positive, decaying),
// the sharp Gagliardo-Nirenberg inequality it saturates, and the mass
// window it defines for the coupling eta.

#include <cstdint>

#include "mzk/fields.hpp"
#include "mzk/radial.hpp"

namespace mzk {

struct GroundState {
  RadialProfile profile;
  double q0 = 0.0;
  double mass = 0.0;           // ||Q||^2 = 2 pi int Q^2 r dr
  double grad_norm_sq = 0.0;   // ||grad Q||^2
  double quartic = 0.0;        // ||Q||_4^4
  double ode_residual = 0.0;   // max |Q'' + Q'/r - Q + Q^3| on the sample grid
  double tail_amplitude = 0.0; // Q(r) ~ A K0(r) for large r
  double match_radius = 0.0;
  int bisection_steps = 0;
};

/// Shooting solve on [0, r_max] with n_points uniform samples.
///
/// Q(0) is bisected on [1, 4]: profiles that cross zero before the matching
/// radius are too large, profiles that turn upward are too small, and the
/// rest are classified by comparing their logarithmic derivative with the
/// decaying solution integrated inward from the K0 asymptote at r_max.
/// Bisection runs to floating-point resolution; `tol` bounds the ODE error
/// control. Throws DomainError for out-of-range arguments and SolverFailure
/// when the bracket does not straddle the solution or the post-conditions
/// (positivity, monotonicity, residual < 1e-8) fail.
GroundState solve_Q(double r_max = 20.0, int n_points = 4000, double tol = 1e-12);

struct PohozaevDefects {
  double mass_identity = 0.0;      // |int Q^2 - 1/2 int Q^4| / int Q^2
  double gradient_identity = 0.0;  // |int |grad Q|^2 - 1/2 int Q^4| / int |grad Q|^2
  bool degenerate = false;         // zero profile
};

PohozaevDefects pohozaev_check(const RadialProfile& q);

struct GnResult {
  double lhs = 0.0;  // 1/2 ||u||_4^4
  double rhs = 0.0;  // (||u||_2^2 / ||Q||_2^2) ||grad u||_2^2
  bool holds = true; // lhs <= rhs (1 + 1e-9)
};

GnResult gn_check(const ComplexField2D& u, double q_mass);

/// Pseudo-random test field for the inequality: a trigonometric polynomial
/// with modes |a|, |b| <= K (K drawn in [1, 6]) under a Gaussian window of
/// width 0.04 L to 0.08 L placed near the box center. Same seed, same field.
ComplexField2D random_localized_field(const Grid2D& g, std::uint64_t seed);

struct ThresholdWindow {
  double eta = 0.0;
  double lower = 0.0;  // ||Q||^2 / (1 + eta)
  double upper = 0.0;  // ||Q||^2 / eta
  bool contains(double mass) const { return lower < mass && mass < upper; }
};

ThresholdWindow threshold_window(double eta, double q_mass);

}  // namespace mzk
