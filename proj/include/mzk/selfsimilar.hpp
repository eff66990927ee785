#pragma once

// Radial profiles (P, N) of the explicit blow-up family
//
//   Lap P - P + eta/(eta+1) P^3 = 1/(eta+1) N P
//   (r^2 N'' + 6 r N' + 6 N) / omega^2 - Lap N = Lap(P^2)
//
// and the family itself: with tau = T - t and y = |x - c| omega / tau,
//
//   E1 = (omega/tau) exp(i(theta - |x-c|^2/(4 tau) + omega^2/tau)) Pt(y)/sqrt(2),
//   E2 = -i E1,   n = (omega/tau)^2 Nt(y),
//
// where Pt = P/sqrt(eta+1), Nt = N/(eta+1), and v is the curl-free field
// with div v = -n_t.

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "mzk/error.hpp"
#include "mzk/fields.hpp"
#include "mzk/radial.hpp"

namespace mzk {

struct ProfilePair {
  RadialProfile P;
  RadialProfile N;
  double omega = std::numeric_limits<double>::infinity();
  double eta = 1.0;
  std::array<double, 2> residual_norms{};  // max-norm defects of the two equations
  int iterations = 0;
};

/// (P, N) = (Q, -Q^2) with omega = +infinity.
ProfilePair limit_profile(const RadialProfile& Q, double eta = 1.0);

/// Max-norm defects of the two profile equations on the samples of P and N
/// (omega = infinity drops the 1/omega^2 term).
std::array<double, 2> profile_residuals(const std::vector<double>& P, const std::vector<double>& N,
                                        double h, double omega, double eta);

/// Raised when the profile iteration stalls; carries the last iterate.
class ProfileSolveFailure : public SolverFailure {
 public:
  ProfileSolveFailure(const std::string& what, ProfilePair last)
      : SolverFailure(what), last_(std::move(last)) {}
  const ProfilePair& last_iterate() const { return last_; }

 private:
  ProfilePair last_;
};

/// Damped Newton iteration on the coupled discretization, seeded with the
/// limit profile built from Q and run on Q's radial grid. Requires
/// omega > r_max: the coefficient 1 - r^2/omega^2 of N'' vanishes at
/// r = omega, and that case is reported as unresolved.
ProfilePair solve_profile(double omega, double eta, const RadialProfile& Q, double tol = 1e-9);

struct ExplicitSolution {
  ProfilePair profile;
  double omega = 1.0;  // finite; may differ from profile.omega when the limit profile is used
  double T = 1.0;
  double theta = 0.0;

  /// Throws DomainError on non-positive omega/T or a profile omega that
  /// disagrees with `omega`.
  void validate() const;
};

/// Samples the closed form at time t on `grid`, centered in the box.
/// Throws DomainError for t >= T. When the profile width (T-t)/omega spans
/// fewer than 4 grid cells, or the profile does not fit in the box, a
/// message is written to `warning` (if given).
SystemState evaluate(const ExplicitSolution& sol, double t, const Grid2D& grid,
                     std::string* warning = nullptr);

struct ScalingRow {
  double t = 0.0;
  double grad_e1 = 0.0;  // (T-t) ||grad E1||
  double grad_e2 = 0.0;  // (T-t) ||grad E2||
  double n = 0.0;        // (T-t) ||n||
  double v = 0.0;        // (T-t) ||v||
  double predicted_grad_e = 0.0;  // closed form of grad_e1, chirp included
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  std::array<double, 4> spread{};  // max/min - 1 of each column
  double grad_ratio_defect = 0.0;  // max | ||grad E1|| / ||grad E2|| - 1 |
  std::vector<std::string> warnings;
  double predicted_n = 0.0;  // closed form of the n column: omega ||N|| / (eta+1)
};

/// Closed-form (T-t) ||grad E1|| at tau = T - t:
/// sqrt(omega^2 ||grad Pt||^2 / 2 + tau^2 ||y Pt||^2 / (8 omega^2)).
/// The chirp term makes it tau-dependent; the relative variation is of
/// order (tau / omega^2)^2.
double predicted_grad_norm(const ExplicitSolution& sol, double tau);

ScalingReport scaling_check(const ExplicitSolution& sol, const std::vector<double>& times,
                            const Grid2D& grid);

}  // namespace mzk
