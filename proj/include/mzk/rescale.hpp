#pragma once

// Energy-norm rescaling of a state:
//
//   Et(s, x) = E(t + s/lambda, x/lambda) / lambda,
//   nt(s, x) = n(t + s/lambda, x/lambda) / lambda^2   (same for v),
//
// with lambda^2 = ||grad E1||^2 + ||grad E2||^2 + ||n||^2/2 + ||v||^2/2.
// On the periodic grid the samples are kept and the box is rebooked from L
// to lambda L, so every identity below is exact up to round-off.

#include <vector>

#include "mzk/dynamics.hpp"
#include "mzk/fields.hpp"

namespace mzk {

/// Throws DegenerateStateError for a state with lambda = 0.
double lambda_of(const SystemState& s);

/// Rescaled copy on the box lam * L. Throws DomainError unless lam > 0.
SystemState rescale_state(const SystemState& s, double lam);

struct RescaledState {
  SystemState state;  // rescaled fields; state.t = lambda t'
  double base_t = 0.0;
  double s = 0.0;  // lambda (t' - base_t)
  double lambda = 1.0;
};

/// Rescales `snapshot` (taken at time t') relative to base time `base_t`.
RescaledState rescale_at(const SystemState& snapshot, double base_t, double lam);

/// Rescales every snapshot with lambda(base) where base is the snapshot at
/// `base_index`; s runs from 0 at the base.
std::vector<RescaledState> rescale_window(const std::vector<SystemState>& snapshots,
                                          std::size_t base_index);

/// Residuals of the rescaled system
///   (1/lambda) i Et_s + Lap Et - nt Et + coupling = 0, nt_s + div vt = 0,
///   vt_s + grad(nt + |Et1|^2 + |Et2|^2) = 0
/// at each interior state of the window, with d/ds by centered differences.
/// Throws ContractError on fewer than 3 states, unequal s spacing, or
/// mismatched lambda/base time.
std::vector<Residual> rescaled_residual(const std::vector<RescaledState>& window, double eta);

struct IdentityDefects {
  double t = 0.0;
  double lambda = 0.0;
  double normalization_defect = 0.0;       // | energy norm of the rescaled state - 1 |
  double mass_defect = 0.0;                // | rescaled mass - reference mass | / reference mass
  double hamiltonian_scaling_defect = 0.0; // | H(rescaled) - H / lambda^2 | / | H / lambda^2 |
  double hamiltonian_drift = 0.0;          // | H - H_reference | / | H_reference |
};

/// Identity defects of one snapshot rescaled with its own lambda, against
/// the reference mass and Hamiltonian of the initial state.
IdentityDefects identity_defects(const SystemState& snapshot, double eta, double reference_mass,
                                 double reference_hamiltonian);

/// Defects for every snapshot; the reference is the earliest snapshot.
std::vector<IdentityDefects> identity_defects(const std::vector<SystemState>& snapshots,
                                              double eta);

}  // namespace mzk
