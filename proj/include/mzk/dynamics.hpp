#pragma once

// Time integration of the magnetic Zakharov system
//
//   i E1_t + Lap E1 - n E1 + eta E2 (E1 conj(E2) - conj(E1) E2) = 0
//   i E2_t + Lap E2 - n E2 + eta E1 (conj(E1) E2 - E1 conj(E2)) = 0
//   n_t + div v = 0
//   v_t + grad n + grad(|E1|^2 + |E2|^2) = 0
//
// on the periodic box by Strang splitting, plus the conserved quantities and
// a pointwise residual operator for candidate solutions.

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mzk/fields.hpp"

namespace mzk {

struct ConservedQuantities {
  double mass = 0.0;           // ||E1||^2 + ||E2||^2
  double hamiltonian = 0.0;
  double grad_E_sq = 0.0;      // ||grad E1||^2 + ||grad E2||^2
  double n_sq = 0.0;           // ||n||^2
  double v_sq = 0.0;           // ||v||^2
  double cross_term = 0.0;     // int n (|E1|^2 + |E2|^2), forcing dealiased
  double magnetic_term = 0.0;  // -(eta/2) int |E1 conj(E2) - E2 conj(E1)|^2
};

ConservedQuantities hamiltonian(const SystemState& s, double eta);
double mass(const SystemState& s);

/// sqrt(||grad E||^2 + ||n||^2/2 + ||v||^2/2): the scale used for rescaling
/// and for the adaptive step rule.
double scale_parameter(const SystemState& s);

enum class NonlinearSolver {
  exact,  // closed-form pointwise flow (rotation of (E1, E2) by 2 eta Im(E1 conj E2) t)
  rk4,    // classical RK4 with `substeps` substeps per step
};

struct StepperConfig {
  double dt = 1e-3;
  double eta = 1.0;
  bool adaptive = false;
  double lambda_cap = std::numeric_limits<double>::infinity();
  double drift_tolerance = std::numeric_limits<double>::infinity();
  NonlinearSolver nonlinear = NonlinearSolver::exact;
  int substeps = 4;
  double band_threshold = 0.999;  // resolution-loss trigger on the gradient band fraction

  /// Throws DomainError on out-of-range values.
  void validate() const;
};

/// Raised when a step produces non-finite samples. Carries the state the
/// step started from.
class BlowupReached : public Error {
 public:
  BlowupReached(const std::string& what, SystemState last_valid)
      : Error("blowup_reached", what), last_valid_(std::move(last_valid)) {}
  const SystemState& last_valid() const { return last_valid_; }

 private:
  SystemState last_valid_;
};

struct StepReport {
  // Largest pointwise change of |E1|^2 + |E2|^2 and of Im(E1 conj E2) across
  // the nonlinear substep, relative to the largest density on the grid.
  double density_drift = 0.0;
  double coupling_drift = 0.0;
};

/// Exact flow of the linear part over time tau (tau may be negative):
/// Schroedinger multiplier on E1, E2 and the d'Alembert rotation on (n, v).
SystemState linear_flow(const SystemState& s, double tau);
/// Schroedinger part only.
SystemState schroedinger_flow(const SystemState& s, double tau);
/// Wave part only.
SystemState wave_flow(const SystemState& s, double tau);
/// Nonlinear/coupling subsystem over tau with n frozen as a potential.
SystemState nonlinear_flow(const SystemState& s, double tau, double eta,
                           NonlinearSolver solver = NonlinearSolver::exact, int substeps = 4,
                           StepReport* report = nullptr);

/// One Strang step linear(dt/2) o nonlinear(dt) o linear(dt/2).
/// Throws BlowupReached on non-finite output and AccuracyError when the RK4
/// substep breaks the pointwise invariants by more than 1e-11.
SystemState step(const SystemState& s, const StepperConfig& cfg, double dt,
                 StepReport* report = nullptr);
inline SystemState step(const SystemState& s, const StepperConfig& cfg) {
  return step(s, cfg, cfg.dt);
}

struct Diagnostics {
  double t = 0.0;
  double dt = 0.0;
  double mass = 0.0;
  double hamiltonian = 0.0;
  double grad_E = 0.0;  // sqrt(||grad E1||^2 + ||grad E2||^2)
  double n_norm = 0.0;
  double v_norm = 0.0;
  double lambda = 0.0;
  double dealias_fraction_energy = 1.0;  // share of ||grad E||^2 inside the band
};

Diagnostics diagnose(const SystemState& s, double eta, double dt);

enum class StopReason { horizon, lambda_cap, resolution_loss, non_finite };
std::string to_string(StopReason r);

struct RunOptions {
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::size_t checkpoint_interval = 0;   // in steps; 0: initial and final only
  std::size_t max_steps = 50'000'000;
  std::function<void(const SystemState&, const Diagnostics&)> observer;
};

struct Trajectory {
  std::vector<Diagnostics> rows;  // rows[0] is the initial state
  SystemState final_state;        // last valid state
  StopReason stop = StopReason::horizon;
  std::size_t steps = 0;
  double max_density_drift = 0.0;
  double max_coupling_drift = 0.0;
  std::vector<std::filesystem::path> checkpoints;
};

/// Steps until `horizon`, the lambda cap, or blow-up. With cfg.adaptive the
/// step is dt (lambda(0) / lambda(t))^2, never larger than dt.
Trajectory run(const SystemState& initial, const StepperConfig& cfg, double horizon,
               const RunOptions& opts = {});

void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<Diagnostics>& rows);
std::vector<Diagnostics> read_diagnostics_csv(const std::filesystem::path& path);

// Residual operator.

struct TimeDerivative {
  ComplexField2D e1;
  ComplexField2D e2;
  RealField2D n;
  VectorField2D v;
};

struct Residual {
  ComplexField2D r1;
  ComplexField2D r2;
  RealField2D r3;
  VectorField2D r4;
  std::array<double, 4> norms{};   // L2 norms of r1..r4
  std::array<double, 4> scales{};  // sum of the L2 norms of the terms of each equation

  /// norms / scales (0 where the scale vanishes).
  std::array<double, 4> relative() const;
  double relative_total() const;
};

Residual residual(const SystemState& s, const TimeDerivative& d, double eta);
/// Centered difference in time; prev and next must sit symmetrically around cur.
Residual residual(const SystemState& prev, const SystemState& cur, const SystemState& next,
                  double eta);

}  // namespace mzk
