#include "mzk/rescale.hpp"

#include <algorithm>
#include <cmath>

namespace mzk {

double lambda_of(const SystemState& s) {
  const double lam = scale_parameter(s);
  if (!(lam > 0.0)) throw DegenerateStateError("lambda = 0: the state carries no scale");
  return lam;
}

SystemState rescale_state(const SystemState& s, double lam) {
  if (!(lam > 0.0) || !std::isfinite(lam)) throw DomainError("rescaling factor must be positive");
  validate(s);
  SystemState out = s;
  const double a = 1.0 / lam, b = 1.0 / (lam * lam);
  for (auto& z : out.e1.data()) z *= a;
  for (auto& z : out.e2.data()) z *= a;
  for (auto& x : out.n.data()) x *= b;
  for (auto& x : out.v.x.data()) x *= b;
  for (auto& x : out.v.y.data()) x *= b;
  out.set_box(lam * s.grid().L);
  return out;
}

RescaledState rescale_at(const SystemState& snapshot, double base_t, double lam) {
  RescaledState r;
  r.state = rescale_state(snapshot, lam);
  r.base_t = base_t;
  r.s = lam * (snapshot.t - base_t);
  r.state.t = lam * snapshot.t;
  r.lambda = lam;
  return r;
}

std::vector<RescaledState> rescale_window(const std::vector<SystemState>& snapshots,
                                          std::size_t base_index) {
  if (base_index >= snapshots.size()) throw ContractError("base index outside the window");
  const SystemState& base = snapshots[base_index];
  const double lam = lambda_of(base);
  std::vector<RescaledState> out;
  out.reserve(snapshots.size());
  for (const auto& s : snapshots) out.push_back(rescale_at(s, base.t, lam));
  return out;
}

std::vector<Residual> rescaled_residual(const std::vector<RescaledState>& window, double eta) {
  if (window.size() < 3) throw ContractError("rescaled residual needs at least 3 states");
  const double lam = window.front().lambda, base = window.front().base_t;
  const double ds = window[1].s - window[0].s;
  if (!(ds > 0.0)) throw ContractError("rescaled states must have increasing s");
  for (std::size_t k = 0; k < window.size(); ++k) {
    const auto& w = window[k];
    if (w.lambda != lam || w.base_t != base) {
      throw ContractError("rescaled states use different lambda or base time");
    }
    if (k > 0 && std::abs((w.s - window[k - 1].s) - ds) > 1e-9 * ds) {
      throw ContractError("rescaled states are not evenly spaced in s");
    }
  }
  std::vector<Residual> out;
  for (std::size_t k = 1; k + 1 < window.size(); ++k) {
    const SystemState& prev = window[k - 1].state;
    const SystemState& cur = window[k].state;
    const SystemState& next = window[k + 1].state;
    const Grid2D& g = cur.grid();
    if (!(prev.grid() == g && next.grid() == g)) {
      throw ContractError("rescaled states live on different grids");
    }
    // The i d/ds terms carry a 1/lambda factor; fold it into the derivative.
    const double inv = 0.5 / ds;
    TimeDerivative d{ComplexField2D(g), ComplexField2D(g), RealField2D(g), VectorField2D(g)};
    for (std::size_t q = 0; q < g.size(); ++q) {
      d.e1[q] = (next.e1[q] - prev.e1[q]) * (inv / lam);
      d.e2[q] = (next.e2[q] - prev.e2[q]) * (inv / lam);
      d.n[q] = (next.n[q] - prev.n[q]) * inv;
      d.v.x[q] = (next.v.x[q] - prev.v.x[q]) * inv;
      d.v.y[q] = (next.v.y[q] - prev.v.y[q]) * inv;
    }
    out.push_back(residual(cur, d, eta));
  }
  return out;
}

IdentityDefects identity_defects(const SystemState& snapshot, double eta, double reference_mass,
                                 double reference_hamiltonian) {
  IdentityDefects d;
  d.t = snapshot.t;
  d.lambda = lambda_of(snapshot);
  const SystemState r = rescale_state(snapshot, d.lambda);
  const ConservedQuantities c = hamiltonian(r, eta);
  const double energy = c.grad_E_sq + 0.5 * c.n_sq + 0.5 * c.v_sq;
  d.normalization_defect = std::abs(energy - 1.0);
  d.mass_defect = reference_mass > 0.0 ? std::abs(c.mass - reference_mass) / reference_mass
                                       : std::abs(c.mass);
  const double h = hamiltonian(snapshot, eta).hamiltonian;
  const double expected = h / (d.lambda * d.lambda);
  d.hamiltonian_scaling_defect = expected != 0.0 ? std::abs(c.hamiltonian - expected) / std::abs(expected)
                                                 : std::abs(c.hamiltonian);
  d.hamiltonian_drift = reference_hamiltonian != 0.0
                            ? std::abs(h - reference_hamiltonian) / std::abs(reference_hamiltonian)
                            : std::abs(h);
  return d;
}

std::vector<IdentityDefects> identity_defects(const std::vector<SystemState>& snapshots,
                                              double eta) {
  if (snapshots.empty()) return {};
  const auto first = std::min_element(snapshots.begin(), snapshots.end(),
                                      [](const auto& a, const auto& b) { return a.t < b.t; });
  const double m0 = mass(*first);
  const double h0 = hamiltonian(*first, eta).hamiltonian;
  std::vector<IdentityDefects> out;
  out.reserve(snapshots.size());
  for (const auto& s : snapshots) out.push_back(identity_defects(s, eta, m0, h0));
  return out;
}

}  // namespace mzk
