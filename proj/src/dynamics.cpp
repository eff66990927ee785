#include "mzk/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mzk/checkpoint.hpp"
#include "mzk/spectral.hpp"

namespace mzk {

namespace {

// Wavenumber used for first derivatives: the Nyquist mode is dropped so that
// real fields stay real.
double dk_x(const Grid2D& g, std::size_t i) { return i == g.nx / 2 ? 0.0 : g.kx(i); }
double dk_y(const Grid2D& g, std::size_t j) { return j == g.ny / 2 ? 0.0 : g.ky(j); }

RealField2D density(const SystemState& s) {
  RealField2D rho(s.grid());
  for (std::size_t k = 0; k < rho.data().size(); ++k) {
    rho[k] = std::norm(s.e1[k]) + std::norm(s.e2[k]);
  }
  return rho;
}

std::vector<cplx> band_limited_modes(const RealField2D& f) {
  const Grid2D& g = f.grid();
  auto m = spectral::forward(f);
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      if (!g.in_band(i, j)) m[i * g.ny + j] = 0.0;
    }
  }
  return m;
}

struct GradientSums {
  double total = 0.0;
  double band = 0.0;
};

GradientSums gradient_sums(const ComplexField2D& f) {
  const Grid2D& g = f.grid();
  const auto m = spectral::forward(f);
  GradientSums s;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double kx = g.kx(i);
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double ky = g.ky(j);
      const double w = (kx * kx + ky * ky) * std::norm(m[i * g.ny + j]);
      s.total += w;
      if (g.in_band(i, j)) s.band += w;
    }
  }
  const double weight = g.cell_area() / static_cast<double>(g.size());
  s.total *= weight;
  s.band *= weight;
  return s;
}

ConservedQuantities conserved(const SystemState& s, double eta, double* band_fraction) {
  const Grid2D& g = s.grid();
  ConservedQuantities c;
  const GradientSums a = gradient_sums(s.e1);
  const GradientSums b = gradient_sums(s.e2);
  c.grad_E_sq = a.total + b.total;
  if (band_fraction) *band_fraction = c.grad_E_sq > 0.0 ? (a.band + b.band) / c.grad_E_sq : 1.0;
  c.mass = l2_norm_sq(s.e1) + l2_norm_sq(s.e2);
  c.n_sq = l2_norm_sq(s.n);
  c.v_sq = l2_norm_sq(s.v);
  const RealField2D rho_d = spectral::real_part(g, spectral::inverse(g, band_limited_modes(density(s))));
  double cross = 0.0, mag = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    cross += s.n[k] * rho_d[k];
    const double m = std::imag(s.e1[k] * std::conj(s.e2[k]));
    mag += m * m;
  }
  c.cross_term = cross * g.cell_area();
  // |E1 conj(E2) - E2 conj(E1)|^2 = 4 Im(E1 conj E2)^2
  c.magnetic_term = -2.0 * eta * mag * g.cell_area();
  c.hamiltonian = c.grad_E_sq + 0.5 * c.n_sq + 0.5 * c.v_sq + c.cross_term + c.magnetic_term;
  return c;
}

// Wavenumber tables for one grid; kd* drop the Nyquist mode.
struct Wavenumbers {
  std::vector<double> kx, ky, kdx, kdy;
  explicit Wavenumbers(const Grid2D& g) : kx(g.nx), ky(g.ny), kdx(g.nx), kdy(g.ny) {
    for (std::size_t i = 0; i < g.nx; ++i) kx[i] = g.kx(i), kdx[i] = dk_x(g, i);
    for (std::size_t j = 0; j < g.ny; ++j) ky[j] = g.ky(j), kdy[j] = dk_y(g, j);
  }
};

// cos(|k| tau), sin(|k| tau) over the grid. A Strang step applies the same
// half step twice, so the last table is kept.
struct WaveTable {
  Grid2D grid;
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> c, s, ux, uy;
};

const WaveTable& wave_table(const Grid2D& g, const Wavenumbers& w, double tau) {
  thread_local WaveTable t;
  if (t.grid == g && t.tau == tau) return t;
  t.grid = g;
  t.tau = tau;
  t.c.resize(g.size());
  t.s.resize(g.size());
  t.ux.resize(g.size());
  t.uy.resize(g.size());
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const std::size_t k = i * g.ny + j;
      const double kk = std::hypot(w.kdx[i], w.kdy[j]);
      t.c[k] = std::cos(kk * tau);
      t.s[k] = std::sin(kk * tau);
      t.ux[k] = kk > 0.0 ? w.kdx[i] / kk : 0.0;
      t.uy[k] = kk > 0.0 ? w.kdy[j] / kk : 0.0;
    }
  }
  return t;
}

// Two real fields through one complex transform.
void forward_pair(const RealField2D& a, const RealField2D& b, std::vector<cplx>& fa,
                  std::vector<cplx>& fb) {
  const Grid2D& g = a.grid();
  std::vector<cplx> z(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) z[k] = {a[k], b[k]};
  z = spectral::forward(g, std::move(z));
  fa.resize(g.size());
  fb.resize(g.size());
  for (std::size_t i = 0; i < g.nx; ++i) {
    const std::size_t mi = (g.nx - i) % g.nx;
    for (std::size_t j = 0; j < g.ny; ++j) {
      const std::size_t mj = (g.ny - j) % g.ny;
      const cplx p = z[i * g.ny + j], q = std::conj(z[mi * g.ny + mj]);
      fa[i * g.ny + j] = 0.5 * (p + q);
      fb[i * g.ny + j] = cplx{0.0, -0.5} * (p - q);
    }
  }
}

// Inverse of two Hermitian spectra; writes the real results into a and b.
void inverse_pair(const Grid2D& g, const std::vector<cplx>& fa, const std::vector<cplx>& fb,
                  RealField2D& a, RealField2D& b) {
  std::vector<cplx> z(g.size());
  const cplx I{0.0, 1.0};
  for (std::size_t k = 0; k < g.size(); ++k) z[k] = fa[k] + I * fb[k];
  z = spectral::inverse(g, std::move(z));
  for (std::size_t k = 0; k < g.size(); ++k) {
    a[k] = z[k].real();
    b[k] = z[k].imag();
  }
}

SystemState linear(const SystemState& s, double tau, bool do_e, bool do_w) {
  validate(s);
  const Grid2D& g = s.grid();
  const Wavenumbers w(g);
  SystemState out = s;
  out.t = s.t + tau;
  if (do_e) {
    std::vector<cplx> px(g.nx), py(g.ny);
    for (std::size_t i = 0; i < g.nx; ++i) px[i] = std::polar(1.0, -w.kx[i] * w.kx[i] * tau);
    for (std::size_t j = 0; j < g.ny; ++j) py[j] = std::polar(1.0, -w.ky[j] * w.ky[j] * tau);
    for (ComplexField2D* f : {&out.e1, &out.e2}) {
      auto m = spectral::forward(*f);
      for (std::size_t i = 0; i < g.nx; ++i) {
        for (std::size_t j = 0; j < g.ny; ++j) m[i * g.ny + j] *= px[i] * py[j];
      }
      f->data() = spectral::inverse(g, std::move(m));
    }
  }
  if (do_w) {
    const WaveTable& t = wave_table(g, w, tau);
    std::vector<cplx> n, vx;
    forward_pair(s.n, s.v.x, n, vx);
    std::vector<cplx> vy = spectral::forward(s.v.y);
    const cplx I{0.0, 1.0};
    for (std::size_t k = 0; k < g.size(); ++k) {
      const cplx u = t.ux[k] * vx[k] + t.uy[k] * vy[k];
      const cplx n2 = t.c[k] * n[k] - I * t.s[k] * u;
      const cplx du = (t.c[k] - 1.0) * u - I * t.s[k] * n[k];
      n[k] = n2;
      vx[k] += du * t.ux[k];
      vy[k] += du * t.uy[k];
    }
    inverse_pair(g, n, vx, out.n, out.v.x);
    out.v.y = spectral::real_part(g, spectral::inverse(g, std::move(vy)));
  }
  return out;
}

// Pointwise right-hand side of the coupling subsystem.
void coupling_rhs(cplx e1, cplx e2, double n, double eta, cplx& d1, cplx& d2) {
  const cplx I{0.0, 1.0};
  const double m = std::imag(e1 * std::conj(e2));
  d1 = -I * n * e1 - 2.0 * eta * m * e2;
  d2 = -I * n * e2 + 2.0 * eta * m * e1;
}

void rk4_point(cplx& e1, cplx& e2, double n, double eta, double tau, int substeps) {
  const double h = tau / substeps;
  for (int q = 0; q < substeps; ++q) {
    cplx a1, a2, b1, b2, c1, c2, d1, d2;
    coupling_rhs(e1, e2, n, eta, a1, a2);
    coupling_rhs(e1 + 0.5 * h * a1, e2 + 0.5 * h * a2, n, eta, b1, b2);
    coupling_rhs(e1 + 0.5 * h * b1, e2 + 0.5 * h * b2, n, eta, c1, c2);
    coupling_rhs(e1 + h * c1, e2 + h * c2, n, eta, d1, d2);
    e1 += h / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + d1);
    e2 += h / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2);
  }
}

double sqrt_or_zero(double x) { return x > 0.0 ? std::sqrt(x) : 0.0; }

}  // namespace

void StepperConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive and finite");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive and finite");
  if (!(lambda_cap > 0.0)) throw DomainError("lambda_cap must be positive");
  if (!(drift_tolerance > 0.0)) throw DomainError("drift_tolerance must be positive");
  if (substeps < 4) throw DomainError("the RK4 coupling stepper needs at least 4 substeps");
  if (!(band_threshold > 0.0 && band_threshold <= 1.0)) {
    throw DomainError("band_threshold must lie in (0, 1]");
  }
}

ConservedQuantities hamiltonian(const SystemState& s, double eta) {
  validate(s);
  return conserved(s, eta, nullptr);
}

double mass(const SystemState& s) {
  validate(s);
  return l2_norm_sq(s.e1) + l2_norm_sq(s.e2);
}

double scale_parameter(const SystemState& s) {
  validate(s);
  return sqrt_or_zero(gradient_norm_sq(s.e1) + gradient_norm_sq(s.e2) + 0.5 * l2_norm_sq(s.n) +
                      0.5 * l2_norm_sq(s.v));
}

SystemState linear_flow(const SystemState& s, double tau) { return linear(s, tau, true, true); }
SystemState schroedinger_flow(const SystemState& s, double tau) {
  return linear(s, tau, true, false);
}
SystemState wave_flow(const SystemState& s, double tau) { return linear(s, tau, false, true); }

SystemState nonlinear_flow(const SystemState& s, double tau, double eta, NonlinearSolver solver,
                           int substeps, StepReport* report) {
  validate(s);
  const Grid2D& g = s.grid();
  SystemState out = s;
  const RealField2D rho = density(s);
  std::vector<double> coupling(g.size());
  double rho_max = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    coupling[k] = std::imag(s.e1[k] * std::conj(s.e2[k]));
    rho_max = std::max(rho_max, rho[k]);
  }
  parallel_for(g.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      if (solver == NonlinearSolver::exact) {
        const cplx phase = std::polar(1.0, -s.n[k] * tau);
        const double phi = 2.0 * eta * coupling[k] * tau;
        const double c = std::cos(phi), sn = std::sin(phi);
        const cplx a = s.e1[k], b2 = s.e2[k];
        out.e1[k] = phase * (c * a - sn * b2);
        out.e2[k] = phase * (sn * a + c * b2);
      } else {
        rk4_point(out.e1[k], out.e2[k], s.n[k], eta, tau, substeps);
      }
    }
  });
  StepReport rep;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double r2 = std::norm(out.e1[k]) + std::norm(out.e2[k]);
    const double m2 = std::imag(out.e1[k] * std::conj(out.e2[k]));
    rep.density_drift = std::max(rep.density_drift, std::abs(r2 - rho[k]));
    rep.coupling_drift = std::max(rep.coupling_drift, std::abs(m2 - coupling[k]));
  }
  if (rho_max > 0.0) {
    rep.density_drift /= rho_max;
    rep.coupling_drift /= rho_max;
  }
  if (report) *report = rep;
  if (solver == NonlinearSolver::rk4 && all_finite(out) &&
      std::max(rep.density_drift, rep.coupling_drift) > 1e-11) {
    std::ostringstream msg;
    msg << "RK4 coupling substep broke the pointwise invariants by "
        << std::max(rep.density_drift, rep.coupling_drift) << "; increase substeps";
    throw AccuracyError(msg.str());
  }
  // v -= tau grad(D rho); rho is invariant along this flow.
  auto modes = band_limited_modes(rho);
  std::vector<cplx> gx(g.size()), gy(g.size());
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const std::size_t k = i * g.ny + j;
      gx[k] = cplx{0.0, dk_x(g, i)} * modes[k];
      gy[k] = cplx{0.0, dk_y(g, j)} * modes[k];
    }
  }
  RealField2D fx(g), fy(g);
  inverse_pair(g, gx, gy, fx, fy);
  for (std::size_t k = 0; k < g.size(); ++k) {
    out.v.x[k] -= tau * fx[k];
    out.v.y[k] -= tau * fy[k];
  }
  return out;
}

SystemState step(const SystemState& s, const StepperConfig& cfg, double dt, StepReport* report) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("step size must be positive");
  validate(s);
  SystemState a = linear_flow(s, 0.5 * dt);
  bool finite = all_finite(a);
  if (finite) {
    a = nonlinear_flow(a, dt, cfg.eta, cfg.nonlinear, cfg.substeps, report);
    finite = all_finite(a);
  }
  if (finite) {
    a = linear_flow(a, 0.5 * dt);
    finite = all_finite(a);
  }
  if (!finite) throw BlowupReached("non-finite samples after a step from t = " + std::to_string(s.t), s);
  a.t = s.t + dt;
  return a;
}

Diagnostics diagnose(const SystemState& s, double eta, double dt) {
  validate(s);
  Diagnostics d;
  double band = 1.0;
  const ConservedQuantities c = conserved(s, eta, &band);
  d.t = s.t;
  d.dt = dt;
  d.mass = c.mass;
  d.hamiltonian = c.hamiltonian;
  d.grad_E = sqrt_or_zero(c.grad_E_sq);
  d.n_norm = sqrt_or_zero(c.n_sq);
  d.v_norm = sqrt_or_zero(c.v_sq);
  d.lambda = sqrt_or_zero(c.grad_E_sq + 0.5 * c.n_sq + 0.5 * c.v_sq);
  d.dealias_fraction_energy = band;
  return d;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::horizon: return "horizon";
    case StopReason::lambda_cap: return "lambda_cap";
    case StopReason::resolution_loss: return "resolution_loss";
    case StopReason::non_finite: return "non_finite";
  }
  return "unknown";
}

Trajectory run(const SystemState& initial, const StepperConfig& cfg, double horizon,
               const RunOptions& opts) {
  cfg.validate();
  validate(initial);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");

  Trajectory tr;
  SystemState cur = initial;
  const Diagnostics d0 = diagnose(cur, cfg.eta, 0.0);
  tr.rows.push_back(d0);
  if (opts.observer) opts.observer(cur, d0);
  const double lambda0 = d0.lambda;
  const double energy_scale = std::max(std::abs(d0.hamiltonian), lambda0 * lambda0);
  const double t_end = initial.t + horizon;

  auto save = [&](const SystemState& s, std::size_t index) {
    if (opts.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(opts.checkpoint_dir);
    char name[32];
    std::snprintf(name, sizeof name, "ckpt_%08zu.mzk", index);
    const auto path = opts.checkpoint_dir / name;
    checkpoint::write(path, s);
    tr.checkpoints.push_back(path);
  };
  save(cur, 0);

  double lambda = lambda0;
  bool saved_last = true;
  while (t_end - cur.t > 1e-12 * std::max(1.0, std::abs(t_end))) {
    if (tr.steps >= opts.max_steps) throw SolverFailure("run exceeded max_steps");
    double dt = cfg.dt;
    if (cfg.adaptive && lambda0 > 0.0 && lambda > lambda0) {
      dt *= (lambda0 / lambda) * (lambda0 / lambda);
    }
    const bool last = dt >= t_end - cur.t;
    if (last) dt = t_end - cur.t;

    StepReport rep;
    SystemState next;
    try {
      next = step(cur, cfg, dt, &rep);
    } catch (const BlowupReached&) {
      tr.stop = StopReason::non_finite;
      break;
    }
    if (last) next.t = t_end;
    const Diagnostics d = diagnose(next, cfg.eta, dt);
    ++tr.steps;
    cur = std::move(next);
    lambda = d.lambda;
    tr.rows.push_back(d);
    tr.max_density_drift = std::max(tr.max_density_drift, rep.density_drift);
    tr.max_coupling_drift = std::max(tr.max_coupling_drift, rep.coupling_drift);
    if (opts.observer) opts.observer(cur, d);
    saved_last = false;
    if (opts.checkpoint_interval > 0 && tr.steps % opts.checkpoint_interval == 0) {
      save(cur, tr.steps);
      saved_last = true;
    }

    if (std::abs(d.hamiltonian - d0.hamiltonian) > cfg.drift_tolerance * energy_scale) {
      std::ostringstream msg;
      msg << "Hamiltonian drift " << std::abs(d.hamiltonian - d0.hamiltonian) << " at t = " << d.t
          << " exceeds drift_tolerance " << cfg.drift_tolerance << " (relative to "
          << energy_scale << ")";
      throw AccuracyError(msg.str());
    }
    if (d.dealias_fraction_energy < cfg.band_threshold) {
      tr.stop = StopReason::resolution_loss;
      break;
    }
    if (d.lambda > cfg.lambda_cap) {
      tr.stop = StopReason::lambda_cap;
      break;
    }
  }
  if (!saved_last) save(cur, tr.steps);
  tr.final_state = std::move(cur);
  return tr;
}

void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<Diagnostics>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "t,dt,mass,hamiltonian,grad_E,n_norm,v_norm,lambda,dealias_fraction_energy\n";
  char buf[512];
  for (const auto& d : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", d.t,
                  d.dt, d.mass, d.hamiltonian, d.grad_E, d.n_norm, d.v_norm, d.lambda,
                  d.dealias_fraction_energy);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Diagnostics> read_diagnostics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  const std::vector<std::string> expected{"t",      "dt",     "mass",   "hamiltonian",
                                          "grad_E", "n_norm", "v_norm", "lambda",
                                          "dealias_fraction_energy"};
  if (header != expected) throw IoError(path.string() + ": unexpected diagnostics header");
  std::vector<Diagnostics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double v[9];
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= 9) break;
      char* end = nullptr;
      v[c] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" +
                      cell + "'");
      }
      ++c;
    }
    if (c != 9) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    }
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return rows;
}

std::array<double, 4> Residual::relative() const {
  std::array<double, 4> r{};
  for (int q = 0; q < 4; ++q) r[q] = scales[q] > 0.0 ? norms[q] / scales[q] : 0.0;
  return r;
}

double Residual::relative_total() const {
  double num = 0.0, den = 0.0;
  for (int q = 0; q < 4; ++q) {
    num += norms[q] * norms[q];
    den += scales[q] * scales[q];
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

Residual residual(const SystemState& s, const TimeDerivative& d, double eta) {
  validate(s);
  const Grid2D& g = s.grid();
  if (!(d.e1.grid() == g && d.e2.grid() == g && d.n.grid() == g && d.v.grid() == g)) {
    throw ContractError("time derivative fields live on a different grid than the state");
  }
  const cplx I{0.0, 1.0};
  const ComplexField2D lap1 = spectral::laplacian(s.e1);
  const ComplexField2D lap2 = spectral::laplacian(s.e2);
  const RealField2D div = spectral::divergence(s.v);
  const VectorField2D grad_n = spectral::gradient(s.n);
  const VectorField2D grad_rho = spectral::gradient(density(s));

  Residual r;
  r.r1 = ComplexField2D(g);
  r.r2 = ComplexField2D(g);
  r.r3 = RealField2D(g);
  r.r4 = VectorField2D(g);
  // Per-equation term norms, accumulated as squared sums.
  double t1[4] = {}, t2[4] = {}, t3[2] = {}, t4[3] = {};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const cplx e1 = s.e1[k], e2 = s.e2[k];
    const cplx w = e1 * std::conj(e2) - std::conj(e1) * e2;
    const cplx a1 = I * d.e1[k], c1 = -s.n[k] * e1, m1 = eta * e2 * w;
    const cplx a2 = I * d.e2[k], c2 = -s.n[k] * e2, m2 = -eta * e1 * w;
    r.r1[k] = a1 + lap1[k] + c1 + m1;
    r.r2[k] = a2 + lap2[k] + c2 + m2;
    r.r3[k] = d.n[k] + div[k];
    r.r4.x[k] = d.v.x[k] + grad_n.x[k] + grad_rho.x[k];
    r.r4.y[k] = d.v.y[k] + grad_n.y[k] + grad_rho.y[k];
    t1[0] += std::norm(a1), t1[1] += std::norm(lap1[k]), t1[2] += std::norm(c1), t1[3] += std::norm(m1);
    t2[0] += std::norm(a2), t2[1] += std::norm(lap2[k]), t2[2] += std::norm(c2), t2[3] += std::norm(m2);
    t3[0] += d.n[k] * d.n[k], t3[1] += div[k] * div[k];
    t4[0] += d.v.x[k] * d.v.x[k] + d.v.y[k] * d.v.y[k];
    t4[1] += grad_n.x[k] * grad_n.x[k] + grad_n.y[k] * grad_n.y[k];
    t4[2] += grad_rho.x[k] * grad_rho.x[k] + grad_rho.y[k] * grad_rho.y[k];
  }
  const double a = g.cell_area();
  auto sum_norms = [a](const double* t, int n) {
    double s = 0.0;
    for (int q = 0; q < n; ++q) s += std::sqrt(t[q] * a);
    return s;
  };
  r.scales = {sum_norms(t1, 4), sum_norms(t2, 4), sum_norms(t3, 2), sum_norms(t4, 3)};
  r.norms = {std::sqrt(l2_norm_sq(r.r1)), std::sqrt(l2_norm_sq(r.r2)),
             std::sqrt(l2_norm_sq(r.r3)), std::sqrt(l2_norm_sq(r.r4))};
  return r;
}

Residual residual(const SystemState& prev, const SystemState& cur, const SystemState& next,
                  double eta) {
  validate(prev);
  validate(cur);
  validate(next);
  const Grid2D& g = cur.grid();
  if (!(prev.grid() == g && next.grid() == g)) {
    throw ContractError("residual window states live on different grids");
  }
  const double delta = cur.t - prev.t;
  if (!(delta > 0.0) || std::abs((next.t - cur.t) - delta) > 1e-9 * delta) {
    throw ContractError("residual window must be centered: t-d, t, t+d with d > 0");
  }
  const double inv = 0.5 / delta;
  TimeDerivative d{ComplexField2D(g), ComplexField2D(g), RealField2D(g), VectorField2D(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    d.e1[k] = (next.e1[k] - prev.e1[k]) * inv;
    d.e2[k] = (next.e2[k] - prev.e2[k]) * inv;
    d.n[k] = (next.n[k] - prev.n[k]) * inv;
    d.v.x[k] = (next.v.x[k] - prev.v.x[k]) * inv;
    d.v.y[k] = (next.v.y[k] - prev.v.y[k]) * inv;
  }
  return residual(cur, d, eta);
}

}  // namespace mzk
