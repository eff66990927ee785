// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../oracle/shooting_oracle.hpp"
#include "mzk/analysis.hpp"
#include "mzk/checkpoint.hpp"
#include "mzk/config.hpp"
#include "mzk/dynamics.hpp"
#include "mzk/groundstate.hpp"
#include "mzk/rescale.hpp"
#include "mzk/selfsimilar.hpp"
#include "mzk/spectral.hpp"

using namespace mzk;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

// Frozen oracle values (see tests/oracle).
constexpr double kOracleQ0 = 2.2062008646508;
constexpr double kOracleMass = 11.70089652456;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const GroundState& ground() {
  static const GroundState q = solve_Q(20.0, 4000, 1e-12);
  return q;
}

fs::path scratch() {
  static const fs::path d = [] {
    fs::path p = fs::temp_directory_path() / "mzk_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

// ---------------------------------------------------------------- 1
Outcome ground_state_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const GroundState q = solve_Q(20.0, 4000, 1e-12);
  const PohozaevDefects p = pohozaev_check(q.profile);
  const double secs = seconds_since(t0);
  const double dq = std::abs(q.q0 - kOracleQ0);
  const double dm = std::abs(q.mass / kOracleMass - 1.0);
  const bool ok = dq < 1e-8 && dm < 1e-6 && p.mass_identity < 1e-6 && p.gradient_identity < 1e-6 &&
                  secs < 5.0;
  return {ok, fmt("|Q0-oracle|=%.2e |mass/oracle-1|=%.2e pohozaev=(%.2e, %.2e) time=%.2fs", dq, dm,
                  p.mass_identity, p.gradient_identity, secs)};
}

// ---------------------------------------------------------------- 2
Outcome gagliardo_nirenberg() {
  const auto t0 = std::chrono::steady_clock::now();
  const double qm = ground().mass;
  const Grid2D g = Grid2D::make(128, 128, 40.0);
  int held = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const GnResult r = gn_check(random_localized_field(g, 1000 + s), qm);
    held += r.holds ? 1 : 0;
    worst = std::max(worst, r.lhs / r.rhs);
  }
  const Grid2D gq = Grid2D::make(256, 256, 40.0);
  const RealField2D qs = sample_radial(ground().profile, gq, 20.0, 20.0);
  ComplexField2D u(gq);
  for (std::size_t k = 0; k < gq.size(); ++k) u[k] = qs[k];
  const GnResult eq = gn_check(u, qm);
  const double defect = std::abs(eq.lhs - eq.rhs) / eq.rhs;
  const double secs = seconds_since(t0);
  return {held == 100 && defect < 1e-4 && secs < 10.0,
          fmt("%d/100 random fields hold (max lhs/rhs %.4f); equality defect at Q %.2e; time=%.2fs",
              held, worst, defect, secs)};
}

// ---------------------------------------------------------------- 3
SystemState generic_data(const Grid2D& g) {
  SystemState s(g, 0.0);
  const double c = g.L / 2;
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double x = g.x(i) - c, y = g.y(j) - c;
      const double a = std::exp(-((x - 1) * (x - 1) + y * y) / 2.0);
      const double b = std::exp(-(x * x + (y + 0.5) * (y + 0.5)) / 1.5);
      s.e1(i, j) = 0.8 * a * std::polar(1.0, 0.3 * x - 0.2 * y);
      s.e2(i, j) = cplx(0.4, 0.5) * b;
      s.n(i, j) = -0.4 * a * b;
      s.v.x(i, j) = 0.1 * x * b;
      s.v.y(i, j) = -0.2 * y * a;
    }
  return s;
}

Outcome conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid2D g = Grid2D::make(128, 128, 20.0);
  const SystemState s0 = generic_data(g);
  const double m0 = mass(s0), h0 = hamiltonian(s0, 1.0).hamiltonian;
  double mass_drift = 0.0;
  auto run_drift = [&](double dt, int steps) {
    StepperConfig cfg;
    cfg.dt = dt;
    SystemState s = s0;
    double worst = 0.0;
    for (int k = 0; k < steps; ++k) {
      s = step(s, cfg);
      const ConservedQuantities c = hamiltonian(s, 1.0);
      mass_drift = std::max(mass_drift, std::abs(c.mass / m0 - 1.0));
      worst = std::max(worst, std::abs(c.hamiltonian - h0));
    }
    return worst;
  };
  const double a = run_drift(4e-3, 1000);
  const double b = run_drift(2e-3, 2000);
  const double secs = seconds_since(t0);
  return {mass_drift < 1e-10 && a / b >= 3.5 && secs < 60.0,
          fmt("mass drift %.2e; max|H-H0| %.3e (dt) vs %.3e (dt/2), ratio %.3f; time=%.1fs",
              mass_drift, a, b, a / b, secs)};
}

// ---------------------------------------------------------------- 4
Outcome exact_solutions() {
  // Plane wave.
  const Grid2D g = Grid2D::make(32, 32, 2 * pi);
  StepperConfig cfg;
  cfg.dt = 0.01;
  auto plane = [&](double t) {
    SystemState s(g, t);
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ny; ++j) s.e1(i, j) = std::polar(1.0, g.x(i) - t);
    return s;
  };
  SystemState s = plane(0.0);
  for (int k = 0; k < 100; ++k) s = step(s, cfg);
  const SystemState ex = plane(s.t);
  double pw = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) pw = std::max(pw, std::abs(s.e1[k] - ex.e1[k]));

  // d'Alembert mode n = cos x cos t, vx = sin x sin t to t = 2.
  std::vector<double> dal;
  for (double dt : {0.1, 0.05, 0.025}) {
    SystemState w(g);
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ny; ++j) w.n(i, j) = std::cos(g.x(i));
    StepperConfig c;
    c.dt = dt;
    for (int k = 0; k < static_cast<int>(std::lround(2.0 / dt)); ++k) w = step(w, c);
    double e = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ny; ++j) {
        e = std::max(e, std::abs(w.n(i, j) - std::cos(g.x(i)) * std::cos(w.t)));
        e = std::max(e, std::abs(w.v.x(i, j) - std::sin(g.x(i)) * std::sin(w.t)));
      }
    dal.push_back(e);
  }
  const double dal_max = std::max({dal[0], dal[1], dal[2]});

  // Temporal order on the coupled problem against a fine reference.
  const Grid2D gc = Grid2D::make(64, 64, 16.0);
  const SystemState c0 = generic_data(gc);
  auto solve = [&](double dt) {
    StepperConfig c;
    c.dt = dt;
    SystemState x = c0;
    for (int k = 0; k < static_cast<int>(std::lround(0.5 / dt)); ++k) x = step(x, c);
    return x;
  };
  const SystemState ref = solve(0.5 / 1280);
  auto err = [&](const SystemState& x) {
    double e = 0.0;
    for (std::size_t k = 0; k < gc.size(); ++k) {
      e += std::norm(x.e1[k] - ref.e1[k]) + std::norm(x.e2[k] - ref.e2[k]) +
           std::pow(x.n[k] - ref.n[k], 2);
    }
    return std::sqrt(e);
  };
  const double e1 = err(solve(0.5 / 20)), e2 = err(solve(0.5 / 40)), e3 = err(solve(0.5 / 80));
  const double order = std::log2(std::sqrt(e1 * e2) / std::sqrt(e2 * e3));
  const bool ok = pw < 1e-10 && dal_max < 1e-12 && order >= 1.9;
  return {ok, fmt("plane wave err %.2e; d'Alembert err %.1e/%.1e/%.1e (linear flow is exact); "
                  "coupled order %.3f",
                  pw, dal[0], dal[1], dal[2], order)};
}

// ---------------------------------------------------------------- 5
Outcome selfsimilar_sharpness() {
  const auto t0 = std::chrono::steady_clock::now();
  ExplicitSolution sol;
  sol.profile = limit_profile(ground().profile, 1.0);
  sol.omega = 400.0;
  sol.T = 400.0;
  std::vector<double> times;
  for (int k = 0; k < 12; ++k) times.push_back(260.0 * k / 11.0);
  const Grid2D g = Grid2D::make(256, 256, 24.0);
  const ScalingReport r = scaling_check(sol, times, g);
  std::vector<double> t, y;
  for (const auto& row : r.rows) {
    t.push_back(row.t);
    y.push_back(row.n / (sol.T - row.t));
  }
  FitOptions fo;
  fo.tail_fraction = 1.0;
  const RateFit f = fit_rate(t, y, RateModel::free_exponent, fo);
  const double secs = seconds_since(t0);
  const double worst = std::max({r.spread[0], r.spread[1], r.spread[2]});
  const bool ok = r.rows.size() >= 10 && worst < 1e-5 && std::abs(f.exponent - 1.0) <= 0.01 &&
                  std::abs(f.T_est - sol.T) <= 1e-3 && secs < 120.0;
  return {ok, fmt("spreads gradE1 %.2e gradE2 %.2e n %.2e (v %.2e, measured only); fit exponent "
                  "%.6f T_est-T %.2e; time=%.1fs",
                  r.spread[0], r.spread[1], r.spread[2], r.spread[3], f.exponent, f.T_est - sol.T,
                  secs)};
}

// ---------------------------------------------------------------- 6
Outcome residual_decay() {
  const ProfilePair lim = limit_profile(ground().profile, 1.0);
  const Grid2D g = Grid2D::make(256, 256, 24.0);
  std::vector<double> res;
  for (double w : {10.0, 20.0, 40.0, 80.0}) {
    ExplicitSolution sol;
    sol.profile = lim;
    sol.omega = w;
    sol.T = w;  // profile width 1 at t = 0
    const double dl = 1e-4;
    const Residual r =
        residual(evaluate(sol, dl, g), evaluate(sol, 2 * dl, g), evaluate(sol, 3 * dl, g), 1.0);
    res.push_back(r.relative_total());
  }
  bool mono = true;
  for (std::size_t k = 1; k < res.size(); ++k) mono = mono && res[k] < res[k - 1];
  return {mono, fmt("relative residual at omega 10/20/40/80: %.3e %.3e %.3e %.3e (ratios %.2f %.2f "
                    "%.2f)",
                    res[0], res[1], res[2], res[3], res[0] / res[1], res[1] / res[2],
                    res[2] / res[3])};
}

// ---------------------------------------------------------------- presets
struct PresetRun {
  RunConfig cfg;
  Trajectory tr;
  fs::path checkpoints;
  double seconds = 0.0;
  std::string error;
};

PresetRun run_preset(const std::string& name) {
  PresetRun p;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    p.cfg = load_config(fs::path(MZK_PRESET_DIR) / name);
    const SystemState init = build_initial_state(p.cfg);
    RunOptions ro;
    p.checkpoints = scratch() / (name + ".ck");
    ro.checkpoint_dir = p.checkpoints;
    ro.checkpoint_interval = p.cfg.checkpoint_interval;
    p.tr = run(init, p.cfg.stepper(scale_parameter(init)), p.cfg.horizon, ro);
  } catch (const std::exception& e) {
    p.error = e.what();
  }
  p.seconds = seconds_since(t0);
  return p;
}

const PresetRun& preset_a() {
  static const PresetRun p = run_preset("preset_a.cfg");
  return p;
}
const PresetRun& preset_b() {
  static const PresetRun p = run_preset("preset_b.cfg");
  return p;
}

// ---------------------------------------------------------------- 7
Outcome rescaling_identities() {
  double w[3] = {0, 0, 0};
  std::size_t count = 0;
  for (const PresetRun* p : {&preset_a(), &preset_b()}) {
    if (!p->error.empty()) return {false, "preset run failed: " + p->error};
    const auto snaps = checkpoint::read_directory(p->checkpoints);
    for (const auto& d : identity_defects(snaps, p->cfg.eta)) {
      w[0] = std::max(w[0], d.normalization_defect);
      w[1] = std::max(w[1], d.mass_defect);
      w[2] = std::max(w[2], d.hamiltonian_scaling_defect);
      ++count;
    }
  }
  return {count > 0 && w[0] < 1e-10 && w[1] < 1e-10 && w[2] < 1e-8,
          fmt("%zu checkpoints (presets A and B): normalization %.2e, mass %.2e, Hamiltonian "
              "scaling %.2e",
              count, w[0], w[1], w[2])};
}

// ---------------------------------------------------------------- 8
Outcome dichotomy() {
  const PresetRun& a = preset_a();
  const PresetRun& b = preset_b();
  if (!a.error.empty() || !b.error.empty()) return {false, "preset run failed: " + a.error + b.error};
  const double l0 = a.tr.rows.front().lambda;
  double lo = l0, hi = l0;
  for (const auto& d : a.tr.rows) {
    lo = std::min(lo, d.lambda);
    hi = std::max(hi, d.lambda);
  }
  const bool a_ok = a.tr.stop == StopReason::horizon && hi <= 2 * l0 && lo >= 0.5 * l0;
  const double b0 = b.tr.rows.front().lambda, b1 = b.tr.rows.back().lambda;
  const bool b_ok = b.tr.stop == StopReason::lambda_cap && b1 > 10 * b0;
  return {a_ok && b_ok,
          fmt("[empirical, not a proof] A: lambda in [%.4f, %.4f] x initial to t=%.2f (%s); "
              "B: lambda %.3f -> %.3f (%.2fx) at t=%.5f, stop=%s, band fraction %.5f; runs %.0fs/%.0fs",
              lo / l0, hi / l0, a.tr.rows.back().t, to_string(a.tr.stop).c_str(), b0, b1, b1 / b0,
              b.tr.rows.back().t, to_string(b.tr.stop).c_str(),
              b.tr.rows.back().dealias_fraction_energy, a.seconds, b.seconds)};
}

// ---------------------------------------------------------------- 9
Outcome substep_invariants() {
  const PresetRun& b = preset_b();
  if (!b.error.empty()) return {false, "preset run failed: " + b.error};
  // Also the RK4 coupling stepper over the first 100 steps of the preset.
  StepperConfig cfg = b.cfg.stepper(1.0);
  cfg.nonlinear = NonlinearSolver::rk4;
  cfg.lambda_cap = INFINITY;
  SystemState s = build_initial_state(b.cfg);
  double rk = 0.0;
  for (int k = 0; k < 100; ++k) {
    StepReport rep;
    s = step(s, cfg, cfg.dt, &rep);
    rk = std::max({rk, rep.density_drift, rep.coupling_drift});
  }
  const double ex = std::max(b.tr.max_density_drift, b.tr.max_coupling_drift);
  return {ex < 1e-11 && rk < 1e-11,
          fmt("preset B, %zu steps: density drift %.2e, Im(E1 conj E2) drift %.2e; RK4 substeps "
              "(100 steps): %.2e",
              b.tr.steps, b.tr.max_density_drift, b.tr.max_coupling_drift, rk)};
}

// ---------------------------------------------------------------- 10
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t* files, std::string* diff) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  std::size_t nb = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) nb += e.is_regular_file() ? 1 : 0;
  if (nb != rel.size()) {
    *diff = "file count differs";
    return false;
  }
  for (const auto& r : rel) {
    if (!fs::exists(b / r) || slurp(a / r) != slurp(b / r)) {
      *diff = r.string();
      return false;
    }
  }
  *files = rel.size();
  return true;
}

Outcome determinism() {
  const std::string cli = MZK_CLI_PATH;
  const std::string preset = std::string(MZK_PRESET_DIR) + "/preset_a.cfg";
  std::size_t total = 0;
  for (const char* threads : {"1", "4"}) {
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = scratch() / fmt("det_%s_%d", threads, rep);
      const std::string cmd = std::string("MZK_THREADS=") + threads + " '" + cli +
                              "' simulate --config '" + preset + "' --out '" + out.string() +
                              "/sim' > /dev/null && MZK_THREADS=" + threads + " '" + cli +
                              "' selfsimilar --omega 400 --T 400 --grid 128,128,24 --times "
                              "0:260:12 --out '" + out.string() + "/ss' > /dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
    }
  }
  const fs::path base = scratch() / "det_1_0";
  for (const char* other : {"det_1_1", "det_4_0", "det_4_1"}) {
    std::size_t files = 0;
    std::string diff;
    if (!same_tree(base, scratch() / other, &files, &diff)) {
      return {false, std::string("outputs differ between det_1_0 and ") + other + ": " + diff};
    }
    total = files;
  }
  return {total > 0, fmt("preset A simulate + selfsimilar, MZK_THREADS=1,1,4,4: %zu files "
                         "byte-identical across all four runs",
                         total)};
}

}  // namespace

int main() {
  using Fn = std::function<Outcome()>;
  const std::vector<std::pair<const char*, Fn>> criteria = {
      {"ground-state fidelity", ground_state_fidelity},
      {"Gagliardo-Nirenberg", gagliardo_nirenberg},
      {"conservation", conservation},
      {"exact-solution tracking", exact_solutions},
      {"self-similar sharpness", selfsimilar_sharpness},
      {"residual decay", residual_decay},
      {"rescaling identities", rescaling_identities},
      {"dichotomy behavior", dichotomy},
      {"substep invariants", substep_invariants},
      {"determinism", determinism},
  };
  // The oracle run guards the frozen constants above.
  const auto o = oracle::shooting_oracle();
  if (std::abs(o.q0 - kOracleQ0) > 1e-9) {
    std::printf("oracle drifted: Q0 = %.13f\n", o.q0);
    return 1;
  }
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome r;
    try {
      r = criteria[k].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += r.pass ? 0 : 1;
    std::printf("CRITERION %2zu %s  %-24s %s\n", k + 1, r.pass ? "PASS" : "FAIL", criteria[k].first,
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
