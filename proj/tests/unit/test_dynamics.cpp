#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mzk/dynamics.hpp"
#include "mzk/spectral.hpp"

using namespace mzk;
using std::numbers::pi;

namespace {

SystemState plane_wave(const Grid2D& g, double t) {
  SystemState s(g, t);
  const double k = 2 * pi / g.L;
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) s.e1(i, j) = std::polar(1.0, k * g.x(i) - k * k * t);
  return s;
}

// Two offset Gaussians with independent E2, nonzero n and v.
SystemState generic(const Grid2D& g, double amp = 0.6) {
  SystemState s(g, 0.0);
  const double c = g.L / 2;
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double x = g.x(i) - c, y = g.y(j) - c;
      const double a = std::exp(-((x - 1) * (x - 1) + y * y) / 2.0);
      const double b = std::exp(-(x * x + (y + 0.5) * (y + 0.5)) / 1.5);
      s.e1(i, j) = amp * a * std::polar(1.0, 0.3 * x);
      s.e2(i, j) = amp * cplx(0.5, 0.4) * b;
      s.n(i, j) = -0.3 * a * b;
      s.v.x(i, j) = 0.1 * x * b;
      s.v.y(i, j) = -0.2 * y * a;
    }
  return s;
}

double max_diff(const ComplexField2D& a, const ComplexField2D& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.grid().size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

double max_diff(const RealField2D& a, const RealField2D& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.grid().size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST(Hamiltonian, ZeroState) {
  const ConservedQuantities c = hamiltonian(SystemState(Grid2D::make(16, 16, 5.0)), 1.0);
  EXPECT_EQ(c.mass, 0.0);
  EXPECT_EQ(c.hamiltonian, 0.0);
  EXPECT_EQ(c.grad_E_sq, 0.0);
  EXPECT_EQ(c.n_sq, 0.0);
  EXPECT_EQ(c.v_sq, 0.0);
  EXPECT_EQ(c.cross_term, 0.0);
  EXPECT_EQ(c.magnetic_term, 0.0);
}

TEST(Hamiltonian, DensityOnly) {
  const Grid2D g = Grid2D::make(32, 32, 10.0);
  SystemState s(g);
  for (std::size_t k = 0; k < g.size(); ++k) s.n[k] = std::sin(0.1 * k);
  EXPECT_NEAR(hamiltonian(s, 1.0).hamiltonian, 0.5 * l2_norm_sq(s.n), 1e-12);
}

TEST(Hamiltonian, MinusIReduction) {
  const Grid2D g = Grid2D::make(128, 128, 20.0);
  SystemState s = generic(g);
  s.n = RealField2D(g);
  s.v = VectorField2D(g);
  for (std::size_t k = 0; k < g.size(); ++k) s.e2[k] = cplx(0, -1) * s.e1[k];
  const double eta = 0.7;
  const double expect = 2 * gradient_norm_sq(s.e1) - 2 * eta * l4_norm_4(s.e1);
  EXPECT_NEAR(hamiltonian(s, eta).hamiltonian / expect, 1.0, 1e-10);
}

TEST(Hamiltonian, ComponentsReconstruct) {
  const ConservedQuantities c = hamiltonian(generic(Grid2D::make(64, 64, 16.0)), 1.3);
  const double sum = c.grad_E_sq + 0.5 * c.n_sq + 0.5 * c.v_sq + c.cross_term + c.magnetic_term;
  EXPECT_NEAR(sum, c.hamiltonian, 1e-12 * std::abs(c.hamiltonian));
}

TEST(Mass, Examples) {
  const Grid2D g = Grid2D::make(16, 16, 2 * pi);
  SystemState s(g);
  EXPECT_EQ(mass(s), 0.0);
  for (auto& z : s.e1.data()) z = 1.0;
  EXPECT_NEAR(mass(s), 4 * pi * pi, 1e-12);
  for (std::size_t k = 0; k < g.size(); ++k) s.e2[k] = cplx(0, -1) * s.e1[k];
  EXPECT_NEAR(mass(s), 2 * l2_norm_sq(s.e1), 1e-12);
}

TEST(Residual, ZeroState) {
  const Grid2D g = Grid2D::make(16, 16, 4.0);
  SystemState s(g);
  TimeDerivative d{ComplexField2D(g), ComplexField2D(g), RealField2D(g), VectorField2D(g)};
  const Residual r = residual(s, d, 1.0);
  for (double x : r.norms) EXPECT_EQ(x, 0.0);
}

TEST(Residual, PlaneWaveAnalytic) {
  const Grid2D g = Grid2D::make(32, 32, 2 * pi);
  const SystemState s = plane_wave(g, 0.3);
  TimeDerivative d{ComplexField2D(g), ComplexField2D(g), RealField2D(g), VectorField2D(g)};
  for (std::size_t k = 0; k < g.size(); ++k) d.e1[k] = cplx(0, -1) * s.e1[k];
  const Residual r = residual(s, d, 1.0);
  for (double x : r.norms) EXPECT_LT(x, 1e-12);
}

TEST(Residual, CenteredWindowChecks) {
  const Grid2D g = Grid2D::make(32, 32, 2 * pi);
  const double dl = 1e-4;
  const Residual r = residual(plane_wave(g, 0.3 - dl), plane_wave(g, 0.3), plane_wave(g, 0.3 + dl), 1.0);
  EXPECT_LT(r.relative_total(), 1e-7);
  EXPECT_THROW(residual(plane_wave(g, 0.1), plane_wave(g, 0.3), plane_wave(g, 0.35), 1.0),
               ContractError);
  EXPECT_THROW(residual(plane_wave(g, 0.2), plane_wave(g, 0.3),
                        plane_wave(Grid2D::make(16, 16, 2 * pi), 0.4), 1.0),
               ContractError);
}

TEST(Step, PlaneWaveHundredSteps) {
  const Grid2D g = Grid2D::make(16, 16, 2 * pi);
  StepperConfig cfg;
  cfg.dt = 0.01;
  SystemState s = plane_wave(g, 0.0);
  for (int k = 0; k < 100; ++k) s = step(s, cfg);
  EXPECT_LT(max_diff(s.e1, plane_wave(g, s.t).e1), 1e-10);
  EXPECT_LT(max_diff(s.n, RealField2D(g)), 1e-12);
}

TEST(Step, DAlembertMode) {
  const Grid2D g = Grid2D::make(16, 16, 2 * pi);
  SystemState s(g);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) s.n(i, j) = std::cos(g.x(i));
  StepperConfig cfg;
  cfg.dt = 0.05;
  for (int k = 0; k < 40; ++k) s = step(s, cfg);
  for (std::size_t i = 0; i < g.nx; ++i)
    for (std::size_t j = 0; j < g.ny; ++j) {
      EXPECT_NEAR(s.n(i, j), std::cos(g.x(i)) * std::cos(s.t), 1e-12);
      EXPECT_NEAR(s.v.x(i, j), std::sin(g.x(i)) * std::sin(s.t), 1e-12);
    }
}

TEST(Step, MassConservedAndSecondOrderEnergy) {
  const Grid2D g = Grid2D::make(64, 64, 16.0);
  const SystemState s0 = generic(g);
  const double m0 = mass(s0), h0 = hamiltonian(s0, 1.0).hamiltonian;
  auto drift = [&](double dt, int n) {
    StepperConfig cfg;
    cfg.dt = dt;
    SystemState s = s0;
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      s = step(s, cfg);
      EXPECT_NEAR(mass(s) / m0, 1.0, 1e-10);
      worst = std::max(worst, std::abs(hamiltonian(s, 1.0).hamiltonian - h0));
    }
    return worst;
  };
  const double a = drift(0.02, 50), b = drift(0.01, 100);
  EXPECT_GT(a / b, 3.5);
}

TEST(Step, LinearFlowReversible) {
  const SystemState s = generic(Grid2D::make(32, 32, 16.0));
  const SystemState r = linear_flow(linear_flow(s, 0.37), -0.37);
  EXPECT_LT(max_diff(r.e1, s.e1), 1e-13);
  EXPECT_LT(max_diff(r.e2, s.e2), 1e-13);
  EXPECT_LT(max_diff(r.n, s.n), 1e-13);
  EXPECT_LT(max_diff(r.v.x, s.v.x), 1e-13);
  EXPECT_LT(max_diff(r.v.y, s.v.y), 1e-13);
}

TEST(Step, PointwiseInvariantsOfCouplingFlow) {
  const SystemState s = generic(Grid2D::make(32, 32, 16.0), 2.0);
  for (NonlinearSolver solver : {NonlinearSolver::exact, NonlinearSolver::rk4}) {
    StepReport rep;
    nonlinear_flow(s, 0.01, 1.0, solver, 8, &rep);
    EXPECT_LT(rep.density_drift, 1e-11);
    EXPECT_LT(rep.coupling_drift, 1e-11);
  }
}

TEST(Step, RK4AgreesWithExactFlow) {
  const SystemState s = generic(Grid2D::make(32, 32, 16.0), 1.5);
  const SystemState a = nonlinear_flow(s, 0.01, 1.0, NonlinearSolver::exact);
  const SystemState b = nonlinear_flow(s, 0.01, 1.0, NonlinearSolver::rk4, 16);
  EXPECT_LT(max_diff(a.e1, b.e1), 1e-11);
  EXPECT_LT(max_diff(a.e2, b.e2), 1e-11);
}

TEST(Step, MinusIReductionKeepsComponentMasses) {
  const Grid2D g = Grid2D::make(64, 64, 16.0);
  SystemState s = generic(g);
  for (std::size_t k = 0; k < g.size(); ++k) s.e2[k] = cplx(0, -1) * s.e1[k];
  const double m1 = l2_norm_sq(s.e1), m2 = l2_norm_sq(s.e2);
  StepperConfig cfg;
  cfg.dt = 0.01;
  for (int k = 0; k < 50; ++k) s = step(s, cfg);
  EXPECT_NEAR(l2_norm_sq(s.e1) / m1, 1.0, 1e-12);
  EXPECT_NEAR(l2_norm_sq(s.e2) / m2, 1.0, 1e-12);
}

TEST(Step, Errors) {
  StepperConfig cfg;
  cfg.dt = -1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.dt = 0.1;
  cfg.substeps = 2;
  EXPECT_THROW(cfg.validate(), DomainError);
  SystemState s(Grid2D::make(8, 8, 1.0));
  s.e1[0] = cplx(INFINITY, 0.0);
  EXPECT_THROW(step(s, StepperConfig{}), InvalidFieldError);
}

TEST(Run, ZeroData) {
  StepperConfig cfg;
  cfg.dt = 0.1;
  const Trajectory tr = run(SystemState(Grid2D::make(16, 16, 4.0)), cfg, 1.0);
  EXPECT_EQ(tr.stop, StopReason::horizon);
  EXPECT_EQ(tr.rows.size(), 11u);
  for (const auto& d : tr.rows) {
    EXPECT_EQ(d.mass, 0.0);
    EXPECT_EQ(d.hamiltonian, 0.0);
    EXPECT_EQ(d.lambda, 0.0);
  }
  EXPECT_DOUBLE_EQ(tr.final_state.t, 1.0);
}

TEST(Run, LambdaCapStops) {
  StepperConfig cfg;
  cfg.dt = 0.01;
  cfg.lambda_cap = 1e-3;
  const Trajectory tr = run(generic(Grid2D::make(32, 32, 16.0)), cfg, 1.0);
  EXPECT_EQ(tr.stop, StopReason::lambda_cap);
  EXPECT_EQ(tr.steps, 1u);
}

TEST(Run, DriftToleranceRaises) {
  StepperConfig cfg;
  cfg.dt = 0.2;
  cfg.drift_tolerance = 1e-14;
  EXPECT_THROW(run(generic(Grid2D::make(32, 32, 16.0), 1.5), cfg, 2.0), AccuracyError);
}

TEST(Run, CheckpointsAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "mzk_test_run";
  std::filesystem::remove_all(dir);
  StepperConfig cfg;
  cfg.dt = 0.05;
  RunOptions opt;
  opt.checkpoint_dir = dir / "ck";
  opt.checkpoint_interval = 4;
  const Trajectory tr = run(generic(Grid2D::make(32, 32, 16.0)), cfg, 0.5, opt);
  EXPECT_EQ(tr.checkpoints.size(), 4u);  // steps 0, 4, 8 and the final 10
  write_diagnostics_csv(dir / "d.csv", tr.rows);
  const auto back = read_diagnostics_csv(dir / "d.csv");
  ASSERT_EQ(back.size(), tr.rows.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].t, tr.rows[k].t);
    EXPECT_EQ(back[k].hamiltonian, tr.rows[k].hamiltonian);
    EXPECT_EQ(back[k].lambda, tr.rows[k].lambda);
  }
  std::ofstream(dir / "bad.csv") << "t,dt\n1,2\n";
  EXPECT_THROW(read_diagnostics_csv(dir / "bad.csv"), IoError);
  std::filesystem::remove_all(dir);
}
