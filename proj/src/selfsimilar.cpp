#include "mzk/selfsimilar.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mzk/spectral.hpp"

namespace mzk {

namespace {

const TailModel kTailP = TailModel::k0(1.0);
const TailModel kTailN = TailModel::k0(2.0);  // N and P^2 decay like K0^2

double inv_omega_sq(double omega) { return std::isinf(omega) ? 0.0 : 1.0 / (omega * omega); }

// Weights of one stencil row after folding in the parity reflection at r = 0
// and the tail ghosts past r_max. Entries with equal columns are not merged.
struct Row {
  std::size_t col[7];
  double d1[7];
  double d2[7];
};

Row stencil_row(std::size_t i, std::size_t M, double h, const TailModel& tail) {
  Row row{};
  for (int k = -3; k <= 3; ++k) {
    const long j = static_cast<long>(i) + k;
    double factor = 1.0;
    std::size_t c;
    if (j < 0) {
      c = static_cast<std::size_t>(-j);
    } else if (j > static_cast<long>(M)) {
      c = M;
      factor = tail.ratio(static_cast<double>(M) * h, static_cast<double>(j) * h);
    } else {
      c = static_cast<std::size_t>(j);
    }
    row.col[k + 3] = c;
    row.d1[k + 3] = i == 0 ? 0.0 : factor * radial::kD1[k + 3] / h;
    row.d2[k + 3] = factor * radial::kD2[k + 3] / (h * h);
  }
  return row;
}

// Laplacian weight of stencil entry q in row i.
double lap_weight(const Row& row, int q, std::size_t i, double h) {
  if (i == 0) return 2.0 * row.d2[q];
  return row.d2[q] + row.d1[q] / (static_cast<double>(i) * h);
}

struct Residuals {
  std::vector<double> f1, f2;
  double max1 = 0.0, max2 = 0.0;
};

Residuals evaluate_residuals(const std::vector<double>& P, const std::vector<double>& N, double h,
                             double omega, double eta) {
  const std::size_t M = P.size() - 1;
  const double a = eta / (eta + 1.0), b = 1.0 / (eta + 1.0), w = inv_omega_sq(omega);
  std::vector<double> P2(P.size());
  for (std::size_t i = 0; i <= M; ++i) P2[i] = P[i] * P[i];
  Residuals r;
  r.f1.resize(M + 1);
  r.f2.resize(M + 1);
  for (std::size_t i = 0; i <= M; ++i) {
    const Row rp = stencil_row(i, M, h, kTailP);
    const Row rn = stencil_row(i, M, h, kTailN);
    const double ri = static_cast<double>(i) * h;
    double lapP = 0.0, lapN = 0.0, lapP2 = 0.0, dN = 0.0, ddN = 0.0;
    for (int q = 0; q < 7; ++q) {
      lapP += lap_weight(rp, q, i, h) * P[rp.col[q]];
      const double ln = lap_weight(rn, q, i, h);
      lapN += ln * N[rn.col[q]];
      lapP2 += ln * P2[rn.col[q]];
      dN += rn.d1[q] * N[rn.col[q]];
      ddN += rn.d2[q] * N[rn.col[q]];
    }
    r.f1[i] = lapP - P[i] + a * P[i] * P2[i] - b * N[i] * P[i];
    r.f2[i] = w * (ri * ri * ddN + 6.0 * ri * dN + 6.0 * N[i]) - lapN - lapP2;
    r.max1 = std::max(r.max1, std::abs(r.f1[i]));
    r.max2 = std::max(r.max2, std::abs(r.f2[i]));
  }
  return r;
}

// Banded Jacobian on the interleaved unknowns (P_0, N_0, P_1, N_1, ...).
class Banded {
 public:
  static constexpr int kl = 7;
  static constexpr int ku = 7;
  static constexpr int ld = 2 * kl + ku + 1;

  explicit Banded(std::size_t n) : n_(n), ab_(static_cast<std::size_t>(ld) * n, 0.0) {}

  void add(std::size_t row, std::size_t col, double v) {
    ab_[static_cast<std::size_t>(kl + ku + static_cast<long>(row) - static_cast<long>(col)) +
        col * ld] += v;
  }

  // Solves in place; returns the LAPACK info code.
  int solve(std::vector<double>& rhs) {
    std::vector<lapack_int> ipiv(n_);
    return LAPACKE_dgbsv(LAPACK_COL_MAJOR, static_cast<lapack_int>(n_), kl, ku, 1, ab_.data(), ld,
                         ipiv.data(), rhs.data(), static_cast<lapack_int>(n_));
  }

 private:
  std::size_t n_;
  std::vector<double> ab_;
};

Banded jacobian(const std::vector<double>& P, const std::vector<double>& N, double h,
                double omega, double eta) {
  const std::size_t M = P.size() - 1;
  const double a = eta / (eta + 1.0), b = 1.0 / (eta + 1.0), w = inv_omega_sq(omega);
  Banded J(2 * (M + 1));
  for (std::size_t i = 0; i <= M; ++i) {
    const Row rp = stencil_row(i, M, h, kTailP);
    const Row rn = stencil_row(i, M, h, kTailN);
    const double ri = static_cast<double>(i) * h;
    const std::size_t r1 = 2 * i, r2 = 2 * i + 1;
    for (int q = 0; q < 7; ++q) {
      J.add(r1, 2 * rp.col[q], lap_weight(rp, q, i, h));
      const double ln = lap_weight(rn, q, i, h);
      J.add(r2, 2 * rn.col[q] + 1, w * (ri * ri * rn.d2[q] + 6.0 * ri * rn.d1[q]) - ln);
      J.add(r2, 2 * rn.col[q], -ln * 2.0 * P[rn.col[q]]);
    }
    J.add(r1, 2 * i, -1.0 + 3.0 * a * P[i] * P[i] - b * N[i]);
    J.add(r1, 2 * i + 1, -b * P[i]);
    J.add(r2, 2 * i + 1, 6.0 * w);
  }
  return J;
}

ProfilePair make_pair(const std::vector<double>& r, std::vector<double> P, std::vector<double> N,
                      double omega, double eta, const Residuals& res, int iterations) {
  ProfilePair out;
  out.P = RadialProfile::from_samples(r, std::move(P), kTailP);
  out.N = RadialProfile::from_samples(r, std::move(N), kTailN);
  out.omega = omega;
  out.eta = eta;
  out.residual_norms = {res.max1, res.max2};
  out.iterations = iterations;
  return out;
}

double profile_norm_sq(const std::vector<double>& f, double h) {
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) g[i] = f[i] * f[i];
  return radial::integral_2d(g, h);
}

}  // namespace

ProfilePair limit_profile(const RadialProfile& Q, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive");
  std::vector<double> n(Q.size()), dn(Q.size());
  for (std::size_t i = 0; i < Q.size(); ++i) {
    n[i] = -Q.values[i] * Q.values[i];
    dn[i] = -2.0 * Q.values[i] * Q.derivs[i];
  }
  ProfilePair out;
  out.P = Q;
  out.N = RadialProfile::from_samples(Q.r, std::move(n), kTailN, std::move(dn));
  out.eta = eta;
  out.residual_norms = profile_residuals(out.P.values, out.N.values, Q.h(), out.omega, eta);
  return out;
}

std::array<double, 2> profile_residuals(const std::vector<double>& P, const std::vector<double>& N,
                                        double h, double omega, double eta) {
  if (P.size() != N.size() || P.size() < 8) {
    throw ContractError("profile arrays must match and hold at least 8 samples");
  }
  const Residuals r = evaluate_residuals(P, N, h, omega, eta);
  return {r.max1, r.max2};
}

ProfilePair solve_profile(double omega, double eta, const RadialProfile& Q, double tol) {
  if (!(omega > 0.0)) throw DomainError("omega must be positive");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("eta must be positive");
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  if (Q.size() < 8) throw ContractError("seed profile has too few samples");

  const double h = Q.h();
  const std::size_t M = Q.size() - 1;
  std::vector<double> P = Q.values, N(Q.size());
  for (std::size_t i = 0; i <= M; ++i) N[i] = -P[i] * P[i];
  Residuals res = evaluate_residuals(P, N, h, omega, eta);

  if (!std::isinf(omega) && omega <= Q.r_max) {
    std::ostringstream msg;
    msg << "profile equations are singular at r = omega = " << omega
        << " inside the domain [0, " << Q.r_max << "]; small-omega profiles are unresolved";
    throw ProfileSolveFailure(msg.str(), make_pair(Q.r, P, N, omega, eta, res, 0));
  }

  constexpr int kMaxIterations = 50;
  int it = 0;
  while (std::max(res.max1, res.max2) >= tol) {
    if (it == kMaxIterations) {
      throw ProfileSolveFailure("profile Newton iteration did not converge",
                                make_pair(Q.r, P, N, omega, eta, res, it));
    }
    ++it;
    Banded J = jacobian(P, N, h, omega, eta);
    std::vector<double> delta(2 * (M + 1));
    for (std::size_t i = 0; i <= M; ++i) {
      delta[2 * i] = -res.f1[i];
      delta[2 * i + 1] = -res.f2[i];
    }
    if (J.solve(delta) != 0) {
      throw ProfileSolveFailure("profile Jacobian is singular",
                                make_pair(Q.r, P, N, omega, eta, res, it));
    }
    // Backtracking on the max-norm defect.
    const double current = std::max(res.max1, res.max2);
    bool accepted = false;
    for (double step = 1.0; step > 1e-4; step *= 0.5) {
      std::vector<double> P2 = P, N2 = N;
      for (std::size_t i = 0; i <= M; ++i) {
        P2[i] += step * delta[2 * i];
        N2[i] += step * delta[2 * i + 1];
      }
      Residuals trial = evaluate_residuals(P2, N2, h, omega, eta);
      if (std::max(trial.max1, trial.max2) < current) {
        P = std::move(P2);
        N = std::move(N2);
        res = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "profile iteration stagnated at defect " << current << " (tol " << tol << ")";
      throw ProfileSolveFailure(msg.str(), make_pair(Q.r, P, N, omega, eta, res, it));
    }
  }

  for (std::size_t i = 0; i < M; ++i) {
    if (!(P[i] > 0.0)) {
      throw ProfileSolveFailure("solved P is not positive",
                                make_pair(Q.r, P, N, omega, eta, res, it));
    }
  }
  return make_pair(Q.r, std::move(P), std::move(N), omega, eta, res, it);
}

void ExplicitSolution::validate() const {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("omega must be positive and finite");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("blow-up time T must be positive");
  if (!std::isfinite(theta)) throw DomainError("theta must be finite");
  if (!std::isinf(profile.omega) && std::abs(profile.omega - omega) > 1e-12 * omega) {
    throw DomainError("profile was solved for a different omega");
  }
  if (profile.P.size() < 8 || profile.N.size() != profile.P.size()) {
    throw ContractError("explicit solution needs a sampled profile pair");
  }
}

SystemState evaluate(const ExplicitSolution& sol, double t, const Grid2D& grid,
                     std::string* warning) {
  sol.validate();
  if (!(t < sol.T)) throw DomainError("the explicit family is defined only for t < T");
  const double tau = sol.T - t;
  const double w = sol.omega, scale = w / tau;
  const double eta = sol.profile.eta;
  const double pnorm = 1.0 / std::sqrt(eta + 1.0), nnorm = 1.0 / (eta + 1.0);
  const double c = 0.5 * grid.L;

  if (warning) {
    warning->clear();
    const double width = tau / w;
    std::ostringstream msg;
    if (width < 4.0 * std::max(grid.dx(), grid.dy())) {
      msg << "profile width " << width << " is under-resolved by grid spacing " << grid.dx();
    } else if (sol.profile.P.r_max * width > 0.5 * grid.L) {
      msg << "profile support " << sol.profile.P.r_max * width << " exceeds half the box "
          << 0.5 * grid.L;
    }
    *warning = msg.str();
  }

  SystemState s(grid, t);
  RealField2D nt(grid);
  const cplx I{0.0, 1.0};
  parallel_for(grid.nx, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double dx = wrapped_offset(grid.x(i), c, grid.L);
      for (std::size_t j = 0; j < grid.ny; ++j) {
        const double dy = wrapped_offset(grid.y(j), c, grid.L);
        const double r2 = dx * dx + dy * dy;
        const double y = scale * std::sqrt(r2);
        const double p = pnorm * sol.profile.P.value_at(y);
        const double nv = nnorm * sol.profile.N.value_at(y);
        const double dn = nnorm * sol.profile.N.deriv_at(y);
        const double phase = sol.theta - r2 / (4.0 * tau) + w * w / tau;
        s.e1(i, j) = scale * std::polar(1.0, phase) * p / std::sqrt(2.0);
        s.e2(i, j) = -I * s.e1(i, j);
        s.n(i, j) = scale * scale * nv;
        nt(i, j) = w * w / (tau * tau * tau) * (2.0 * nv + y * dn);
      }
    }
  });
  s.v = spectral::solve_divergence(nt);
  return s;
}

double predicted_grad_norm(const ExplicitSolution& sol, double tau) {
  const auto& P = sol.profile.P;
  const double eta = sol.profile.eta, w = sol.omega;
  std::vector<double> dp2(P.size()), yp2(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) {
    dp2[i] = P.derivs[i] * P.derivs[i] / (eta + 1.0);
    yp2[i] = P.r[i] * P.r[i] * P.values[i] * P.values[i] / (eta + 1.0);
  }
  const double grad = radial::integral_2d(dp2, P.h());
  const double moment = radial::integral_2d(yp2, P.h());
  return std::sqrt(0.5 * w * w * grad + tau * tau * moment / (8.0 * w * w));
}

ScalingReport scaling_check(const ExplicitSolution& sol, const std::vector<double>& times,
                            const Grid2D& grid) {
  sol.validate();
  if (times.empty()) throw DomainError("scaling_check needs at least one time");
  ScalingReport rep;
  for (double t : times) {
    std::string warn;
    const SystemState s = evaluate(sol, t, grid, &warn);
    if (!warn.empty()) rep.warnings.push_back("t = " + std::to_string(t) + ": " + warn);
    const double tau = sol.T - t;
    ScalingRow row;
    row.t = t;
    row.grad_e1 = tau * std::sqrt(gradient_norm_sq(s.e1));
    row.grad_e2 = tau * std::sqrt(gradient_norm_sq(s.e2));
    row.n = tau * std::sqrt(l2_norm_sq(s.n));
    row.v = tau * std::sqrt(l2_norm_sq(s.v));
    if (row.grad_e2 > 0.0) {
      rep.grad_ratio_defect = std::max(rep.grad_ratio_defect, std::abs(row.grad_e1 / row.grad_e2 - 1.0));
    }
    rep.rows.push_back(row);
  }
  for (int col = 0; col < 4; ++col) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rep.rows) {
      const double v = col == 0 ? r.grad_e1 : col == 1 ? r.grad_e2 : col == 2 ? r.n : r.v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    rep.spread[col] = lo > 0.0 ? hi / lo - 1.0 : 0.0;
  }

  for (auto& r : rep.rows) r.predicted_grad_e = predicted_grad_norm(sol, sol.T - r.t);
  rep.predicted_n =
      sol.omega * std::sqrt(profile_norm_sq(sol.profile.N.values, sol.profile.N.h())) /
      (sol.profile.eta + 1.0);
  return rep;
}

}  // namespace mzk
