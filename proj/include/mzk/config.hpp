#pragma once

// Run configuration: flat `key = value` text, '#' comments, case-sensitive
// keys, duplicates rejected.
//
// Required: nx, ny, L, eta, dt, horizon, output_dir, initial_data.
// initial_data = gaussian     -> gaussian.amplitude, gaussian.width, optional
//                                gaussian.center_x/center_y (default L/2),
//                                gaussian.e2_mode = zero | minus_i_e1,
//                                gaussian.n0 = zero | minus_density
// initial_data = selfsimilar  -> selfsimilar.omega, selfsimilar.T, optional
//                                selfsimilar.theta, selfsimilar.t0,
//                                selfsimilar.profile = limit | solved
// initial_data = checkpoint   -> checkpoint.path
// Optional: dealias_fraction, adaptive, lambda_cap, lambda_cap_factor,
// drift_tolerance, checkpoint_interval, seed, nonlinear, substeps,
// band_threshold, radial, max_steps.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mzk/dynamics.hpp"
#include "mzk/fields.hpp"

namespace mzk {

enum class E2Mode { zero, minus_i_e1 };
enum class N0Mode { zero, minus_density };

struct GaussianSpec {
  double amplitude = 1.0;
  double width = 1.0;
  std::optional<double> center_x;
  std::optional<double> center_y;
  E2Mode e2_mode = E2Mode::zero;
  N0Mode n0 = N0Mode::zero;
};

struct SelfSimilarSpec {
  double omega = 1.0;
  double T = 1.0;
  double theta = 0.0;
  double t0 = 0.0;
  bool solved_profile = false;
};

struct CheckpointSpec {
  std::filesystem::path path;
};

using InitialData = std::variant<GaussianSpec, SelfSimilarSpec, CheckpointSpec>;

struct RunConfig {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double L = 0.0;
  double dealias_fraction = 2.0 / 3.0;
  double eta = 1.0;
  double dt = 0.0;
  double horizon = 0.0;
  bool adaptive = false;
  std::optional<double> lambda_cap;         // absolute
  std::optional<double> lambda_cap_factor;  // relative to lambda(0)
  double drift_tolerance = 0.0;             // 0: unchecked
  std::string output_dir;
  std::size_t checkpoint_interval = 0;
  std::uint64_t seed = 0;
  NonlinearSolver nonlinear = NonlinearSolver::exact;
  int substeps = 4;
  double band_threshold = 0.999;
  bool radial = false;
  std::size_t max_steps = 50'000'000;
  InitialData initial;

  /// Every key as written, in file order (for manifests).
  std::vector<std::pair<std::string, std::string>> entries;

  Grid2D grid() const;
  /// Stepper settings; lambda0 resolves lambda_cap_factor.
  StepperConfig stepper(double lambda0) const;
};

/// Throws ConfigError naming the key and line for unknown, duplicate,
/// missing or malformed keys, and for out-of-range values.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Initial state described by the config. Relative checkpoint paths are
/// resolved against `base_dir`.
SystemState build_initial_state(const RunConfig& cfg, const std::filesystem::path& base_dir = {});

std::string to_string(E2Mode m);
std::string to_string(N0Mode m);

}  // namespace mzk
