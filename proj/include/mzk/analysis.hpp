#pragma once

// Blow-up rate fitting y ~ c / (T - t)^p, lower-bound verdicts, classification
// of initial data against the mass window, and the grad E / n ratio monitor.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mzk/dynamics.hpp"
#include "mzk/groundstate.hpp"

namespace mzk {

enum class RateModel { fixed_exponent_1, free_exponent };

struct RateFit {
  double c = 0.0;
  double T_est = 0.0;
  double exponent = 1.0;
  double rms_log_residual = 0.0;
  std::size_t samples_used = 0;
};

struct FitOptions {
  double tail_fraction = 0.5;  // share of the samples (from the end) used in the fit
  std::size_t min_samples = 8;
  /// T_est - t_last beyond this many tail spans is treated as no blow-up.
  double max_extrapolation = 4.0;
  /// Fits with a larger rms log misfit are treated as no blow-up.
  double max_rms_log_residual = 0.05;
};

/// Least squares on log y = log c - p log(T - t). For each trial T the
/// linear parameters are solved exactly; T is then found by bisection on
/// the derivative of the reduced objective. Throws FitFailure with a
/// diagnostic when there are too few samples, non-positive values, a tail
/// that does not grow, no finite singular time minimizes the misfit, or a
/// singular time extrapolated too far past the data.
RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& y, RateModel model,
                 const FitOptions& opt = {});

enum class NormKind { grad_E, n_norm, full_norm };
enum class Verdict { pass, super_rate, fail, not_blowing_up };

std::string to_string(NormKind k);
std::string to_string(Verdict v);
std::string to_string(RateModel m);
NormKind parse_norm_kind(const std::string& s);
RateModel parse_rate_model(const std::string& s);

/// Series of the selected norm from diagnostics rows; full_norm is the
/// H1 x H1 x L2 x L2 norm sqrt(mass + |grad E|^2 + |n|^2 + |v|^2).
std::vector<double> norm_series(const std::vector<Diagnostics>& rows, NormKind which);

struct LowerBoundVerdict {
  Verdict verdict = Verdict::fail;
  NormKind which = NormKind::n_norm;
  double exponent = 0.0;
  double tolerance = 0.01;
  /// c * sqrt(mass - |Q|^2/(1+eta)) for grad_E and n_norm when the mass is
  /// above the lower threshold; reported only.
  std::optional<double> normalized_constant;
  std::string message;
};

struct MassContext {
  double mass = 0.0;
  double eta = 1.0;
  double q_mass = 0.0;
};

/// Exponent test p >= 1 - tolerance. p > 1 + tolerance passes and is flagged
/// super_rate.
LowerBoundVerdict check_lower_bound(const RateFit& fit, NormKind which,
                                    const std::optional<MassContext>& ctx = std::nullopt,
                                    double tolerance = 0.01);

struct RateAssessment {
  std::optional<RateFit> fit;
  LowerBoundVerdict verdict;
};

/// fit_rate followed by check_lower_bound; a FitFailure becomes the
/// not_blowing_up verdict with the failure text as message.
RateAssessment assess_rate(const std::vector<double>& t, const std::vector<double>& y,
                           RateModel model, NormKind which,
                           const std::optional<MassContext>& ctx = std::nullopt,
                           const FitOptions& opt = {}, double tolerance = 0.01);

struct Classification {
  double mass = 0.0;
  ThresholdWindow window;
  bool in_window = false;
  double hamiltonian = 0.0;
  bool negative_energy = false;
  bool radial = false;
  std::string note;
};

Classification classify_initial_data(const SystemState& s, double eta, double q_mass, bool radial);

struct RatioSeries {
  std::vector<std::pair<double, double>> samples;  // (t, |grad E| / |n|)
  std::size_t skipped = 0;                         // rows with |n| = 0
  std::optional<double> tail_min;                  // over the final quarter in time
  std::optional<double> tail_max;
};

RatioSeries sobolev_ratio_monitor(const std::vector<Diagnostics>& rows);

}  // namespace mzk
