#include "mzk/cli.hpp"

#include <fftw3.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "mzk/analysis.hpp"
#include "mzk/checkpoint.hpp"
#include "mzk/config.hpp"
#include "mzk/dynamics.hpp"
#include "mzk/groundstate.hpp"
#include "mzk/rescale.hpp"
#include "mzk/selfsimilar.hpp"
#include "mzk/spectral.hpp"

namespace mzk::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
    out_.open(path, std::ios::binary);
    if (!out_) throw IoError("cannot write " + path.string());
    row_strings(header);
  }
  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    s.reserve(values.size());
    for (double v : values) s.push_back(num(v));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& values) {
    for (std::size_t k = 0; k < values.size(); ++k) out_ << (k ? "," : "") << values[k];
    out_ << '\n';
    if (!out_) throw IoError("write failed on " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  return dir;
}

// Collects what a subcommand wrote so the manifest can list it.
struct Outputs {
  fs::path dir;
  std::vector<std::string> files;
  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

void write_manifest(Outputs& o, const std::string& sub, const json& arguments,
                    const json& config = json()) {
  json m;
  m["tool"] = "mzk";
  m["version"] = kVersion;
  m["fftw"] = std::string(fftw_version);
  m["subcommand"] = sub;
  m["arguments"] = arguments;
  if (!config.is_null()) m["config"] = config;
  std::vector<std::string> files = o.files;
  files.push_back("manifest.json");
  m["outputs"] = files;
  write_json(o.dir / "manifest.json", m);
}

json pohozaev_json(const PohozaevDefects& p) {
  return json{{"mass_identity", p.mass_identity},
              {"gradient_identity", p.gradient_identity},
              {"degenerate", p.degenerate}};
}

json fit_json(const RateFit& f) {
  return json{{"c", f.c},
              {"T_est", f.T_est},
              {"exponent", f.exponent},
              {"rms_log_residual", f.rms_log_residual},
              {"samples_used", f.samples_used}};
}

json verdict_json(const LowerBoundVerdict& v) {
  json j{{"verdict", to_string(v.verdict)},
         {"norm", to_string(v.which)},
         {"exponent_tolerance", v.tolerance},
         {"message", v.message}};
  j["normalized_constant"] = v.normalized_constant ? json(*v.normalized_constant) : json();
  return j;
}

json classification_json(const Classification& c) {
  return json{{"mass", c.mass},
              {"window_lower", c.window.lower},
              {"window_upper", c.window.upper},
              {"in_window", c.in_window},
              {"hamiltonian", c.hamiltonian},
              {"negative_energy", c.negative_energy},
              {"radial", c.radial},
              {"note", c.note}};
}

// "a:b:n" (n evenly spaced values, ends included) or "t1,t2,...".
std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  auto to_d = [&](const std::string& tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size() || !std::isfinite(v)) {
      throw ConfigError(std::string(what) + ": malformed number '" + tok + "'");
    }
    return v;
  };
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 3) throw ConfigError(std::string(what) + ": expected a:b:n");
    const double a = to_d(parts[0]), b = to_d(parts[1]);
    const double nd = to_d(parts[2]);
    if (nd < 2 || nd != std::floor(nd)) throw ConfigError(std::string(what) + ": n must be >= 2");
    const int n = static_cast<int>(nd);
    for (int k = 0; k < n; ++k) out.push_back(a + (b - a) * k / (n - 1));
    return out;
  }
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) out.push_back(to_d(tok));
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

Grid2D parse_grid(const std::string& s) {
  const auto v = parse_list(s, "--grid");
  if (v.size() != 3) throw ConfigError("--grid: expected nx,ny,L");
  if (v[0] < 4 || v[1] < 4 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
    throw ConfigError("--grid: nx and ny must be integers >= 4");
  }
  return Grid2D::make(static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), v[2]);
}

json entries_json(const RunConfig& cfg) {
  json c = json::object();
  for (const auto& [k, v] : cfg.entries) c[k] = v;
  return c;
}

// Subcommands. Each receives the parsed flags and returns after writing
// its outputs; errors propagate as mzk::Error.

int ground_state(double rmax, int npoints, double tol, const fs::path& dir, std::ostream& out) {
  Outputs o{prepare_dir(dir), {}};
  const GroundState q = solve_Q(rmax, npoints, tol);
  const PohozaevDefects p = pohozaev_check(q.profile);
  {
    CsvWriter csv(o.add("ground_state.csv"), {"r", "Q"});
    for (std::size_t i = 0; i < q.profile.size(); ++i) {
      csv.row({q.profile.r[i], q.profile.values[i]});
    }
  }
  json s{{"Q0", q.q0},
         {"mass", q.mass},
         {"grad_norm_sq", q.grad_norm_sq},
         {"quartic", q.quartic},
         {"ode_residual", q.ode_residual},
         {"tail_amplitude", q.tail_amplitude},
         {"pohozaev_defects", pohozaev_json(p)}};
  write_json(o.add("ground_state.json"), s);
  write_manifest(o, "ground-state", {{"rmax", rmax}, {"npoints", npoints}, {"tol", tol}});
  out << s.dump(2) << '\n';
  return 0;
}

double max_boundary_fraction(const SystemState& s) {
  return std::max(boundary_mass_fraction(s.e1), boundary_mass_fraction(s.e2));
}

int simulate(const fs::path& config_path, const std::string& out_override, std::ostream& out,
             std::ostream& err) {
  const RunConfig cfg = load_config(config_path);
  const fs::path dir = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  Outputs o{prepare_dir(dir), {}};
  const SystemState init = build_initial_state(cfg, config_path.parent_path());
  const double lambda0 = scale_parameter(init);
  const StepperConfig sc = cfg.stepper(lambda0);
  const GroundState q = solve_Q();

  std::vector<std::string> warnings;
  const double edge = max_boundary_fraction(init);
  if (edge > 1e-10) {
    warnings.push_back("initial |E|^2 within L/4 of the box edge is " + num(edge) +
                       " of the total; enlarge L");
  }

  const fs::path ckdir = dir / "checkpoints";
  fs::remove_all(ckdir);
  RunOptions ro;
  ro.checkpoint_dir = ckdir;
  ro.checkpoint_interval = cfg.checkpoint_interval;
  ro.max_steps = cfg.max_steps;
  const Trajectory tr = run(init, sc, cfg.horizon, ro);
  write_diagnostics_csv(o.add("diagnostics.csv"), tr.rows);
  for (const auto& p : tr.checkpoints) o.files.push_back("checkpoints/" + p.filename().string());

  const Diagnostics& first = tr.rows.front();
  const Diagnostics& last = tr.rows.back();
  const Classification cls = classify_initial_data(init, cfg.eta, q.mass, cfg.radial);
  const RatioSeries ratio = sobolev_ratio_monitor(tr.rows);
  auto rel = [](double a, double b) { return b != 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a); };
  double max_mass_drift = 0.0, max_h_drift = 0.0;
  for (const auto& d : tr.rows) {
    max_mass_drift = std::max(max_mass_drift, rel(d.mass, first.mass));
    max_h_drift = std::max(max_h_drift, rel(d.hamiltonian, first.hamiltonian));
  }
  json s;
  s["stop"] = to_string(tr.stop);
  s["steps"] = tr.steps;
  s["t_final"] = last.t;
  s["lambda0"] = first.lambda;
  s["lambda_final"] = last.lambda;
  s["lambda_ratio"] = first.lambda > 0.0 ? last.lambda / first.lambda : 0.0;
  s["lambda_cap"] = std::isfinite(sc.lambda_cap) ? json(sc.lambda_cap) : json();
  s["band_fraction_final"] = last.dealias_fraction_energy;
  s["max_mass_drift"] = max_mass_drift;
  s["max_hamiltonian_drift"] = max_h_drift;
  s["max_density_drift"] = tr.max_density_drift;
  s["max_coupling_drift"] = tr.max_coupling_drift;
  s["classification"] = classification_json(cls);
  s["ratio_tail_min"] = ratio.tail_min ? json(*ratio.tail_min) : json();
  s["ratio_tail_max"] = ratio.tail_max ? json(*ratio.tail_max) : json();
  s["label"] = "empirical consistency check on a periodic grid, not a proof";
  s["warnings"] = warnings;
  write_json(o.add("summary.json"), s);
  write_manifest(o, "simulate", {{"config", config_path.filename().string()}}, entries_json(cfg));
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  out << s.dump(2) << '\n';
  return 0;
}

int selfsimilar(double omega, double eta, double T, double theta, const std::string& grid_s,
                const std::string& times_s, const std::string& profile, const fs::path& dir,
                std::ostream& out) {
  Outputs o{prepare_dir(dir), {}};
  const Grid2D g = parse_grid(grid_s);
  const std::vector<double> times = parse_list(times_s, "--times");
  if (!(omega > 0.0)) throw DomainError("--omega must be positive");
  const GroundState q = solve_Q();
  ExplicitSolution sol;
  sol.profile = profile == "solved" ? solve_profile(omega, eta, q.profile)
                                    : limit_profile(q.profile, eta);
  sol.omega = omega;
  sol.T = T;
  sol.theta = theta;
  sol.validate();
  const ScalingReport rep = scaling_check(sol, times, g);
  std::vector<double> ts, ns;
  {
    CsvWriter csv(o.add("scaling.csv"), {"t", "grad_e1", "grad_e2", "n", "v", "predicted_grad_e"});
    for (const auto& r : rep.rows) {
      csv.row({r.t, r.grad_e1, r.grad_e2, r.n, r.v, r.predicted_grad_e});
      ts.push_back(r.t);
      ns.push_back(r.n / (T - r.t));
    }
  }
  FitOptions fo;
  fo.tail_fraction = 1.0;
  const RateAssessment a = assess_rate(ts, ns, RateModel::free_exponent, NormKind::n_norm,
                                       std::nullopt, fo);
  const double tol = 1e-5;
  const bool constant = rep.spread[0] < tol && rep.spread[1] < tol && rep.spread[2] < tol;
  const bool fit_ok = a.fit && std::abs(a.fit->exponent - 1.0) <= 0.01 &&
                      std::abs(a.fit->T_est - T) <= 1e-3;
  json s;
  s["omega"] = omega;
  s["eta"] = eta;
  s["T"] = T;
  s["theta"] = theta;
  s["profile"] = profile;
  s["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"L", g.L}};
  s["spread"] = {{"grad_e1", rep.spread[0]}, {"grad_e2", rep.spread[1]},
                 {"n", rep.spread[2]}, {"v", rep.spread[3]}};
  s["grad_ratio_defect"] = rep.grad_ratio_defect;
  s["predicted_n"] = rep.predicted_n;
  s["fit"] = a.fit ? fit_json(*a.fit) : json();
  s["rate_verdict"] = verdict_json(a.verdict);
  s["spread_tolerance"] = tol;
  s["columns_constant"] = constant;
  s["fit_matches_T"] = fit_ok;
  s["verdict"] = constant && fit_ok ? "pass" : "fail";
  s["warnings"] = rep.warnings;
  write_json(o.add("selfsimilar.json"), s);
  write_manifest(o, "selfsimilar",
                 {{"omega", omega}, {"eta", eta}, {"T", T}, {"theta", theta}, {"grid", grid_s},
                  {"times", times_s}, {"profile", profile}});
  out << s.dump(2) << '\n';
  return 0;
}

int rescale_check(const fs::path& ckdir, double eta, const fs::path& dir, std::ostream& out) {
  const std::vector<SystemState> snaps = checkpoint::read_directory(ckdir);
  if (snaps.empty()) throw IoError("no checkpoints in " + ckdir.string());
  Outputs o{prepare_dir(dir), {}};
  const std::vector<IdentityDefects> defects = identity_defects(snaps, eta);
  std::array<double, 4> worst{};
  {
    CsvWriter csv(o.add("rescale.csv"), {"t", "lambda", "identity_2_5_defect", "mass_defect",
                                         "hamiltonian_scaling_defect"});
    for (const auto& d : defects) {
      csv.row({d.t, d.lambda, d.normalization_defect, d.mass_defect, d.hamiltonian_scaling_defect});
      worst[0] = std::max(worst[0], d.normalization_defect);
      worst[1] = std::max(worst[1], d.mass_defect);
      worst[2] = std::max(worst[2], d.hamiltonian_scaling_defect);
      worst[3] = std::max(worst[3], d.hamiltonian_drift);
    }
  }
  const bool pass = worst[0] < 1e-10 && worst[1] < 1e-10 && worst[2] < 1e-8;
  json s{{"checkpoints", snaps.size()},
         {"max_normalization_defect", worst[0]},
         {"max_mass_defect", worst[1]},
         {"max_hamiltonian_scaling_defect", worst[2]},
         {"max_hamiltonian_drift", worst[3]},
         {"verdict", pass ? "pass" : "fail"}};
  write_json(o.add("rescale.json"), s);
  write_manifest(o, "rescale-check", {{"checkpoints", ckdir.filename().string()}, {"eta", eta}});
  out << s.dump(2) << '\n';
  return 0;
}

int fit_rate_cmd(const fs::path& csv, const std::string& norm, const std::string& model,
                 double tail, double eta, const fs::path& dir, std::ostream& out) {
  const std::vector<Diagnostics> rows = read_diagnostics_csv(csv);
  Outputs o{prepare_dir(dir), {}};
  const NormKind which = parse_norm_kind(norm);
  const RateModel m = parse_rate_model(model);
  std::vector<double> t;
  for (const auto& d : rows) t.push_back(d.t);
  const std::vector<double> y = norm_series(rows, which);
  std::optional<MassContext> ctx;
  if (eta > 0.0 && !rows.empty()) ctx = MassContext{rows.front().mass, eta, solve_Q().mass};
  FitOptions fo;
  fo.tail_fraction = tail;
  const RateAssessment a = assess_rate(t, y, m, which, ctx, fo);
  json s;
  if (a.fit) {
    s = fit_json(*a.fit);
  } else {
    s = json{{"c", nullptr}, {"T_est", nullptr}, {"exponent", nullptr}, {"rms_log_residual", nullptr}};
  }
  s["verdict"] = to_string(a.verdict.verdict);
  s["details"] = verdict_json(a.verdict);
  s["model"] = to_string(m);
  s["tail_fraction"] = tail;
  write_json(o.add("fit.json"), s);
  write_manifest(o, "fit-rate",
                 {{"diagnostics", csv.filename().string()}, {"norm", norm}, {"model", model},
                  {"tail", tail}, {"eta", eta}});
  out << s.dump(2) << '\n';
  return 0;
}

int gn_check_cmd(int count, std::uint64_t seed, int n, double L, const fs::path& dir,
                 std::ostream& out) {
  if (count < 1) throw DomainError("--count must be positive");
  Outputs o{prepare_dir(dir), {}};
  const GroundState q = solve_Q();
  const Grid2D g = Grid2D::make(static_cast<std::size_t>(n), static_cast<std::size_t>(n), L);
  bool all = true;
  double worst = 0.0;
  {
    CsvWriter csv(o.add("gn.csv"), {"index", "lhs", "rhs", "ratio", "holds"});
    for (int k = 0; k < count; ++k) {
      const GnResult r = gn_check(random_localized_field(g, seed + static_cast<std::uint64_t>(k)), q.mass);
      const double ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;
      worst = std::max(worst, ratio);
      all = all && r.holds;
      csv.row_strings({std::to_string(k), num(r.lhs), num(r.rhs), num(ratio), r.holds ? "1" : "0"});
    }
  }
  const RealField2D qs = sample_radial(q.profile, g, 0.5 * g.L, 0.5 * g.L);
  ComplexField2D qc(g);
  for (std::size_t k = 0; k < g.size(); ++k) qc[k] = qs[k];
  const GnResult eq = gn_check(qc, q.mass);
  const double eq_defect = std::abs(eq.lhs - eq.rhs) / eq.rhs;
  json s{{"count", count},
         {"seed", seed},
         {"all_hold", all},
         {"max_ratio", worst},
         {"equality_case", {{"lhs", eq.lhs}, {"rhs", eq.rhs}, {"relative_defect", eq_defect}}},
         {"verdict", all && eq_defect < 1e-4 ? "pass" : "fail"}};
  write_json(o.add("gn.json"), s);
  write_manifest(o, "gn-check", {{"count", count}, {"seed", seed}, {"n", n}, {"L", L}});
  out << s.dump(2) << '\n';
  return 0;
}

int classify_cmd(const fs::path& config_path, const std::string& out_override, std::ostream& out) {
  const RunConfig cfg = load_config(config_path);
  const fs::path dir = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
  Outputs o{prepare_dir(dir), {}};
  const SystemState init = build_initial_state(cfg, config_path.parent_path());
  const Classification c = classify_initial_data(init, cfg.eta, solve_Q().mass, cfg.radial);
  const json s = classification_json(c);
  write_json(o.add("classification.json"), s);
  write_manifest(o, "classify", {{"config", config_path.filename().string()}}, entries_json(cfg));
  out << s.dump(2) << '\n';
  return 0;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

std::string usage() {
  return "usage: mzk <subcommand> [flags]\n"
         "subcommands:\n"
         "  ground-state   --rmax R --npoints N --tol T --out DIR\n"
         "  simulate       --config FILE [--out DIR]\n"
         "  selfsimilar    --omega W --eta E --T T --theta TH --grid nx,ny,L --times a:b:n\n"
         "                 [--profile limit|solved] --out DIR\n"
         "  rescale-check  --checkpoints DIR --eta E --out DIR\n"
         "  fit-rate       --diagnostics CSV [--norm n_norm|grad_E|full_norm]\n"
         "                 [--model free_exponent|fixed_exponent_1] [--tail F] [--eta E] --out DIR\n"
         "  gn-check       [--count N] [--seed S] [--n N] [--L L] --out DIR\n"
         "  classify       --config FILE [--out DIR]\n"
         "run `mzk <subcommand> --help` for details\n";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return 2;
  }
  const std::string sub = args.front();
  if (sub == "--help" || sub == "-h" || sub == "help") {
    out << usage();
    return 0;
  }
  std::vector<std::string> rest(args.begin() + 1, args.end());
  std::reverse(rest.begin(), rest.end());  // CLI11 consumes vectors from the back

  CLI::App app("mzk " + sub, "mzk " + sub);
  std::string out_dir = "out", config, grid = "256,256,24", times = "0:0.5:10", profile = "limit",
              ckdir, csv, norm = "n_norm", model = "free_exponent";
  double rmax = 20.0, tol = 1e-12, omega = 400.0, eta = 1.0, T = 1.0, theta = 0.0, tail = 0.5,
         L = 40.0, fit_eta = 0.0;
  int npoints = 4000, count = 100, n = 128;
  std::uint64_t seed = 1;
  std::function<int()> action;

  if (sub == "ground-state") {
    app.add_option("--rmax", rmax, "truncation radius");
    app.add_option("--npoints", npoints, "radial samples");
    app.add_option("--tol", tol, "ODE tolerance");
    app.add_option("--out", out_dir, "output directory");
    action = [&] { return ground_state(rmax, npoints, tol, out_dir, out); };
  } else if (sub == "simulate" || sub == "classify") {
    app.add_option("--config", config, "run configuration")->required();
    auto* o = app.add_option("--out", out_dir, "output directory (default: output_dir)");
    action = [&, o] {
      const std::string over = o->count() ? out_dir : std::string();
      return sub == "simulate" ? simulate(config, over, out, err) : classify_cmd(config, over, out);
    };
  } else if (sub == "selfsimilar") {
    app.add_option("--omega", omega, "omega");
    app.add_option("--eta", eta, "coupling");
    app.add_option("--T", T, "blow-up time");
    app.add_option("--theta", theta, "phase");
    app.add_option("--grid", grid, "nx,ny,L");
    app.add_option("--times", times, "a:b:n or t1,t2,...");
    app.add_option("--profile", profile, "limit or solved")
        ->check(CLI::IsMember({"limit", "solved"}));
    app.add_option("--out", out_dir, "output directory");
    action = [&] {
      return selfsimilar(omega, eta, T, theta, grid, times, profile, out_dir, out);
    };
  } else if (sub == "rescale-check") {
    app.add_option("--checkpoints", ckdir, "checkpoint directory")->required();
    app.add_option("--eta", eta, "coupling");
    app.add_option("--out", out_dir, "output directory");
    action = [&] { return rescale_check(ckdir, eta, out_dir, out); };
  } else if (sub == "fit-rate") {
    app.add_option("--diagnostics", csv, "diagnostics CSV")->required();
    app.add_option("--norm", norm, "n_norm, grad_E or full_norm");
    app.add_option("--model", model, "free_exponent or fixed_exponent_1");
    app.add_option("--tail", tail, "fraction of samples used");
    app.add_option("--eta", fit_eta, "coupling; enables the mass-normalized constant");
    app.add_option("--out", out_dir, "output directory");
    action = [&] { return fit_rate_cmd(csv, norm, model, tail, fit_eta, out_dir, out); };
  } else if (sub == "gn-check") {
    app.add_option("--count", count, "number of random fields");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--n", n, "grid points per axis");
    app.add_option("--L", L, "box side");
    app.add_option("--out", out_dir, "output directory");
    action = [&] { return gn_check_cmd(count, seed, n, L, out_dir, out); };
  } else {
    err << "unknown subcommand '" << sub << "'\n" << usage();
    return 2;
  }

  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "usage_error", e.what());
    return 2;
  }
  try {
    return action();
  } catch (const Error& e) {
    error_json(err, e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    error_json(err, "internal_error", e.what());
    return 1;
  }
}

}  // namespace mzk::cli
