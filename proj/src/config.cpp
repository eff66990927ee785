#include "mzk/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mzk/checkpoint.hpp"
#include "mzk/groundstate.hpp"
#include "mzk/selfsimilar.hpp"

namespace mzk {
namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string origin)
      : entries_(std::move(entries)), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    std::string where = origin_;
    if (it != entries_.end()) where += ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": key '" + key + "': " + msg);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const std::string& raw(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    used_.insert(key);
    return it->second.value;
  }

  double real(const std::string& key) {
    const std::string& s = raw(key);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
      fail(key, "malformed number '" + s + "'");
    }
    return v;
  }

  double positive(const std::string& key) {
    const double v = real(key);
    if (!(v > 0.0)) fail(key, "must be positive, got " + raw(key));
    return v;
  }

  std::uint64_t integer(const std::string& key) {
    const std::string& s = raw(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail(key, "malformed non-negative integer '" + s + "'");
    }
    return v;
  }

  bool boolean(const std::string& key) {
    const std::string& s = raw(key);
    if (s == "true") return true;
    if (s == "false") return false;
    fail(key, "expected true or false, got '" + s + "'");
  }

  std::string choice(const std::string& key, std::initializer_list<const char*> options) {
    const std::string& s = raw(key);
    std::string list;
    for (const char* o : options) {
      if (s == o) return s;
      list += list.empty() ? o : std::string(", ") + o;
    }
    fail(key, "expected one of " + list + ", got '" + s + "'");
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_) {
      if (!used_.count(k)) {
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
      }
    }
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
  std::string origin_;
};

bool power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Grid2D RunConfig::grid() const { return Grid2D::make(nx, ny, L, dealias_fraction); }

StepperConfig RunConfig::stepper(double lambda0) const {
  StepperConfig c;
  c.dt = dt;
  c.eta = eta;
  c.adaptive = adaptive;
  if (lambda_cap) c.lambda_cap = *lambda_cap;
  if (lambda_cap_factor) c.lambda_cap = *lambda_cap_factor * lambda0;
  if (drift_tolerance > 0.0) c.drift_tolerance = drift_tolerance;
  c.nonlinear = nonlinear;
  c.substeps = substeps;
  c.band_threshold = band_threshold;
  c.validate();
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "': empty value");
    if (entries.count(key)) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(entries[key].line) + ")");
    }
    entries[key] = {value, number};
    cfg.entries.emplace_back(key, value);
  }

  Reader r(std::move(entries), origin);
  cfg.nx = r.integer("nx");
  if (!power_of_two(cfg.nx) || cfg.nx < 4) r.fail("nx", "must be a power of two >= 4");
  cfg.ny = r.integer("ny");
  if (!power_of_two(cfg.ny) || cfg.ny < 4) r.fail("ny", "must be a power of two >= 4");
  cfg.L = r.positive("L");
  cfg.eta = r.positive("eta");
  cfg.dt = r.positive("dt");
  cfg.horizon = r.positive("horizon");
  cfg.output_dir = r.raw("output_dir");

  if (r.has("dealias_fraction")) {
    cfg.dealias_fraction = r.real("dealias_fraction");
    if (!(cfg.dealias_fraction > 0.0 && cfg.dealias_fraction <= 1.0)) {
      r.fail("dealias_fraction", "must lie in (0, 1]");
    }
  }
  if (r.has("adaptive")) cfg.adaptive = r.boolean("adaptive");
  if (r.has("lambda_cap") && r.has("lambda_cap_factor")) {
    r.fail("lambda_cap_factor", "conflicts with lambda_cap; give one of them");
  }
  if (r.has("lambda_cap")) cfg.lambda_cap = r.positive("lambda_cap");
  if (r.has("lambda_cap_factor")) cfg.lambda_cap_factor = r.positive("lambda_cap_factor");
  if (r.has("drift_tolerance")) cfg.drift_tolerance = r.positive("drift_tolerance");
  if (r.has("checkpoint_interval")) cfg.checkpoint_interval = r.integer("checkpoint_interval");
  if (r.has("seed")) cfg.seed = r.integer("seed");
  if (r.has("nonlinear")) {
    cfg.nonlinear = r.choice("nonlinear", {"exact", "rk4"}) == "rk4" ? NonlinearSolver::rk4
                                                                      : NonlinearSolver::exact;
  }
  if (r.has("substeps")) {
    const auto s = r.integer("substeps");
    if (s < 4 || s > 1000) r.fail("substeps", "must lie in [4, 1000]");
    cfg.substeps = static_cast<int>(s);
  }
  if (r.has("band_threshold")) {
    cfg.band_threshold = r.real("band_threshold");
    if (!(cfg.band_threshold > 0.0 && cfg.band_threshold <= 1.0)) {
      r.fail("band_threshold", "must lie in (0, 1]");
    }
  }
  if (r.has("radial")) cfg.radial = r.boolean("radial");
  if (r.has("max_steps")) {
    cfg.max_steps = r.integer("max_steps");
    if (cfg.max_steps == 0) r.fail("max_steps", "must be positive");
  }

  const std::string kind = r.choice("initial_data", {"gaussian", "selfsimilar", "checkpoint"});
  if (kind == "gaussian") {
    GaussianSpec g;
    g.amplitude = r.real("gaussian.amplitude");
    g.width = r.positive("gaussian.width");
    if (r.has("gaussian.center_x")) g.center_x = r.real("gaussian.center_x");
    if (r.has("gaussian.center_y")) g.center_y = r.real("gaussian.center_y");
    if (r.has("gaussian.e2_mode")) {
      g.e2_mode = r.choice("gaussian.e2_mode", {"zero", "minus_i_e1"}) == "zero"
                      ? E2Mode::zero
                      : E2Mode::minus_i_e1;
    }
    if (r.has("gaussian.n0")) {
      g.n0 = r.choice("gaussian.n0", {"zero", "minus_density"}) == "zero" ? N0Mode::zero
                                                                          : N0Mode::minus_density;
    }
    cfg.initial = g;
  } else if (kind == "selfsimilar") {
    SelfSimilarSpec s;
    s.omega = r.positive("selfsimilar.omega");
    s.T = r.positive("selfsimilar.T");
    if (r.has("selfsimilar.theta")) s.theta = r.real("selfsimilar.theta");
    if (r.has("selfsimilar.t0")) {
      s.t0 = r.real("selfsimilar.t0");
      if (s.t0 < 0.0) r.fail("selfsimilar.t0", "must be non-negative");
    }
    if (!(s.t0 < s.T)) r.fail("selfsimilar.T", "must exceed selfsimilar.t0");
    if (r.has("selfsimilar.profile")) {
      s.solved_profile = r.choice("selfsimilar.profile", {"limit", "solved"}) == "solved";
    }
    cfg.initial = s;
  } else {
    cfg.initial = CheckpointSpec{r.raw("checkpoint.path")};
  }
  r.reject_unused();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

SystemState build_initial_state(const RunConfig& cfg, const std::filesystem::path& base_dir) {
  const Grid2D g = cfg.grid();
  if (const auto* gs = std::get_if<GaussianSpec>(&cfg.initial)) {
    SystemState s(g, 0.0);
    const double cx = gs->center_x.value_or(0.5 * g.L);
    const double cy = gs->center_y.value_or(0.5 * g.L);
    const double w2 = gs->width * gs->width;
    const cplx minus_i(0.0, -1.0);
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double dx = wrapped_offset(g.x(i), cx, g.L);
      for (std::size_t j = 0; j < g.ny; ++j) {
        const double dy = wrapped_offset(g.y(j), cy, g.L);
        const double e = gs->amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * w2));
        s.e1(i, j) = e;
        if (gs->e2_mode == E2Mode::minus_i_e1) s.e2(i, j) = minus_i * e;
        if (gs->n0 == N0Mode::minus_density) {
          s.n(i, j) = -(gs->e2_mode == E2Mode::minus_i_e1 ? 2.0 : 1.0) * e * e;
        }
      }
    }
    return s;
  }
  if (const auto* ss = std::get_if<SelfSimilarSpec>(&cfg.initial)) {
    const GroundState q = solve_Q();
    ExplicitSolution sol;
    sol.profile = ss->solved_profile ? solve_profile(ss->omega, cfg.eta, q.profile)
                                     : limit_profile(q.profile, cfg.eta);
    sol.omega = ss->omega;
    sol.T = ss->T;
    sol.theta = ss->theta;
    return evaluate(sol, ss->t0, g);
  }
  const auto& cp = std::get<CheckpointSpec>(cfg.initial);
  const std::filesystem::path p = cp.path.is_absolute() || base_dir.empty() ? cp.path
                                                                            : base_dir / cp.path;
  SystemState s = checkpoint::read(p);
  if (!(s.grid().nx == g.nx && s.grid().ny == g.ny && s.grid().L == g.L)) {
    throw ConfigError("checkpoint " + p.string() + " does not match the configured grid");
  }
  return s;
}

std::string to_string(E2Mode m) { return m == E2Mode::zero ? "zero" : "minus_i_e1"; }
std::string to_string(N0Mode m) { return m == N0Mode::zero ? "zero" : "minus_density"; }

}  // namespace mzk
