#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mzk/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = mzk::cli::dispatch(args, o, e);
  return {c, o.str(), e.str()};
}

json load(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

fs::path tmp(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mzk_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Cli, UnknownSubcommand) {
  const Result r = call({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("usage"), std::string::npos);
  EXPECT_EQ(call({}).code, 2);
}

TEST(Cli, GroundState) {
  const fs::path d = tmp("gs");
  const Result r = call({"ground-state", "--rmax", "20", "--tol", "1e-12", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = load(d / "ground_state.json");
  EXPECT_NEAR(s["Q0"].get<double>(), 2.2062008646508, 1e-8);
  EXPECT_LT(s["pohozaev_defects"]["mass_identity"].get<double>(), 1e-6);
  EXPECT_TRUE(fs::exists(d / "ground_state.csv"));
  const json m = load(d / "manifest.json");
  EXPECT_EQ(m["subcommand"], "ground-state");
  EXPECT_EQ(m["arguments"]["rmax"].get<double>(), 20.0);
}

TEST(Cli, ErrorJson) {
  const Result r = call({"ground-state", "--rmax", "5", "--out", tmp("bad").string()});
  EXPECT_EQ(r.code, 1);
  const json e = json::parse(r.err);
  EXPECT_EQ(e["error"], "domain_error");
  const Result u = call({"simulate"});
  EXPECT_EQ(u.code, 2);
  EXPECT_EQ(json::parse(u.err)["error"], "usage_error");
  const Result c = call({"simulate", "--config", "/nonexistent/file.cfg"});
  EXPECT_EQ(c.code, 1);
  EXPECT_EQ(json::parse(c.err)["error"], "io_error");
}

TEST(Cli, FitRateOnBoundedRun) {
  const fs::path d = tmp("bounded");
  fs::create_directories(d);
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "nx = 32\nny = 32\nL = 20\neta = 1\ndt = 0.05\nhorizon = 2\noutput_dir = "
        << (d / "run").string()
        << "\ninitial_data = gaussian\ngaussian.amplitude = 0.5\ngaussian.width = 1.5\n";
  }
  ASSERT_EQ(call({"simulate", "--config", (d / "run.cfg").string()}).code, 0);
  const Result r = call({"fit-rate", "--diagnostics", (d / "run" / "diagnostics.csv").string(),
                         "--norm", "grad_E", "--out", (d / "fit").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load(d / "fit" / "fit.json")["verdict"], "not blowing up");
  const Result rc = call({"rescale-check", "--checkpoints", (d / "run" / "checkpoints").string(),
                          "--out", (d / "rc").string()});
  ASSERT_EQ(rc.code, 0) << rc.err;
  EXPECT_EQ(load(d / "rc" / "rescale.json")["verdict"], "pass");
  std::ifstream csv(d / "rc" / "rescale.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,lambda,identity_2_5_defect,mass_defect,hamiltonian_scaling_defect");
  const Result cl = call({"classify", "--config", (d / "run.cfg").string(), "--out",
                          (d / "cl").string()});
  ASSERT_EQ(cl.code, 0) << cl.err;
  EXPECT_FALSE(load(d / "cl" / "classification.json")["in_window"].get<bool>());
}

TEST(Cli, SelfSimilarAndGn) {
  const fs::path d = tmp("ss");
  const Result r = call({"selfsimilar", "--omega", "400", "--T", "400", "--grid", "128,128,24",
                         "--times", "0:200:10", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = load(d / "selfsimilar.json");
  EXPECT_NEAR(s["fit"]["exponent"].get<double>(), 1.0, 0.01);
  const Result g = call({"gn-check", "--count", "5", "--n", "64", "--out", (d / "gn").string()});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_TRUE(load(d / "gn" / "gn.json")["all_hold"].get<bool>());
}

TEST(Cli, SimulateSelfSimilarPresetFitsRateOne) {
  const fs::path d = tmp("sspreset");
  const Result r = call({"simulate", "--config", std::string(MZK_PRESET_DIR) + "/selfsimilar.cfg",
                         "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load(d / "summary.json")["stop"], "lambda_cap");
  const Result f = call({"fit-rate", "--diagnostics", (d / "diagnostics.csv").string(), "--norm",
                         "n_norm", "--out", (d / "fit").string()});
  ASSERT_EQ(f.code, 0) << f.err;
  const json j = load(d / "fit" / "fit.json");
  ASSERT_TRUE(j["exponent"].is_number()) << j.dump();
  EXPECT_NEAR(j["exponent"].get<double>(), 1.0, 0.03);
  EXPECT_NEAR(j["T_est"].get<double>(), 25.0, 1.0);
}
