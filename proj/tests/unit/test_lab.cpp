#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nelson_lab/commands.hpp"
#include "nelson_lab/config.hpp"

using namespace nelson::lab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kSmall = R"({
  "slit": {"lambda": 0.1, "a": 3, "T": 1},
  "grid": {"x_min": -40, "x_max": 40, "n": 4096},
  "dt": 0.001,
  "n_paths": 2000,
  "seed": 3,
  "times": [0, 1]
})";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nelson_lab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int run_exe(const std::string& args) {
  const std::string cmd = std::string(NELSON_LAB_EXE) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parses and echoes") {
  const auto cfg = parse_config(kSmall);
  CHECK(cfg.slit.lambda == 0.1);
  CHECK(cfg.n_paths == 2000);
  CHECK(cfg.times.size() == 2);
  CHECK(cfg.threshold("born_l1") == 0.05);
  CHECK(cfg.threshold("eq2") == 1e-4);
  const auto back = parse_config(to_json(cfg).dump(2));
  CHECK(back.seed == cfg.seed);
  CHECK(back.grid.size() == cfg.grid.size());
}

TEST_CASE("config errors name the key and line") {
  std::string bad = kSmall;
  bad.replace(bad.find("\"T\": 1"), 6, "\"T\": 0");
  const auto e1 = config_error(bad);
  CHECK(e1.find("cfg.json:2") != std::string::npos);
  CHECK(e1.find("slit.T") != std::string::npos);

  std::string unknown = kSmall;
  unknown.replace(unknown.find("\"seed\""), 6, "\"sead\"");
  const auto e2 = config_error(unknown);
  CHECK(e2.find("sead") != std::string::npos);
  CHECK(e2.find("cfg.json:6") != std::string::npos);

  std::string coarse = kSmall;
  coarse.replace(coarse.find("0.001"), 5, "0.1");
  CHECK(config_error(coarse).find("dt") != std::string::npos);

  std::string off_lattice = kSmall;
  off_lattice.replace(off_lattice.find("[0, 1]"), 6, "[0, 0.0005]");
  CHECK_FALSE(config_error(off_lattice).empty());

  std::string odd_grid = kSmall;
  odd_grid.replace(odd_grid.find("4096"), 4, "1000");
  CHECK_FALSE(config_error(odd_grid).empty());

  CHECK(config_error("{ \"slit\": ").find("malformed") != std::string::npos);
  CHECK_THROWS_AS(parse_config(R"({"slit": {"lambda": 0.1, "a": 3, "T": 1}, "thresholds": {"nope": 1}})"),
                  ConfigError);
}

TEST_CASE("wavefield keeps the one-slit norm") {
  const auto out = scratch("wavefield");
  const auto cfg = parse_config(kSmall);
  const auto res = cmd_wavefield(cfg, Which::one_slit, {out, 1});
  for (const auto& f : res.summary["fields"]) CHECK(std::abs(f["norm"].get<double>() - 1.0) < 1e-10);
  for (const auto& f : res.files) CHECK(fs::exists(out / f));
  const auto manifest = json::parse(slurp(out / res.files.back()));
  CHECK(manifest["command"] == "wavefield_one_slit");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest.contains("wall_time_s"));
  CHECK(manifest["code_version"] == code_version());
}

TEST_CASE("psi_n is real at the screen") {
  const auto out = scratch("psi_n");
  auto cfg = parse_config(kSmall);
  cfg.times = {0.0};
  const auto res = cmd_wavefield(cfg, Which::psi_n, {out, 1});
  CHECK(res.summary["fields"][0]["max_abs_imag"].get<double>() < 1e-12);
  CHECK(fs::exists(out / "rho0.csv"));
}

TEST_CASE("simulate is identical across thread counts") {
  auto cfg = parse_config(kSmall);
  cfg.times = {0.0, 0.5};
  const auto a = scratch("sim1");
  const auto b = scratch("sim2");
  const auto ra = cmd_simulate(cfg, Which::two_slit, {a, 1});
  const auto rb = cmd_simulate(cfg, Which::two_slit, {b, 4});
  REQUIRE(ra.files.size() == rb.files.size());
  for (std::size_t i = 0; i + 1 < ra.files.size(); ++i) {
    CAPTURE(ra.files[i]);
    CHECK(slurp(a / ra.files[i]) == slurp(b / rb.files[i]));
  }
  CHECK(ra.summary["clamp_events"] == 0);
}

TEST_CASE("fringes from a saved ensemble") {
  auto cfg = parse_config(kSmall);
  cfg.times = {0.0, 0.2};
  const auto out = scratch("fringes");
  const auto sim = cmd_simulate(cfg, Which::two_slit, {out, 1});
  const auto res = cmd_fringes(cfg, Which::two_slit, {out, 1}, out / sim.files.front());
  CHECK(res.summary.contains("entries"));
  for (const auto& f : res.files) CHECK(fs::exists(out / f));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exe");
  const auto good = dir / "good.json";
  std::ofstream(good) << kSmall;
  std::string bad = kSmall;
  bad.replace(bad.find("\"T\": 1"), 6, "\"T\": -1");
  const auto badp = dir / "bad.json";
  std::ofstream(badp) << bad;

  CHECK(run_exe("--help") == 0);
  CHECK(run_exe("bogus") == 2);
  CHECK(run_exe("wavefield --config " + badp.string() + " --out " + dir.string()) == 2);
  CHECK(run_exe("wavefield --config " + (dir / "missing.json").string() + " --out " + dir.string()) == 2);
  CHECK(run_exe("wavefield --which nowhere --config " + good.string() + " --out " + dir.string()) == 2);
  CHECK(run_exe("wavefield --which one_slit --config " + good.string() + " --out " + (dir / "w").string()) == 0);
  CHECK(fs::exists(dir / "w" / "manifest_wavefield_one_slit.json"));
}

TEST_CASE("verify honours configured thresholds") {
  auto text = std::string(kSmall);
  text.insert(text.rfind('}'), ",\n  \"thresholds\": {\"eq2\": 1e-12}\n");
  const auto dir = scratch("verify");
  const auto cfgp = dir / "cfg.json";
  std::ofstream(cfgp) << text;
  CHECK(run_exe("verify --config " + cfgp.string() + " --out " + dir.string()) == 1);
  const auto v = json::parse(slurp(dir / "verify.json"));
  CHECK_FALSE(v["passed"].get<bool>());
  CHECK_FALSE(v["checks"]["eq2"]["passed"].get<bool>());
  CHECK(v["checks"]["eq2"]["threshold"] == 1e-12);
  CHECK(v["checks"]["eq5"]["passed"].get<bool>());
  CHECK(v["checks"]["v0_sup"]["passed"].get<bool>());
  CHECK(v["checks"]["rho0_vs_psi1"]["passed"].get<bool>());
}
