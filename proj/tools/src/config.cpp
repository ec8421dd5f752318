#include "nelson_lab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nelson::lab {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::vector<std::string>& key, const std::string& what) const {
    std::ostringstream os;
    os << source_;
    if (const auto line = line_of(key)) os << ":" << line;
    os << ": ";
    for (std::size_t i = 0; i < key.size(); ++i) os << (i ? "." : "") << key[i];
    if (!key.empty()) os << ": ";
    os << what;
    throw ConfigError(os.str());
  }

  const json& need(const json& obj, const std::vector<std::string>& key) const {
    if (!obj.contains(key.back())) fail(key, "required key is missing");
    return obj.at(key.back());
  }

  double number(const json& v, const std::vector<std::string>& key) const {
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  double positive(const json& v, const std::vector<std::string>& key) const {
    const double d = number(v, key);
    if (!(d > 0.0)) fail(key, "must be positive");
    return d;
  }

  std::uint64_t count(const json& v, const std::vector<std::string>& key) const {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  void only(const json& obj, const std::vector<std::string>& prefix,
            std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(prefix, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, _] : obj.items()) {
      if (!ok.count(k)) {
        auto key = prefix;
        key.push_back(k);
        fail(key, "unknown key");
      }
    }
  }

  Grid1D grid(const json& obj, const std::vector<std::string>& key) const {
    only(obj, key, {"x_min", "x_max", "n"});
    auto sub = [&](const char* k) {
      auto p = key;
      p.push_back(k);
      return p;
    };
    const double lo = number(need(obj, sub("x_min")), sub("x_min"));
    const double hi = number(need(obj, sub("x_max")), sub("x_max"));
    const auto n = count(need(obj, sub("n")), sub("n"));
    if (!(hi > lo)) fail(sub("x_max"), "must exceed x_min");
    if (n < 64 || (n & (n - 1)) != 0) fail(sub("n"), "must be a power of two >= 64");
    return Grid1D(lo, hi, n);
  }

 private:
  std::size_t line_of(const std::vector<std::string>& key) const {
    std::size_t pos = 0;
    for (const auto& k : key) {
      const auto p = text_.find("\"" + k + "\"", pos);
      if (p == std::string::npos) break;
      pos = p;
    }
    if (key.empty() || pos == 0) return 0;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

  const std::string& text_;
  std::string source_;
};

}  // namespace

const std::map<std::string, double>& default_thresholds() {
  static const std::map<std::string, double> t = {
      {"born_l1", 0.05},
      {"eq2", 1e-4},
      {"eq5", 1e-4},
      {"eq7", 1e-4},
      {"product_schrodinger", 1e-4},
      {"fokker_planck_star", 1e-4},
      {"fokker_planck_ref", 1e-4},
      {"lambda_reference_z", 3.0},
      {"lambda_optimal_z", 3.0},
      {"lambda_fault_z", 5.0},
      {"optimality", 1e-8},
      {"v0_sup", 1e-8},
      {"saddle_violations", 0.0},
      {"action_agreement_z", 3.0},
      {"finite_action", 1e-4},
      {"rho0_vs_psi1", 1e-12},
  };
  return t;
}

double RunConfig::threshold(const std::string& check) const {
  if (const auto it = thresholds.find(check); it != thresholds.end()) return it->second;
  return default_thresholds().at(check);
}

RunConfig nelson_configuration() {
  RunConfig c;
  c.times = {-1.0, -0.5, 0.0, 1.0, 3.0, 5.0};
  c.thresholds = default_thresholds();
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON");
  }
  Reader rd(text, source);
  rd.only(doc, {}, {"slit", "grid", "density_grid", "dt", "n_paths", "seed", "times", "thresholds"});

  RunConfig c;
  const auto& slit = rd.need(doc, {"slit"});
  rd.only(slit, {"slit"}, {"lambda", "a", "T", "hbar", "m"});
  c.slit.lambda = rd.positive(rd.need(slit, {"slit", "lambda"}), {"slit", "lambda"});
  c.slit.a = rd.positive(rd.need(slit, {"slit", "a"}), {"slit", "a"});
  c.slit.T = rd.positive(rd.need(slit, {"slit", "T"}), {"slit", "T"});
  if (slit.contains("hbar")) c.slit.hbar = rd.positive(slit["hbar"], {"slit", "hbar"});
  if (slit.contains("m")) c.slit.m = rd.positive(slit["m"], {"slit", "m"});

  c.grid = rd.grid(rd.need(doc, {"grid"}), {"grid"});
  c.density_grid = Grid1D(c.grid.x_min(), c.grid.x_max(), std::min<std::size_t>(256, c.grid.size()));
  if (doc.contains("density_grid")) c.density_grid = rd.grid(doc["density_grid"], {"density_grid"});
  if (c.density_grid.x_min() != c.grid.x_min() || c.density_grid.x_max() != c.grid.x_max() ||
      c.grid.size() % c.density_grid.size() != 0) {
    rd.fail({"density_grid"}, "must span the grid with a whole number of grid cells per bin");
  }

  c.dt = rd.positive(rd.need(doc, {"dt"}), {"dt"});
  if (c.dt > 1e-2) rd.fail({"dt"}, "must not exceed 1e-2");
  c.n_paths = rd.count(rd.need(doc, {"n_paths"}), {"n_paths"});
  if (c.n_paths == 0) rd.fail({"n_paths"}, "must be positive");
  c.seed = rd.count(rd.need(doc, {"seed"}), {"seed"});

  const auto& times = rd.need(doc, {"times"});
  if (!times.is_array() || times.empty()) rd.fail({"times"}, "expected a non-empty array");
  for (const auto& t : times) c.times.push_back(rd.number(t, {"times"}));
  for (std::size_t i = 1; i < c.times.size(); ++i) {
    if (!(c.times[i] > c.times[i - 1])) rd.fail({"times"}, "must be strictly increasing");
  }
  for (double t : c.times) {
    const double k = (t - c.times.front()) / c.dt;
    if (std::abs(k - std::round(k)) > 1e-6) rd.fail({"times"}, "must lie on the dt lattice");
  }

  c.thresholds = default_thresholds();
  if (doc.contains("thresholds")) {
    const auto& th = doc["thresholds"];
    if (!th.is_object()) rd.fail({"thresholds"}, "expected an object");
    for (const auto& [k, v] : th.items()) {
      if (!default_thresholds().count(k)) rd.fail({"thresholds", k}, "unknown check");
      const double d = rd.number(v, {"thresholds", k});
      if (d < 0.0) rd.fail({"thresholds", k}, "must be non-negative");
      c.thresholds[k] = d;
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string() + ": cannot read config");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

nlohmann::json to_json(const RunConfig& c) {
  auto grid = [](const Grid1D& g) {
    return json{{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"n", g.size()}};
  };
  return json{
      {"slit",
       {{"lambda", c.slit.lambda}, {"a", c.slit.a}, {"T", c.slit.T}, {"hbar", c.slit.hbar}, {"m", c.slit.m}}},
      {"grid", grid(c.grid)},
      {"density_grid", grid(c.density_grid)},
      {"dt", c.dt},
      {"n_paths", c.n_paths},
      {"seed", c.seed},
      {"times", c.times},
      {"thresholds", c.thresholds},
  };
}

}  // namespace nelson::lab
