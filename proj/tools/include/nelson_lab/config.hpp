#pragma once

// Run configuration for nelson-lab: one JSON document per run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelson/analytic.hpp"
#include "nelson/grid.hpp"

namespace nelson::lab {

/// Rejected configuration; the message names the offending key and its line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SlitConfig slit;
  Grid1D grid{-40.0, 40.0, 4096};
  Grid1D density_grid{-40.0, 40.0, 256};
  double dt = 1e-3;
  std::size_t n_paths = 200000;
  std::uint64_t seed = 1;
  std::vector<double> times;
  std::map<std::string, double> thresholds;

  double threshold(const std::string& check) const;
};

/// Names of the verification checks with their default tolerances.
const std::map<std::string, double>& default_thresholds();

/// lambda=0.1, a=3, T=1 on [-40,40]x4096, dt=1e-3, 2e5 paths,
/// report times {-1, -0.5, 0, 1, 3, 5}.
RunConfig nelson_configuration();

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace nelson::lab
