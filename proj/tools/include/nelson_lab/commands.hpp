#pragma once

// The four nelson-lab pipelines. Each writes its data files and a manifest
// into the output directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelson_lab/config.hpp"

namespace nelson::lab {

enum ExitStatus : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeFault = 3 };

enum class Which { one_slit, two_slit, psi_n };

Which parse_which(const std::string& s);
const char* to_string(Which w) noexcept;

struct RunContext {
  std::filesystem::path out_dir;
  unsigned threads = 0;
};

struct CommandResult {
  bool passed = true;
  std::vector<std::string> files;  ///< relative to out_dir, manifest last
  nlohmann::json summary;
};

/// A failure inside a named verification check.
class CheckError : public std::runtime_error {
 public:
  CheckError(const std::string& check, const std::string& what)
      : std::runtime_error(check + ": " + what), check_(check) {}
  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

CommandResult cmd_wavefield(const RunConfig& cfg, Which which, const RunContext& ctx);
CommandResult cmd_simulate(const RunConfig& cfg, Which which, const RunContext& ctx);
CommandResult cmd_verify(const RunConfig& cfg, const RunContext& ctx);
/// Fringe reports of |psi|^2 for `which`, or of a saved ensemble when given.
CommandResult cmd_fringes(const RunConfig& cfg, Which which, const RunContext& ctx,
                          const std::optional<std::filesystem::path>& ensemble = {});

/// Build version string recorded in manifests.
const char* code_version() noexcept;

}  // namespace nelson::lab
