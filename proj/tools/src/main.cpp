#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nelson/error.hpp"
#include "nelson/numeric.hpp"
#include "nelson_lab/commands.hpp"

using namespace nelson::lab;

namespace {

struct Flags {
  std::string config, out, which = "two_slit", ensemble;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

void common(CLI::App* cmd, Flags& f, bool with_which) {
  cmd->add_option("--config", f.config, "JSON run configuration (default: the Nelson configuration)");
  cmd->add_option("--out", f.out, "output directory (default: $NELSON_LAB_OUT or ./nelson_out)");
  cmd->add_option("--seed", f.seed, "override the configured seed");
  cmd->add_option("--threads", f.threads, "worker threads, 0 = hardware parallelism");
  if (with_which) {
    cmd->add_option("--which", f.which, "one_slit | two_slit | psi_n")
        ->check(CLI::IsMember({"one_slit", "two_slit", "psi_n"}));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-mechanics two-slit laboratory"};
  app.require_subcommand(1);
  Flags f;
  auto* wave = app.add_subcommand("wavefield", "write wavefields and Born densities");
  auto* sim = app.add_subcommand("simulate", "simulate a Nelson diffusion and check the Born relation");
  auto* ver = app.add_subcommand("verify", "run the variational certification suite");
  auto* fr = app.add_subcommand("fringes", "fringe reports of a field or a saved ensemble");
  common(wave, f, true);
  common(sim, f, true);
  common(ver, f, false);
  common(fr, f, true);
  fr->add_option("--ensemble", f.ensemble, "ensemble .bin written by simulate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig cfg = f.config.empty() ? nelson_configuration() : load_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    RunContext ctx;
    if (!f.out.empty()) {
      ctx.out_dir = f.out;
    } else if (const char* env = std::getenv("NELSON_LAB_OUT"); env && *env) {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = "nelson_out";
    }
    ctx.threads = nelson::resolve_threads(f.threads);
    const Which which = parse_which(f.which);

    CommandResult res;
    if (*wave) {
      res = cmd_wavefield(cfg, which, ctx);
    } else if (*sim) {
      res = cmd_simulate(cfg, which, ctx);
    } else if (*ver) {
      res = cmd_verify(cfg, ctx);
    } else {
      res = cmd_fringes(cfg, which, ctx,
                        f.ensemble.empty() ? std::nullopt : std::optional<std::filesystem::path>(f.ensemble));
    }
    for (const auto& file : res.files) std::printf("%s\n", (ctx.out_dir / file).c_str());
    if (!res.passed) std::fprintf(stderr, "one or more checks failed\n");
    return res.passed ? kOk : kCheckFailed;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const CheckError& e) {
    std::fprintf(stderr, "check %s\n", e.what());
    return kRuntimeFault;
  } catch (const nelson::Error& e) {
    std::fprintf(stderr, "%s: %s\n", nelson::to_string(e.code()), e.what());
    return e.code() == nelson::ErrorCode::invalid_argument ? kConfigError : kRuntimeFault;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeFault;
  }
}
