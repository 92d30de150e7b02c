// commands.hpp - the five CLI commands as library calls
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "cloakopt/app/config.hpp"

namespace cloakopt::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidationFailed = 1,
  kExitConfigError = 2,
  kExitSolverFailure = 3,
  kExitDegenerateSteadyState = 4,
};

struct CommandOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool corrupt_self_term = false;  // validate only
  std::ostream* out = nullptr;     // progress and tables; std::cout when null
  std::ostream* err = nullptr;     // diagnostics; std::cerr when null
};

int cmd_optimize(const CommandOptions& options);
int cmd_sweep(const CommandOptions& options);
int cmd_freespace(const CommandOptions& options);
int cmd_mems(const CommandOptions& options);
int cmd_validate(const CommandOptions& options);

/// Free-space reference at separation d with aligned dipoles, every rate in gamma0.
struct FreeSpaceReference {
  em::CouplingSet couplings;
  quantum::DensityMatrix4 rho;
};
FreeSpaceReference free_space_reference(double d12, double pump_ratio);

}  // namespace cloakopt::app
