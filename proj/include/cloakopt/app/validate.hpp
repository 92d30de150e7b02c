// validate.hpp - cross-module invariant suite behind `cloakopt validate`
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cloakopt::app {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct ValidateOptions {
  std::uint64_t seed = 1;
  // Test fixture: drop the depolarization term from the voxel self field.
  bool corrupt_self_term = false;
};

std::vector<std::string> validation_check_names();

/// Runs every check in order; `on_result` sees each one as it finishes.
std::vector<CheckResult> run_validation(const ValidateOptions& options,
                                        const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace cloakopt::app
