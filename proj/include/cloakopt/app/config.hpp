// config.hpp - flat key = value run configuration
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cloakopt/optimizer/design.hpp"
#include "cloakopt/vie/solver.hpp"

namespace cloakopt::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  optimizer::DesignConfig design;
  vie::SolverOptions solver;

  std::array<int, 3> grid_dims{8, 8, 8};
  double grid_spacing = 1.0 / 16.0;
  std::optional<em::Position> grid_origin;  // lower corner; centered on the pair when unset
  double d12 = 0.25;

  std::vector<double> sweep_d12{0.1, 0.25, 0.5};
  std::vector<double> sweep_pump{1e-3, 5e-3, 2e-2};
  std::vector<double> freespace_d12;  // filled with 100 log-spaced points in [0.05, 5] by default
  std::vector<double> freespace_pump{5e-3};

  std::string out_dir = "out";
  int threads = 0;  // 0 keeps the OpenMP default
  std::uint64_t seed = 1;

  /// Grid for a pair at separation d, placed symmetrically about the grid center.
  vie::PermittivityGrid make_grid() const;
  optimizer::Emitters make_emitters(double separation) const;
  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys and
/// malformed values throw ConfigError.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every key the parser accepts, in documentation order.
const std::vector<std::string>& config_keys();

std::vector<double> logspace(double lo, double hi, int count);

}  // namespace cloakopt::app
