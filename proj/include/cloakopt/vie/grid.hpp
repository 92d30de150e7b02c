// grid.hpp - uniform voxel map of real permittivities

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cloakopt/em/green.hpp"

namespace cloakopt::vie {

using em::Position;

/// Voxel (i, j, k) occupies [origin + (i,j,k) * spacing, origin + (i+1,j+1,k+1) * spacing);
/// its dipole sits at the voxel center. Linear index = i + nx * (j + ny * k).
struct PermittivityGrid {
  Position origin = Position::Zero();
  double spacing = 0.1;
  std::array<int, 3> dims{1, 1, 1};
  std::vector<double> eps;
  double eps_max = 9.0;
  std::vector<std::uint8_t> frozen;

  static PermittivityGrid uniform(const Position& origin, double spacing,
                                  std::array<int, 3> dims, double eps_max = 9.0,
                                  double value = 1.0);

  /// Grid whose geometric center sits at the coordinate origin.
  static PermittivityGrid centered(std::array<int, 3> dims, double spacing,
                                   double eps_max = 9.0);

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + dims[0] * (static_cast<std::size_t>(j) +
                                                    static_cast<std::size_t>(dims[1]) * k);
  }
  std::array<int, 3> coords(std::size_t idx) const;
  Position center(std::size_t idx) const;
  double voxel_volume() const { return spacing * spacing * spacing; }
  double susceptibility(std::size_t idx) const { return eps[idx] - 1.0; }
  bool is_frozen(std::size_t idx) const { return frozen[idx] != 0; }
  std::size_t scatterer_count() const;

  /// Throws std::invalid_argument on shape mismatch or eps outside [1, eps_max].
  void validate() const;

  /// spacing <= lambda / (10 sqrt(eps_max)).
  bool discretization_ok() const;
};

}  // namespace cloakopt::vie
