#include "cloakopt/vie/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cloakopt::vie {

PermittivityGrid PermittivityGrid::uniform(const Position& origin, double spacing,
                                           std::array<int, 3> dims, double eps_max,
                                           double value) {
  PermittivityGrid g;
  g.origin = origin;
  g.spacing = spacing;
  g.dims = dims;
  g.eps_max = eps_max;
  g.eps.assign(g.size(), value);
  g.frozen.assign(g.size(), 0);
  g.validate();
  return g;
}

PermittivityGrid PermittivityGrid::centered(std::array<int, 3> dims, double spacing,
                                            double eps_max) {
  const Position origin(-0.5 * dims[0] * spacing, -0.5 * dims[1] * spacing,
                        -0.5 * dims[2] * spacing);
  return uniform(origin, spacing, dims, eps_max);
}

std::array<int, 3> PermittivityGrid::coords(std::size_t idx) const {
  const int i = static_cast<int>(idx % dims[0]);
  const std::size_t rest = idx / dims[0];
  const int j = static_cast<int>(rest % dims[1]);
  const int k = static_cast<int>(rest / dims[1]);
  return {i, j, k};
}

Position PermittivityGrid::center(std::size_t idx) const {
  const auto c = coords(idx);
  return origin + spacing * Position(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
}

std::size_t PermittivityGrid::scatterer_count() const {
  std::size_t n = 0;
  for (double e : eps) n += e != 1.0;
  return n;
}

void PermittivityGrid::validate() const {
  std::ostringstream msg;
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    msg << "grid dimensions must be positive";
  } else if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    msg << "voxel spacing must be positive";
  } else if (!origin.allFinite()) {
    msg << "grid origin must be finite";
  } else if (!(eps_max >= 1.0)) {
    msg << "eps_max must be at least 1";
  } else if (eps.size() != size() || frozen.size() != size()) {
    msg << "permittivity data has " << eps.size() << " entries, expected " << size();
  } else {
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] >= 1.0 && eps[i] <= eps_max)) {
        msg << "voxel " << i << " has eps = " << eps[i] << " outside [1, " << eps_max << "]";
        break;
      }
    }
    if (msg.str().empty()) return;
  }
  throw std::invalid_argument(msg.str());
}

bool PermittivityGrid::discretization_ok() const {
  return spacing <= em::UnitSystem::lambda0 / (10.0 * std::sqrt(eps_max));
}

}  // namespace cloakopt::vie
