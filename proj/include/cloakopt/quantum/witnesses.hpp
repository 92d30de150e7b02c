// witnesses.hpp - entanglement and mixedness measures for two qubits

#pragma once

#include <random>

#include "cloakopt/quantum/master_equation.hpp"

namespace cloakopt::quantum {

/// Off-diagonal slack tolerated before a state is not treated as X-type.
inline constexpr double kXStructureTolerance = 1e-10;

bool is_x_state(const DensityMatrix4& rho, double tol = kXStructureTolerance);

/// C = 2 max{0, |rho12| - sqrt(rho00 rho33)} for the steady-state X structure.
/// Non-X input falls back to concurrence_wootters; `used_fallback` reports it.
double concurrence(const DensityMatrix4& rho, bool* used_fallback = nullptr);

/// General Wootters concurrence max{0, l1 - l2 - l3 - l4}, where l_i are the
/// decreasing square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy).
double concurrence_wootters(const DensityMatrix4& rho);

/// N = max{0, sqrt((rho00 - rho33)^2 + 4|rho12|^2) - (rho00 + rho33)}; falls back
/// to the partial-transpose evaluation for non-X input.
double negativity(const DensityMatrix4& rho, bool* used_fallback = nullptr);

/// N = 2 * sum |negative eigenvalues of rho^{T_2}|.
double negativity_partial_transpose(const DensityMatrix4& rho);

/// S_L = (4/3)(1 - Tr rho^2).
double linear_entropy(const DensityMatrix4& rho);

struct MemsPoint {
  double concurrence;
  double linear_entropy;
};

/// Maximally entangled mixed state family parametrized by its concurrence r.
MemsPoint mems_curve(double r);
DensityMatrix4 mems_state(double r);

/// Largest concurrence the MEMS family reaches at linear entropy s (0 beyond 8/9).
double mems_concurrence_at_entropy(double s);

/// Euclidean distance in the (S_L, C) plane from a point to the MEMS curve.
double distance_to_mems(double linear_entropy, double concurrence, int samples = 20001);

/// Ginibre-induced random full-rank state: A A^dagger / Tr(A A^dagger).
DensityMatrix4 random_density_matrix(std::mt19937_64& rng);

/// Random X-state with the single-excitation coherence only.
DensityMatrix4 random_x_state(std::mt19937_64& rng);

}  // namespace cloakopt::quantum
