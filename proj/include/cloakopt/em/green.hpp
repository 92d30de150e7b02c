// green.hpp - free-space dyadic Green's function and coupling rates
//
// Internal units: lengths in lambda0 (so k0 = 2*pi), rates in gamma0, hbar = eps0 = c = 1.

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace cloakopt::em {

using cplx = std::complex<double>;
using Position = Eigen::Vector3d;
using Direction = Eigen::Vector3d;
using Dyad33 = Eigen::Matrix3cd;
using FieldVector = Eigen::Vector3cd;

struct UnitSystem {
  static constexpr double lambda0 = 1.0;
  static constexpr double k0 = 2.0 * std::numbers::pi / lambda0;
  static constexpr double rate_unit = 1.0;  // gamma0
};

/// Separations below this (in lambda0) must go through the self-term path.
inline constexpr double kCoincidentThreshold = 1e-6;

/// Slack on |gamma12| <= sqrt(gamma11 * gamma22).
inline constexpr double kCrossSpectralTolerance = 1e-9;

class CoincidentPointsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SolverInconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CouplingSet {
  double gamma11 = 1.0;
  double gamma22 = 1.0;
  double gamma12 = 0.0;
  double g12 = 0.0;
  double purcell = 1.0;  // gamma11 / gamma0
};

/// G0(r1, r2) = [I + grad grad / k^2] exp(ikR) / (4 pi R).
/// Throws CoincidentPointsError when |r1 - r2| < kCoincidentThreshold.
Dyad33 free_space_green(const Position& r1, const Position& r2, double k);

/// Free-space Green's tensor as a function of the separation vector only.
/// No threshold check; callers guarantee R > 0.
Dyad33 free_space_green_offset(const Eigen::Vector3d& separation, double k);

/// Finite part of G0 at coincident points: Im G0(r, r) = k / (6 pi) I.
/// The divergent real part is dropped; it only renormalizes the emitter frequency.
Dyad33 free_space_self_green(double k);

/// p^T G p for a real unit dipole direction (p* = p).
cplx project(const Dyad33& g, const Direction& p_hat);

/// gamma_ij = (6 pi / k) Im{p G_ij p},  g_12 = (3 pi / k) Re{p G_12 p}.
CouplingSet couplings_from_green(const Dyad33& g11, const Dyad33& g22,
                                 const Dyad33& g12, const Direction& p_hat,
                                 double k);

/// Aligned-dipole closed forms at x = k d (dipoles along the separation axis).
double aligned_gamma12(double kd);
double aligned_g12(double kd);

}  // namespace cloakopt::em
