// solver.hpp - coupled-dipole (volume integral) solution for the Green's
// function of a voxelized dielectric.
//
// Unknowns are the total fields E_m inside the voxels. For a point dipole
// source the incident field is G0(r_m, r_s) p, so every field is a column of
// the structured Green's tensor:
//
//   [1 - chi_m c] E_m - sum_{n != m} k^2 G0(r_m, r_n) chi_n dV E_n = E_inc(r_m),
//
// where chi = eps - 1 and c is the self-voxel coefficient of SelfTermScheme.

#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cloakopt/em/green.hpp"
#include "cloakopt/vie/grid.hpp"
#include "cloakopt/vie/interaction.hpp"

namespace cloakopt::vie {

using em::cplx;
using em::Direction;
using em::Dyad33;
using em::FieldVector;

/// Equivalent-volume sphere self term. The field a voxel produces on itself is
/// (-L + k^2 M) chi E with L the depolarization factor and
/// k^2 M = (2/3)[(1 - i k a) exp(i k a) - 1] the finite-size and radiative part
/// for a sphere of radius a with the voxel's volume.
struct SelfTermScheme {
  double depolarization = 1.0 / 3.0;
  bool finite_size = true;

  /// c = k^2 M - L, so that the diagonal block is (1 - chi c) I.
  cplx coefficient(double voxel_volume, double k) const;
};

enum class SolveMethod { dense, iterative };

struct SolverOptions {
  SolveMethod method = SolveMethod::iterative;
  double tolerance = 1e-8;  // relative residual for the Krylov path
  int max_iterations = 2000;
  SelfTermScheme self_term{};
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Largest 3N the dense path accepts.
inline constexpr std::size_t kDenseUnknownLimit = 6000;

/// Per-voxel field column G(r_k, r_s) p for one source orientation.
struct FieldMap {
  std::vector<FieldVector> values;
};

/// Per-voxel full tensor G(r_k, r_s); column a is the field of an a-polarized source.
struct DyadicFieldMap {
  std::vector<Dyad33> values;
};

/// Dense operator [1 - chi c] delta_mn I - k^2 G0(r_m, r_n) chi_n dV, 3N x 3N.
/// Throws std::length_error above kDenseUnknownLimit.
Eigen::MatrixXcd assemble_dense(const PermittivityGrid& grid, double k,
                                const SelfTermScheme& self_term = {});

/// Serial reference for assemble_dense.
Eigen::MatrixXcd assemble_dense_serial(const PermittivityGrid& grid, double k,
                                       const SelfTermScheme& self_term = {});

/// Stabilized bi-conjugate gradient iteration. Returns the solution or throws
/// SolverError with the final relative residual.
template <typename Apply>
Eigen::VectorXcd bicgstab(const Apply& apply, const Eigen::VectorXcd& b, double tolerance,
                          int max_iterations);

class VieSolver {
 public:
  VieSolver(PermittivityGrid grid, double k, SolverOptions options = {});

  const PermittivityGrid& grid() const { return grid_; }
  double wavenumber() const { return k_; }
  const SolverOptions& options() const { return options_; }

  /// A x through the configured backend (FFT interaction for the iterative path).
  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

  /// Voxel fields for an arbitrary incident field sampled at the voxel centers.
  Eigen::VectorXcd solve(const Eigen::VectorXcd& incident) const;

  /// Fields radiated by a unit dipole p_hat at `source`.
  FieldMap solve_fields(const Position& source, const Direction& p_hat) const;

  /// Three orientations at once: the full tensor G(r_k, source) per voxel.
  DyadicFieldMap solve_dyadic(const Position& source) const;

  /// k^2 sum_m G0(r, r_m) chi_m dV E_m, the field re-radiated by the scatterer.
  FieldVector scattered_field(const Position& r, const FieldMap& fields) const;
  Dyad33 scattered_green(const Position& r, const DyadicFieldMap& fields) const;

  /// Full Green's tensor G(r, source) = G0 + scattered; at r == source the
  /// free-space part is the finite self term.
  Dyad33 total_green(const Position& r, const Position& source,
                     const DyadicFieldMap& fields) const;

 private:
  Eigen::VectorXcd incident_for(const Position& source, const Direction& p_hat) const;

  PermittivityGrid grid_;
  double k_;
  SolverOptions options_;
  Eigen::VectorXcd diagonal_;
  Eigen::VectorXcd weights_;  // chi dV per unknown
  std::optional<FftInteraction> fft_;
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
};

FieldMap solve_fields(const PermittivityGrid& grid, const Position& source,
                      const Direction& p_hat, double k, SolveMethod method);

struct GreenPair {
  Dyad33 g11;
  Dyad33 g22;
  Dyad33 g12;  // G(r1, r2) from the r2 solve
  Dyad33 g21;  // G(r2, r1) from the r1 solve; equals g12^T by reciprocity
  DyadicFieldMap fields1;
  DyadicFieldMap fields2;
};

/// Two dyadic solves, one per emitter. Self tensors carry the analytic
/// free-space imaginary part plus the scattered correction at the source.
GreenPair scattered_green_pair(const PermittivityGrid& grid, const Position& r1,
                               const Position& r2, double k, const SolverOptions& options = {});

/// Shortest distance from p to any voxel center with eps != 1.
double distance_to_scatterer(const PermittivityGrid& grid, const Position& p);

}  // namespace cloakopt::vie

#include "cloakopt/vie/bicgstab.ipp"
