// design.hpp - greedy voxel-by-voxel topology optimization of the emitter
// environment, driven by first-order Born updates of the Green's tensors.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cloakopt/em/green.hpp"
#include "cloakopt/quantum/master_equation.hpp"
#include "cloakopt/vie/grid.hpp"
#include "cloakopt/vie/solver.hpp"

namespace cloakopt::optimizer {

using em::CouplingSet;
using em::Direction;
using em::Dyad33;
using em::Position;
using vie::PermittivityGrid;

enum class SweepMode { sequential, frozen_reference };
enum class Symmetry { none, z_rotation_4fold, mirror_z };
enum class Target { concurrence, negativity };

struct DesignConfig {
  double delta_eps = 0.05;
  double delta_eps_min = 1e-3;
  double eps_max = 9.0;
  double tol_accept = 1e-9;
  double eta_converge = 1e-2;
  int max_iterations = 200;
  SweepMode sweep_mode = SweepMode::sequential;
  bool bidirectional = false;
  double exclusion_radius = 2.0;  // in voxel spacings
  Symmetry symmetry = Symmetry::none;
  Target target = Target::concurrence;
  double pump_ratio = 5e-3;  // P / gamma, gamma = gamma11 of the current device

  void validate() const;
};

struct Emitters {
  Position r1 = Position(0.0, 0.0, -0.125);
  Position r2 = Position(0.0, 0.0, 0.125);
  Direction p_hat = Direction::UnitZ();

  double separation() const { return (r2 - r1).norm(); }

  /// Pair on the z-axis, centered at `center`, dipoles along z.
  static Emitters on_z_axis(double separation, const Position& center = Position::Zero());
};

/// Green's tensors at the emitter pair: G(r1,r1), G(r2,r2), G(r1,r2).
struct TensorTriple {
  Dyad33 g11 = Dyad33::Zero();
  Dyad33 g22 = Dyad33::Zero();
  Dyad33 g12 = Dyad33::Zero();

  TensorTriple& operator+=(const TensorTriple& o) {
    g11 += o.g11;
    g22 += o.g22;
    g12 += o.g12;
    return *this;
  }
  friend TensorTriple operator+(TensorTriple a, const TensorTriple& b) { return a += b; }

  static TensorTriple from(const vie::GreenPair& pair) { return {pair.g11, pair.g22, pair.g12}; }
};

struct Evaluation {
  double target = 0.0;
  CouplingSet couplings;
  quantum::DensityMatrix4 rho;
};

/// Master-equation rates with every rate divided by gamma = gamma11 and the
/// pump held at pump_ratio * gamma.
quantum::MasterEqParams normalized_params(const CouplingSet& c, double pump_ratio);

double target_value(const quantum::DensityMatrix4& rho, Target target);

/// Couplings -> steady state -> witness. Throws em::SolverInconsistencyError
/// for tensors outside the physical manifold.
Evaluation evaluate_green(const TensorTriple& g, const Emitters& emitters, double k,
                          const DesignConfig& config);

/// k^2 delta_eps dV G(r_i, r_k) G(r_k, r_j).
Dyad33 born_delta_green(const Dyad33& g_ik, const Dyad33& g_kj, double delta_eps,
                        double voxel_volume, double k);

/// Born increments of all three emitter tensors for a permittivity change at
/// one voxel; G(r_i, r_k) is recovered as G(r_k, r_i)^T.
TensorTriple voxel_increment(const vie::GreenPair& fields, std::size_t voxel, double delta_eps,
                             double voxel_volume, double k);

struct Candidate {
  double target = 0.0;
  CouplingSet couplings;
  TensorTriple increment;
};

/// Target after changing every voxel in `voxels` by delta_eps, estimated to
/// first order around `current`. Returns nullopt when a voxel is frozen or the
/// estimate leaves the physical manifold (|gamma12| > sqrt(gamma11 gamma22)).
std::optional<Candidate> evaluate_candidate(const TensorTriple& current,
                                            const vie::GreenPair& fields,
                                            const PermittivityGrid& grid,
                                            std::span<const std::size_t> voxels, double delta_eps,
                                            const Emitters& emitters, double k,
                                            const DesignConfig& config);

/// Groups of voxels tied together by the symmetry constraint, ordered by their
/// smallest member. A group with any frozen member is dropped.
std::vector<std::vector<std::size_t>> voxel_orbits(const PermittivityGrid& grid, Symmetry symmetry);

/// Freezes (and resets to eps = 1) voxels within radius * spacing of an emitter.
/// Returns the number of voxels frozen by this call.
std::size_t freeze_exclusion_zone(PermittivityGrid& grid, const Emitters& emitters,
                                  double radius_in_spacings);

struct SweepResult {
  PermittivityGrid grid;
  TensorTriple accumulated;  // sum of accepted Born increments
  int accepted_count = 0;    // voxels changed
  std::vector<std::size_t> accepted_voxels;
  std::size_t evaluated = 0;  // candidate groups evaluated
  double predicted_target = 0.0;
};

/// One pass over every free voxel group. `order`, when given, is a permutation
/// of the orbit indices; otherwise lexicographic voxel order is used.
SweepResult sweep_once(const PermittivityGrid& grid, const DesignConfig& config,
                       const vie::GreenPair& state, const Emitters& emitters, double k,
                       double delta_eps, std::span<const std::size_t> order = {});

/// Largest relative Frobenius mismatch over the (1,1), (2,2), (1,2) tensors.
double tensor_mismatch(const TensorTriple& predicted, const TensorTriple& resolved);

/// Re-solves grid_next and compares it with G_n + accumulated increments.
double verify_convergence(const TensorTriple& g_n, const TensorTriple& accumulated,
                          const PermittivityGrid& grid_next, const Emitters& emitters, double k,
                          const vie::SolverOptions& options = {});

struct IterationEntry {
  int n = 0;
  double target = 0.0;
  int accepted_count = 0;
  CouplingSet couplings;
  double born_mismatch = 0.0;
  double delta_eps = 0.0;
};

enum class StopReason { all_frozen, no_improvement, converged, max_iterations, delta_eps_floor };

std::string to_string(StopReason reason);

struct DesignRecord {
  std::vector<IterationEntry> trace;
  PermittivityGrid grid;
  quantum::DensityMatrix4 rho;
  StopReason stop = StopReason::max_iterations;
  int reverted_sweeps = 0;
  std::vector<std::size_t> first_sweep_accepted;

  double initial_target() const { return trace.front().target; }
  double final_target() const { return trace.back().target; }
};

using ProgressCallback = std::function<void(const IterationEntry&)>;

/// Full loop: solve, sweep, re-solve, check the accumulated Born estimate,
/// and revert with a halved increment on mismatch or regression.
DesignRecord optimize(PermittivityGrid grid0, const Emitters& emitters, const DesignConfig& config,
                      const vie::SolverOptions& solver = {}, double k = em::UnitSystem::k0,
                      const ProgressCallback& progress = {});

}  // namespace cloakopt::optimizer
