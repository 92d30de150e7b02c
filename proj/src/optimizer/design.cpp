#include "cloakopt/optimizer/design.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cloakopt/quantum/witnesses.hpp"

namespace cloakopt::optimizer {

void DesignConfig::validate() const {
  std::ostringstream msg;
  if (!(delta_eps > 0.0)) {
    msg << "delta_eps must be positive";
  } else if (!(delta_eps_min > 0.0)) {
    msg << "delta_eps_min must be positive";
  } else if (!(eps_max >= 1.0 + delta_eps)) {
    msg << "eps_max must be at least 1 + delta_eps";
  } else if (!(pump_ratio > 0.0)) {
    msg << "pump_ratio must be positive";
  } else if (!(eta_converge > 0.0)) {
    msg << "eta_converge must be positive";
  } else if (!(tol_accept >= 0.0)) {
    msg << "tol_accept must be non-negative";
  } else if (max_iterations < 0) {
    msg << "max_iterations must be non-negative";
  } else if (!(exclusion_radius >= 0.0)) {
    msg << "exclusion_radius must be non-negative";
  } else {
    return;
  }
  throw std::invalid_argument(msg.str());
}

Emitters Emitters::on_z_axis(double separation, const Position& center) {
  Emitters e;
  e.r1 = center - Position(0.0, 0.0, 0.5 * separation);
  e.r2 = center + Position(0.0, 0.0, 0.5 * separation);
  return e;
}

quantum::MasterEqParams normalized_params(const CouplingSet& c, double pump_ratio) {
  const double gamma = c.gamma11;
  quantum::MasterEqParams p;
  p.gamma11 = 1.0;
  p.gamma22 = c.gamma22 / gamma;
  p.gamma12 = c.gamma12 / gamma;
  p.g12 = c.g12 / gamma;
  p.pump = pump_ratio;
  return p;
}

double target_value(const quantum::DensityMatrix4& rho, Target target) {
  return target == Target::concurrence ? quantum::concurrence(rho) : quantum::negativity(rho);
}

Evaluation evaluate_green(const TensorTriple& g, const Emitters& emitters, double k,
                          const DesignConfig& config) {
  Evaluation e;
  e.couplings = em::couplings_from_green(g.g11, g.g22, g.g12, emitters.p_hat, k);
  e.rho = quantum::steady_state(normalized_params(e.couplings, config.pump_ratio));
  e.target = target_value(e.rho, config.target);
  return e;
}

Dyad33 born_delta_green(const Dyad33& g_ik, const Dyad33& g_kj, double delta_eps,
                        double voxel_volume, double k) {
  return (k * k * delta_eps * voxel_volume) * (g_ik * g_kj);
}

TensorTriple voxel_increment(const vie::GreenPair& fields, std::size_t voxel, double delta_eps,
                             double voxel_volume, double k) {
  const Dyad33& f1 = fields.fields1.values[voxel];  // G(r_k, r1)
  const Dyad33& f2 = fields.fields2.values[voxel];  // G(r_k, r2)
  const Dyad33 f1t = f1.transpose();                // G(r1, r_k)
  const Dyad33 f2t = f2.transpose();                // G(r2, r_k)
  TensorTriple d;
  d.g11 = born_delta_green(f1t, f1, delta_eps, voxel_volume, k);
  d.g22 = born_delta_green(f2t, f2, delta_eps, voxel_volume, k);
  d.g12 = born_delta_green(f1t, f2, delta_eps, voxel_volume, k);
  return d;
}

std::optional<Candidate> evaluate_candidate(const TensorTriple& current,
                                            const vie::GreenPair& fields,
                                            const PermittivityGrid& grid,
                                            std::span<const std::size_t> voxels, double delta_eps,
                                            const Emitters& emitters, double k,
                                            const DesignConfig& config) {
  Candidate c;
  for (std::size_t v : voxels) {
    if (grid.is_frozen(v)) return std::nullopt;
    c.increment += voxel_increment(fields, v, delta_eps, grid.voxel_volume(), k);
  }
  try {
    const Evaluation e = evaluate_green(current + c.increment, emitters, k, config);
    c.target = e.target;
    c.couplings = e.couplings;
  } catch (const em::SolverInconsistencyError&) {
    return std::nullopt;
  }
  return c;
}

namespace {

std::array<int, 3> rotate_z(const std::array<int, 3>& c, const std::array<int, 3>& dims) {
  // 90 degrees about the grid's central z-axis: (x, y) -> (-y, x).
  return {dims[1] - 1 - c[1], c[0], c[2]};
}

std::array<int, 3> mirror_z(const std::array<int, 3>& c, const std::array<int, 3>& dims) {
  return {c[0], c[1], dims[2] - 1 - c[2]};
}

}  // namespace

std::vector<std::vector<std::size_t>> voxel_orbits(const PermittivityGrid& grid,
                                                   Symmetry symmetry) {
  if (symmetry == Symmetry::z_rotation_4fold && grid.dims[0] != grid.dims[1]) {
    throw std::invalid_argument("4-fold rotation symmetry needs nx == ny");
  }
  std::vector<char> seen(grid.size(), 0);
  std::vector<std::vector<std::size_t>> orbits;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (seen[v]) continue;
    std::set<std::size_t> members{v};
    if (symmetry == Symmetry::z_rotation_4fold) {
      auto c = grid.coords(v);
      for (int r = 0; r < 3; ++r) {
        c = rotate_z(c, grid.dims);
        members.insert(grid.index(c[0], c[1], c[2]));
      }
    } else if (symmetry == Symmetry::mirror_z) {
      const auto c = mirror_z(grid.coords(v), grid.dims);
      members.insert(grid.index(c[0], c[1], c[2]));
    }
    bool frozen = false;
    for (std::size_t m : members) {
      seen[m] = 1;
      frozen = frozen || grid.is_frozen(m);
    }
    if (!frozen) orbits.emplace_back(members.begin(), members.end());
  }
  return orbits;
}

std::size_t freeze_exclusion_zone(PermittivityGrid& grid, const Emitters& emitters,
                                  double radius_in_spacings) {
  const double radius = radius_in_spacings * grid.spacing;
  std::size_t count = 0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Position c = grid.center(v);
    if ((c - emitters.r1).norm() <= radius || (c - emitters.r2).norm() <= radius) {
      if (!grid.frozen[v]) ++count;
      grid.frozen[v] = 1;
      grid.eps[v] = 1.0;
    }
  }
  return count;
}

namespace {

struct Decision {
  bool accept = false;
  double step = 0.0;  // signed delta_eps applied to every member
  Candidate candidate;
};

// Best admissible step for one orbit relative to the given reference.
Decision decide(const TensorTriple& reference, double reference_target,
                const vie::GreenPair& state, const PermittivityGrid& grid,
                const std::vector<std::size_t>& orbit, double delta_eps,
                const Emitters& emitters, double k, const DesignConfig& config) {
  Decision best;
  const double steps[2] = {delta_eps, -delta_eps};
  const int tries = config.bidirectional ? 2 : 1;
  for (int t = 0; t < tries; ++t) {
    const double step = steps[t];
    bool admissible = true;
    for (std::size_t v : orbit) {
      const double next = grid.eps[v] + step;
      if (next > config.eps_max || next < 1.0) admissible = false;
    }
    if (!admissible) continue;
    auto cand = evaluate_candidate(reference, state, grid, orbit, step, emitters, k, config);
    if (!cand) continue;
    // Strict improvement beyond the tolerance.
    if (cand->target - reference_target > config.tol_accept &&
        (!best.accept || cand->target > best.candidate.target)) {
      best.accept = true;
      best.step = step;
      best.candidate = *cand;
    }
  }
  return best;
}

}  // namespace

SweepResult sweep_once(const PermittivityGrid& grid, const DesignConfig& config,
                       const vie::GreenPair& state, const Emitters& emitters, double k,
                       double delta_eps, std::span<const std::size_t> order) {
  const auto orbits = voxel_orbits(grid, config.symmetry);
  std::vector<std::size_t> visit(orbits.size());
  if (order.empty()) {
    std::iota(visit.begin(), visit.end(), std::size_t{0});
  } else {
    if (order.size() != orbits.size()) {
      throw std::invalid_argument("sweep order must be a permutation of the voxel groups");
    }
    visit.assign(order.begin(), order.end());
  }

  const TensorTriple reference = TensorTriple::from(state);
  const double reference_target = evaluate_green(reference, emitters, k, config).target;

  SweepResult out;
  out.grid = grid;
  out.grid.eps_max = config.eps_max;
  out.predicted_target = reference_target;
  out.evaluated = visit.size();

  if (config.sweep_mode == SweepMode::sequential) {
    TensorTriple running = reference;
    double running_target = reference_target;
    for (std::size_t oi : visit) {
      const Decision d = decide(running, running_target, state, out.grid, orbits[oi], delta_eps,
                                emitters, k, config);
      if (!d.accept) continue;
      running += d.candidate.increment;
      running_target = d.candidate.target;
      out.accumulated += d.candidate.increment;
      for (std::size_t v : orbits[oi]) {
        out.grid.eps[v] += d.step;
        out.accepted_voxels.push_back(v);
      }
    }
    out.predicted_target = running_target;
  } else {
    std::vector<Decision> decisions(orbits.size());
    std::vector<std::exception_ptr> failed(orbits.size());
    const long count = static_cast<long>(visit.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < count; ++i) {
      const std::size_t oi = visit[i];
      try {
        decisions[oi] = decide(reference, reference_target, state, grid, orbits[oi], delta_eps,
                               emitters, k, config);
      } catch (...) {
        failed[oi] = std::current_exception();
      }
    }
    for (const auto& e : failed) {
      if (e) std::rethrow_exception(e);
    }
    // Reduce in orbit order so the result does not depend on the visit order.
    for (std::size_t oi = 0; oi < orbits.size(); ++oi) {
      if (!decisions[oi].accept) continue;
      out.accumulated += decisions[oi].candidate.increment;
      for (std::size_t v : orbits[oi]) {
        out.grid.eps[v] += decisions[oi].step;
        out.accepted_voxels.push_back(v);
      }
    }
    if (!out.accepted_voxels.empty()) {
      try {
        out.predicted_target = evaluate_green(reference + out.accumulated, emitters, k, config).target;
      } catch (const em::SolverInconsistencyError&) {
        out.predicted_target = reference_target;
      }
    }
  }
  std::sort(out.accepted_voxels.begin(), out.accepted_voxels.end());
  out.accepted_count = static_cast<int>(out.accepted_voxels.size());
  return out;
}

double tensor_mismatch(const TensorTriple& predicted, const TensorTriple& resolved) {
  auto rel = [](const Dyad33& p, const Dyad33& r) {
    const double denom = r.norm();
    return denom > 0.0 ? (p - r).norm() / denom : (p - r).norm();
  };
  return std::max({rel(predicted.g11, resolved.g11), rel(predicted.g22, resolved.g22),
                   rel(predicted.g12, resolved.g12)});
}

double verify_convergence(const TensorTriple& g_n, const TensorTriple& accumulated,
                          const PermittivityGrid& grid_next, const Emitters& emitters, double k,
                          const vie::SolverOptions& options) {
  const auto next = vie::scattered_green_pair(grid_next, emitters.r1, emitters.r2, k, options);
  return tensor_mismatch(g_n + accumulated, TensorTriple::from(next));
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::all_frozen: return "all_frozen";
    case StopReason::no_improvement: return "no_improvement";
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::delta_eps_floor: return "delta_eps_floor";
  }
  return "unknown";
}

DesignRecord optimize(PermittivityGrid grid0, const Emitters& emitters, const DesignConfig& config,
                      const vie::SolverOptions& solver, double k,
                      const ProgressCallback& progress) {
  config.validate();
  grid0.eps_max = config.eps_max;
  freeze_exclusion_zone(grid0, emitters, config.exclusion_radius);
  grid0.validate();

  DesignRecord record;
  record.grid = grid0;

  vie::GreenPair state = vie::scattered_green_pair(grid0, emitters.r1, emitters.r2, k, solver);
  Evaluation current = evaluate_green(TensorTriple::from(state), emitters, k, config);
  record.rho = current.rho;
  record.trace.push_back({0, current.target, 0, current.couplings, 0.0, config.delta_eps});
  if (progress) progress(record.trace.back());

  if (voxel_orbits(grid0, config.symmetry).empty()) {
    record.stop = StopReason::all_frozen;
    return record;
  }

  double delta_eps = config.delta_eps;
  int completed = 0;
  while (true) {
    if (completed >= config.max_iterations) {
      record.stop = StopReason::max_iterations;
      break;
    }
    SweepResult sweep = sweep_once(record.grid, config, state, emitters, k, delta_eps);
    if (completed == 0 && record.first_sweep_accepted.empty()) {
      record.first_sweep_accepted = sweep.accepted_voxels;
    }
    if (sweep.accepted_count == 0) {
      record.stop = StopReason::no_improvement;
      break;
    }

    vie::GreenPair next =
        vie::scattered_green_pair(sweep.grid, emitters.r1, emitters.r2, k, solver);
    const double mismatch =
        tensor_mismatch(TensorTriple::from(state) + sweep.accumulated, TensorTriple::from(next));
    std::optional<Evaluation> resolved;
    try {
      resolved = evaluate_green(TensorTriple::from(next), emitters, k, config);
    } catch (const em::SolverInconsistencyError&) {
      resolved.reset();
    }

    if (!resolved || mismatch > config.eta_converge || resolved->target < current.target) {
      ++record.reverted_sweeps;
      delta_eps *= 0.5;
      if (delta_eps < config.delta_eps_min) {
        record.stop = StopReason::delta_eps_floor;
        break;
      }
      continue;
    }

    const double gain = resolved->target - current.target;
    ++completed;
    record.grid = std::move(sweep.grid);
    state = std::move(next);
    current = *resolved;
    record.rho = current.rho;
    record.trace.push_back(
        {completed, current.target, sweep.accepted_count, current.couplings, mismatch, delta_eps});
    if (progress) progress(record.trace.back());

    if (gain < config.tol_accept) {
      record.stop = StopReason::converged;
      break;
    }
  }
  return record;
}

}  // namespace cloakopt::optimizer
