#include "cloakopt/vie/solver.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>

namespace cloakopt::vie {

namespace {

constexpr cplx kI{0.0, 1.0};

Lattice lattice_of(const PermittivityGrid& grid) { return Lattice{grid.dims, grid.spacing}; }

template <bool Parallel>
Eigen::MatrixXcd assemble(const PermittivityGrid& grid, double k, const SelfTermScheme& self_term) {
  grid.validate();
  const std::size_t n = grid.size();
  if (3 * n > kDenseUnknownLimit) {
    std::ostringstream msg;
    msg << "dense assembly limited to " << kDenseUnknownLimit << " unknowns (grid has "
        << 3 * n << "); use the iterative path";
    throw std::length_error(msg.str());
  }
  const double dv = grid.voxel_volume();
  const cplx c = self_term.coefficient(dv, k);
  const double k2 = k * k;
  Eigen::MatrixXcd a(3 * n, 3 * n);
  const long rows = static_cast<long>(n);

  auto fill_row = [&](long m) {
    const Position rm = grid.center(static_cast<std::size_t>(m));
    for (std::size_t q = 0; q < n; ++q) {
      auto block = a.block<3, 3>(3 * m, 3 * q);
      if (static_cast<std::size_t>(m) == q) {
        block = (1.0 - grid.susceptibility(q) * c) * em::Dyad33::Identity();
        continue;
      }
      const double chi = grid.susceptibility(q);
      if (chi == 0.0) {
        block.setZero();
        continue;
      }
      block = -k2 * chi * dv * em::free_space_green_offset(rm - grid.center(q), k);
    }
  };

  if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
    for (long m = 0; m < rows; ++m) fill_row(m);
  } else {
    for (long m = 0; m < rows; ++m) fill_row(m);
  }
  return a;
}

}  // namespace

cplx SelfTermScheme::coefficient(double voxel_volume, double k) const {
  cplx m{};
  if (finite_size) {
    const double a = std::cbrt(3.0 * voxel_volume / (4.0 * std::numbers::pi));
    const double ka = k * a;
    m = (2.0 / 3.0) * ((1.0 - kI * ka) * std::exp(kI * ka) - 1.0);
  }
  return m - depolarization;
}

Eigen::MatrixXcd assemble_dense(const PermittivityGrid& grid, double k,
                                const SelfTermScheme& self_term) {
  return assemble<true>(grid, k, self_term);
}

Eigen::MatrixXcd assemble_dense_serial(const PermittivityGrid& grid, double k,
                                       const SelfTermScheme& self_term) {
  return assemble<false>(grid, k, self_term);
}

VieSolver::VieSolver(PermittivityGrid grid, double k, SolverOptions options)
    : grid_(std::move(grid)), k_(k), options_(options) {
  grid_.validate();
  const std::size_t n = grid_.size();
  const double dv = grid_.voxel_volume();
  const cplx c = options_.self_term.coefficient(dv, k_);
  diagonal_.resize(3 * n);
  weights_.resize(3 * n);
  for (std::size_t m = 0; m < n; ++m) {
    const double chi = grid_.susceptibility(m);
    for (int a = 0; a < 3; ++a) {
      diagonal_(3 * m + a) = 1.0 - chi * c;
      weights_(3 * m + a) = chi * dv;
    }
  }
  if (options_.method == SolveMethod::dense) {
    lu_.emplace(assemble_dense(grid_, k_, options_.self_term));
  } else {
    fft_.emplace(lattice_of(grid_), k_);
  }
}

Eigen::VectorXcd VieSolver::apply(const Eigen::VectorXcd& x) const {
  const Eigen::VectorXcd p = weights_.cwiseProduct(x);
  Eigen::VectorXcd coupled(x.size());
  if (fft_) {
    fft_->apply(std::span<const cplx>(p.data(), p.size()),
                std::span<cplx>(coupled.data(), coupled.size()));
  } else {
    interaction_direct_omp(lattice_of(grid_), k_, std::span<const cplx>(p.data(), p.size()),
                           std::span<cplx>(coupled.data(), coupled.size()));
  }
  return diagonal_.cwiseProduct(x) - coupled;
}

Eigen::VectorXcd VieSolver::solve(const Eigen::VectorXcd& incident) const {
  if (incident.size() != diagonal_.size()) {
    throw std::invalid_argument("incident field must have 3 * voxel count entries");
  }
  if (grid_.scatterer_count() == 0) return incident;
  if (lu_) return lu_->solve(incident);
  return bicgstab([this](const Eigen::VectorXcd& v) { return apply(v); }, incident,
                  options_.tolerance, options_.max_iterations);
}

Eigen::VectorXcd VieSolver::incident_for(const Position& source, const Direction& p_hat) const {
  const std::size_t n = grid_.size();
  Eigen::VectorXcd b(3 * n);
  const Eigen::Vector3cd p = p_hat.cast<cplx>();
  for (std::size_t m = 0; m < n; ++m) {
    b.segment<3>(3 * m) = em::free_space_green(grid_.center(m), source, k_) * p;
  }
  return b;
}

FieldMap VieSolver::solve_fields(const Position& source, const Direction& p_hat) const {
  const Eigen::VectorXcd x = solve(incident_for(source, p_hat));
  FieldMap out;
  out.values.resize(grid_.size());
  for (std::size_t m = 0; m < grid_.size(); ++m) out.values[m] = x.segment<3>(3 * m);
  return out;
}

DyadicFieldMap VieSolver::solve_dyadic(const Position& source) const {
  DyadicFieldMap out;
  out.values.assign(grid_.size(), Dyad33::Zero());
  for (int a = 0; a < 3; ++a) {
    const FieldMap col = solve_fields(source, Direction::Unit(a));
    for (std::size_t m = 0; m < grid_.size(); ++m) out.values[m].col(a) = col.values[m];
  }
  return out;
}

FieldVector VieSolver::scattered_field(const Position& r, const FieldMap& fields) const {
  const double scale = k_ * k_ * grid_.voxel_volume();
  FieldVector acc = FieldVector::Zero();
  for (std::size_t m = 0; m < grid_.size(); ++m) {
    const double chi = grid_.susceptibility(m);
    if (chi == 0.0) continue;
    acc += chi * (em::free_space_green(r, grid_.center(m), k_) * fields.values[m]);
  }
  return scale * acc;
}

Dyad33 VieSolver::scattered_green(const Position& r, const DyadicFieldMap& fields) const {
  const double scale = k_ * k_ * grid_.voxel_volume();
  Dyad33 acc = Dyad33::Zero();
  for (std::size_t m = 0; m < grid_.size(); ++m) {
    const double chi = grid_.susceptibility(m);
    if (chi == 0.0) continue;
    acc += chi * (em::free_space_green(r, grid_.center(m), k_) * fields.values[m]);
  }
  return scale * acc;
}

Dyad33 VieSolver::total_green(const Position& r, const Position& source,
                              const DyadicFieldMap& fields) const {
  const bool self = (r - source).norm() < em::kCoincidentThreshold;
  const Dyad33 free = self ? em::free_space_self_green(k_) : em::free_space_green(r, source, k_);
  return free + scattered_green(r, fields);
}

FieldMap solve_fields(const PermittivityGrid& grid, const Position& source,
                      const Direction& p_hat, double k, SolveMethod method) {
  SolverOptions options;
  options.method = method;
  return VieSolver(grid, k, options).solve_fields(source, p_hat);
}

GreenPair scattered_green_pair(const PermittivityGrid& grid, const Position& r1,
                               const Position& r2, double k, const SolverOptions& options) {
  if ((r1 - r2).norm() < em::kCoincidentThreshold) {
    throw em::CoincidentPointsError("scattered_green_pair: emitter positions coincide");
  }
  const VieSolver solver(grid, k, options);
  GreenPair out;
  // Exceptions may not cross the parallel region; carry them out by hand.
  std::exception_ptr failed[2];
#pragma omp parallel sections
  {
#pragma omp section
    try {
      out.fields1 = solver.solve_dyadic(r1);
    } catch (...) {
      failed[0] = std::current_exception();
    }
#pragma omp section
    try {
      out.fields2 = solver.solve_dyadic(r2);
    } catch (...) {
      failed[1] = std::current_exception();
    }
  }
  for (const auto& e : failed) {
    if (e) std::rethrow_exception(e);
  }
  out.g11 = solver.total_green(r1, r1, out.fields1);
  out.g22 = solver.total_green(r2, r2, out.fields2);
  out.g12 = solver.total_green(r1, r2, out.fields2);
  out.g21 = solver.total_green(r2, r1, out.fields1);
  return out;
}

double distance_to_scatterer(const PermittivityGrid& grid, const Position& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < grid.size(); ++m) {
    if (grid.eps[m] != 1.0) best = std::min(best, (grid.center(m) - p).norm());
  }
  return best;
}

}  // namespace cloakopt::vie
