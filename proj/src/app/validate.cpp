#include "cloakopt/app/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "cloakopt/app/io.hpp"
#include "cloakopt/em/green.hpp"
#include "cloakopt/optimizer/design.hpp"
#include "cloakopt/quantum/master_equation.hpp"
#include "cloakopt/quantum/witnesses.hpp"
#include "cloakopt/vie/interaction.hpp"
#include "cloakopt/vie/solver.hpp"

namespace cloakopt::app {

namespace {

constexpr double kK = em::UnitSystem::k0;

using em::Position;
using Rng = std::mt19937_64;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

Outcome below(double value, double limit, const std::string& what) {
  return {value <= limit, what + " = " + sci(value) + " (limit " + sci(limit) + ")"};
}

vie::PermittivityGrid random_grid(Rng& rng, std::array<int, 3> dims, double spacing, double fill) {
  auto g = vie::PermittivityGrid::centered(dims, spacing);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& e : g.eps) {
    if (u(rng) < fill) e = 1.0 + 8.0 * u(rng);
  }
  return g;
}

quantum::MasterEqParams random_params(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  quantum::MasterEqParams p;
  p.gamma11 = 0.2 + 2.0 * u(rng);
  p.gamma22 = 0.2 + 2.0 * u(rng);
  p.gamma12 = (2.0 * u(rng) - 1.0) * std::sqrt(p.gamma11 * p.gamma22);
  p.g12 = 4.0 * (u(rng) - 0.5);
  p.pump = std::exp(std::log(1e-3) + std::log(2e3) * u(rng));
  return p;
}

Outcome free_space_closed_forms(Rng&, const ValidateOptions&) {
  double worst = 0.0;
  const Position origin = Position::Zero();
  for (int i = 0; i < 100; ++i) {
    const double d = 0.05 * std::pow(100.0, (i + 0.5) / 100.0);
    const auto g = em::free_space_green(origin, Position(0.0, 0.0, d), kK);
    const auto self = em::free_space_self_green(kK);
    const auto c = em::couplings_from_green(self, self, g, em::Direction::UnitZ(), kK);
    const double x = kK * d;
    worst = std::max({worst, std::abs(c.gamma12 / em::aligned_gamma12(x) - 1.0),
                      std::abs(c.g12 / em::aligned_g12(x) - 1.0)});
  }
  return below(worst, 1e-10, "max relative error");
}

Outcome free_space_reciprocity(Rng& rng, const ValidateOptions&) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Position a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const auto gab = em::free_space_green(a, b, kK);
    worst = std::max({worst, (gab - em::free_space_green(b, a, kK).transpose()).norm() / gab.norm(),
                      (gab - gab.transpose()).norm() / gab.norm()});
  }
  return below(worst, 1e-14, "max asymmetry");
}

Outcome fft_vs_direct(Rng& rng, const ValidateOptions&) {
  const vie::Lattice lat{{6, 6, 6}, 1.0 / 16.0};
  std::normal_distribution<double> nd;
  std::vector<em::cplx> p(3 * lat.size()), a(p.size()), b(p.size());
  for (auto& v : p) v = {nd(rng), nd(rng)};
  vie::interaction_direct_serial(lat, kK, p, a);
  vie::FftInteraction(lat, kK).apply(p, b);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(a[i]);
  }
  return below(std::sqrt(num / den), 1e-10, "relative difference");
}

Outcome serial_vs_parallel(Rng& rng, const ValidateOptions&) {
  const auto g = random_grid(rng, {5, 4, 6}, 0.05, 0.5);
  const double assembly = (vie::assemble_dense(g, kK) - vie::assemble_dense_serial(g, kK)).norm();
  const vie::Lattice lat{g.dims, g.spacing};
  std::normal_distribution<double> nd;
  std::vector<em::cplx> p(3 * lat.size()), a(p.size()), b(p.size());
  for (auto& v : p) v = {nd(rng), nd(rng)};
  vie::interaction_direct_serial(lat, kK, p, a);
  vie::interaction_direct_omp(lat, kK, p, b);
  double kernel = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kernel = std::max(kernel, std::abs(a[i] - b[i]));
  return below(std::max(assembly, kernel), 0.0, "max difference");
}

Outcome rayleigh_sphere(Rng&, const ValidateOptions& opt) {
  const double radius = 0.05, eps = 2.25;
  const int n = 10;
  auto g = vie::PermittivityGrid::uniform(Position::Zero(), 1.0, {n, n, n});
  std::vector<std::size_t> inside;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const auto c = g.coords(m);
    const double x = c[0] + 0.5 - n / 2.0, y = c[1] + 0.5 - n / 2.0, z = c[2] + 0.5 - n / 2.0;
    if (x * x + y * y + z * z <= n * n / 4.0) inside.push_back(m);
  }
  g.spacing = radius * std::cbrt(4.0 * std::numbers::pi / (3.0 * inside.size()));
  g.origin = Position::Constant(-n * g.spacing / 2.0);
  for (auto m : inside) g.eps[m] = eps;

  vie::SolverOptions so;
  so.tolerance = 1e-10;
  if (opt.corrupt_self_term) so.self_term.depolarization = 0.0;
  const vie::VieSolver s(g, kK, so);
  Eigen::VectorXcd inc = Eigen::VectorXcd::Zero(3 * g.size());
  for (std::size_t m = 0; m < g.size(); ++m) inc(3 * m + 2) = 1.0;
  const Eigen::VectorXcd e = s.solve(inc);
  em::cplx pz = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) pz += (g.eps[m] - 1.0) * g.voxel_volume() * e(3 * m + 2);
  const double alpha0 = 4.0 * std::numbers::pi * std::pow(radius, 3) * (eps - 1.0) / (eps + 2.0);
  return below(std::abs(std::abs(pz) / alpha0 - 1.0), 0.05, "|alpha / alpha_CM - 1|");
}

Outcome dense_vs_iterative(Rng& rng, const ValidateOptions&) {
  double worst = 0.0;
  for (auto dims : {std::array<int, 3>{4, 4, 4}, std::array<int, 3>{5, 5, 5},
                    std::array<int, 3>{6, 6, 6}}) {
    const auto g = random_grid(rng, dims, 1.0 / 32.0, 0.5);
    vie::SolverOptions dense, iter;
    dense.method = vie::SolveMethod::dense;
    iter.tolerance = 1e-10;
    const Position r1(0.0, 0.0, 0.2), r2(0.0, 0.05, -0.25);
    const auto a = vie::scattered_green_pair(g, r1, r2, kK, dense);
    const auto b = vie::scattered_green_pair(g, r1, r2, kK, iter);
    for (auto [x, y] : {std::pair{&a.g11, &b.g11}, std::pair{&a.g22, &b.g22},
                        std::pair{&a.g12, &b.g12}}) {
      worst = std::max(worst, (*x - *y).norm() / x->norm());
    }
  }
  return below(worst, 1e-6, "max relative difference");
}

Outcome structured_reciprocity(Rng& rng, const ValidateOptions&) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto g = random_grid(rng, {4, 4, 4}, 1.0 / 32.0, 0.4);
    const Position r1(0.3 * u(rng), 0.3 * u(rng), 0.25), r2(0.3 * u(rng), 0.3 * u(rng), -0.25);
    vie::SolverOptions o;
    o.tolerance = 1e-11;
    const auto pair = vie::scattered_green_pair(g, r1, r2, kK, o);
    worst = std::max(worst, (pair.g21.transpose() - pair.g12).norm() / pair.g12.norm());
    // Throws if a lossless scatterer produced a negative decay rate.
    em::couplings_from_green(pair.g11, pair.g22, pair.g12, em::Direction::UnitZ(), kK);
  }
  return below(worst, 1e-8, "max |G21^T - G12| / |G12|");
}

Outcome isolation_population(Rng& rng, const ValidateOptions&) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double gamma = 0.1 + 3.0 * u(rng);
    const double pump = std::exp(std::log(1e-4) + std::log(1e5) * u(rng));
    const auto rho = quantum::steady_state({gamma, gamma, 0.0, 0.0, pump});
    const double expect = pump / (pump + gamma);
    worst = std::max({worst, std::abs(rho.rho11() + rho.rho33() - expect),
                      std::abs(rho.rho22() + rho.rho33() - expect)});
  }
  return below(worst, 1e-12, "max population error");
}

Outcome steady_state_invariants(Rng& rng, const ValidateOptions&) {
  double worst = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const auto p = random_params(rng);
    const auto rho = quantum::steady_state(p);
    worst = std::max({worst, rho.hermiticity_error(), std::abs(rho.trace() - 1.0),
                      std::max(0.0, -rho.min_eigenvalue()), quantum::steady_state_residual(p, rho),
                      rho.x_structure_error()});
  }
  return below(worst, 1e-9, "worst invariant violation");
}

Outcome propagation(Rng& rng, const ValidateOptions&) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    auto p = random_params(rng);
    p.pump = 0.05 + 0.95 * u(rng);
    quantum::PropagationOptions opt;
    opt.dt = 0.01 / std::max({p.gamma11, p.gamma22, std::abs(p.g12), p.pump});
    const auto a = quantum::propagate_to_steady(p, quantum::DensityMatrix4::ground(), opt);
    const auto b = quantum::steady_state(p);
    worst = std::max(worst, (a.matrix() - b.matrix()).cwiseAbs().maxCoeff());
  }
  return below(worst, 1e-8, "max element difference");
}

Outcome witness_equivalence(Rng& rng, const ValidateOptions&) {
  double worst = 0.0;
  int sign_mismatch = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto rho = quantum::steady_state(random_params(rng));
    const double c = quantum::concurrence(rho), n = quantum::negativity(rho);
    worst = std::max({worst, std::abs(c - quantum::concurrence_wootters(rho)),
                      std::abs(n - quantum::negativity_partial_transpose(rho))});
    if ((c > 0.0) != (n > 0.0)) ++sign_mismatch;
  }
  Outcome o = below(worst, 1e-10, "max closed-form error");
  if (sign_mismatch) {
    o.pass = false;
    o.detail += ", C>0 and N>0 disagree on " + std::to_string(sign_mismatch) + " states";
  }
  return o;
}

Outcome mems_branches(Rng&, const ValidateOptions&) {
  const auto lo = quantum::mems_curve(0.0), hi = quantum::mems_curve(1.0);
  const double r = 2.0 / 3.0;
  double err = std::max({std::abs(lo.linear_entropy - 8.0 / 9.0), std::abs(hi.linear_entropy),
                         std::abs(quantum::mems_curve(r).linear_entropy - 16.0 / 27.0),
                         std::abs(8.0 / 9.0 - 2.0 / 3.0 * r * r - 16.0 / 27.0)});
  for (int i = 0; i <= 200; ++i) {
    const double x = i / 200.0;
    const auto s = quantum::mems_state(x);
    err = std::max({err, std::abs(quantum::concurrence_wootters(s) - x),
                    std::abs(quantum::linear_entropy(s) - quantum::mems_curve(x).linear_entropy)});
  }
  return below(err, 1e-9, "max branch error");
}

Outcome mems_bound(Rng& rng, const ValidateOptions&) {
  double excess = 0.0;
  for (int t = 0; t < 20000; ++t) {
    const auto rho = quantum::random_density_matrix(rng);
    const double s = quantum::linear_entropy(rho);
    excess = std::max(excess, quantum::concurrence_wootters(rho) -
                                  quantum::mems_concurrence_at_entropy(s));
  }
  return below(excess, 1e-12, "max excess over the curve");
}

struct Toy {
  vie::PermittivityGrid grid = vie::PermittivityGrid::centered({4, 4, 4}, 1.0 / 16.0);
  optimizer::Emitters emitters = optimizer::Emitters::on_z_axis(0.5);
  vie::SolverOptions solver;
  Toy() { solver.tolerance = 1e-11; }
  vie::GreenPair solve(const vie::PermittivityGrid& g) const {
    return vie::scattered_green_pair(g, emitters.r1, emitters.r2, kK, solver);
  }
};

Outcome born_derivative(Rng& rng, const ValidateOptions&) {
  Toy toy;
  toy.grid = random_grid(rng, {4, 4, 4}, 1.0 / 16.0, 0.3);
  const auto state = toy.solve(toy.grid);
  const std::size_t v = toy.grid.index(1, 2, 1);
  const double delta = 1e-5;
  const auto inc = optimizer::voxel_increment(state, v, delta, toy.grid.voxel_volume(), kK);
  auto g = toy.grid;
  g.eps[v] += delta;
  const auto next = optimizer::TensorTriple::from(toy.solve(g));
  const auto base = optimizer::TensorTriple::from(state);
  const double err = std::max({(next.g11 - base.g11 - inc.g11).norm() / inc.g11.norm(),
                               (next.g22 - base.g22 - inc.g22).norm() / inc.g22.norm(),
                               (next.g12 - base.g12 - inc.g12).norm() / inc.g12.norm()});
  return below(err, 1e-3, "relative first-order error");
}

Outcome born_sum_one_voxel(Rng&, const ValidateOptions&) {
  Toy toy;
  const auto state = toy.solve(toy.grid);
  const std::size_t v = toy.grid.index(1, 1, 1);
  auto g = toy.grid;
  g.eps[v] += 0.05;
  const auto inc = optimizer::voxel_increment(state, v, 0.05, toy.grid.voxel_volume(), kK);
  const double m = optimizer::verify_convergence(optimizer::TensorTriple::from(state), inc, g,
                                                 toy.emitters, kK, toy.solver);
  return below(m, 1e-3, "mismatch");
}

Outcome frozen_reference_order(Rng& rng, const ValidateOptions&) {
  Toy toy;
  toy.emitters = optimizer::Emitters::on_z_axis(0.2);
  optimizer::DesignConfig cfg;
  cfg.sweep_mode = optimizer::SweepMode::frozen_reference;
  optimizer::freeze_exclusion_zone(toy.grid, toy.emitters, 1.0);
  const auto state = toy.solve(toy.grid);
  const auto ref = optimizer::sweep_once(toy.grid, cfg, state, toy.emitters, kK, 0.05);
  std::vector<std::size_t> order(optimizer::voxel_orbits(toy.grid, cfg.symmetry).size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int differing = 0;
  for (int t = 0; t < 5; ++t) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto s = optimizer::sweep_once(toy.grid, cfg, state, toy.emitters, kK, 0.05, order);
    if (s.accepted_voxels != ref.accepted_voxels || s.grid.eps != ref.grid.eps) ++differing;
  }
  return {differing == 0 && ref.accepted_count > 0,
          std::to_string(ref.accepted_count) + " accepted, " + std::to_string(differing) +
              " of 5 permutations differ"};
}

Outcome design_invariants(Rng&, const ValidateOptions&) {
  auto grid = vie::PermittivityGrid::centered({6, 6, 6}, 1.0 / 16.0);
  const auto emitters = optimizer::Emitters::on_z_axis(0.25);
  optimizer::DesignConfig cfg;
  cfg.exclusion_radius = 1.0;
  cfg.symmetry = optimizer::Symmetry::mirror_z;
  cfg.max_iterations = 20;
  const auto r = optimizer::optimize(grid, emitters, cfg);
  std::vector<std::string> problems;
  double purcell_asym = 0.0;
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& c = r.trace[i].couplings;
    purcell_asym = std::max(purcell_asym, std::abs(c.gamma11 - c.gamma22) / c.gamma11);
    if (i == 0) continue;
    if (r.trace[i].target < r.trace[i - 1].target) problems.push_back("target decreased");
    if (r.trace[i].born_mismatch > cfg.eta_converge) problems.push_back("mismatch above eta");
  }
  for (double e : r.grid.eps) {
    if (e < 1.0 || e > cfg.eps_max) problems.push_back("eps out of bounds");
  }
  if (purcell_asym > 1e-6) problems.push_back("Purcell factors differ");
  if (!(r.final_target() > r.initial_target())) problems.push_back("no improvement");
  std::ostringstream s;
  s << r.trace.size() - 1 << " iterations, C " << r.initial_target() << " -> " << r.final_target();
  for (const auto& p : problems) s << "; " << p;
  return {problems.empty(), s.str()};
}

Outcome eps_roundtrip(Rng& rng, const ValidateOptions&) {
  auto g = random_grid(rng, {3, 4, 5}, 0.0625, 0.7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& e : g.eps) e = 1.0 + 8.0 * u(rng) * u(rng);
  g.frozen[3] = 1;
  g.eps[3] = 1.0;
  const optimizer::Emitters em = optimizer::Emitters::on_z_axis(0.3);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("cloakopt-validate-" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  write_eps_csv(dir / "design.eps.csv", g);
  write_json(dir / "design.meta.json", design_meta(g, em));
  const auto back = read_design(dir / "design.eps.csv", dir / "design.meta.json");
  std::filesystem::remove_all(dir);
  const bool same = back.grid.eps == g.eps && back.grid.frozen == g.frozen &&
                    back.grid.dims == g.dims && back.grid.spacing == g.spacing &&
                    back.grid.origin == g.origin && back.emitters.r1 == em.r1 &&
                    back.emitters.r2 == em.r2;
  return {same, same ? "bit-identical" : "round-trip changed the grid"};
}

using CheckFn = Outcome (*)(Rng&, const ValidateOptions&);

const std::vector<std::pair<std::string, CheckFn>>& checks() {
  static const std::vector<std::pair<std::string, CheckFn>> table = {
      {"em.free_space_closed_forms", free_space_closed_forms},
      {"em.free_space_reciprocity", free_space_reciprocity},
      {"vie.fft_matches_direct_sum", fft_vs_direct},
      {"vie.parallel_matches_serial", serial_vs_parallel},
      {"vie.rayleigh_sphere", rayleigh_sphere},
      {"vie.dense_matches_iterative", dense_vs_iterative},
      {"vie.reciprocity_and_passivity", structured_reciprocity},
      {"quantum.isolation_population", isolation_population},
      {"quantum.steady_state_invariants", steady_state_invariants},
      {"quantum.propagation_matches_kernel", propagation},
      {"quantum.witness_closed_forms", witness_equivalence},
      {"quantum.mems_branches", mems_branches},
      {"quantum.mems_upper_bound", mems_bound},
      {"optimizer.born_first_derivative", born_derivative},
      {"optimizer.born_sum_one_voxel", born_sum_one_voxel},
      {"optimizer.frozen_reference_order", frozen_reference_order},
      {"optimizer.design_invariants", design_invariants},
      {"cli.eps_map_roundtrip", eps_roundtrip},
  };
  return table;
}

}  // namespace

std::vector<std::string> validation_check_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : checks()) names.push_back(name);
  return names;
}

std::vector<CheckResult> run_validation(const ValidateOptions& options,
                                        const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> out;
  std::uint64_t stream = 0;
  for (const auto& [name, fn] : checks()) {
    // Each check draws from its own stream so adding a check leaves the others unchanged.
    Rng rng(options.seed * 0x9E3779B97F4A7C15ULL + (++stream));
    CheckResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Outcome o = fn(rng, options);
      r.pass = o.pass;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cloakopt::app
