#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cloakopt/em/green.hpp"
#include "cloakopt/vie/grid.hpp"
#include "cloakopt/vie/interaction.hpp"
#include "cloakopt/vie/solver.hpp"

using namespace cloakopt;
using namespace cloakopt::vie;

namespace {

constexpr double kK = 2.0 * std::numbers::pi;

double rel_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(a[i]);
  }
  return std::sqrt(num / den);
}

PermittivityGrid random_grid(std::mt19937_64& rng, std::array<int, 3> dims, double spacing,
                             double fill = 0.5) {
  auto g = PermittivityGrid::centered(dims, spacing);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& e : g.eps) {
    if (u(rng) < fill) e = 1.0 + 8.0 * u(rng);
  }
  return g;
}

double dyad_rel(const em::Dyad33& a, const em::Dyad33& b) {
  return (a - b).norm() / b.norm();
}

}  // namespace

TEST_CASE("grid geometry") {
  auto g = PermittivityGrid::centered({4, 3, 2}, 0.1);
  CHECK(g.size() == 24);
  CHECK(g.index(1, 2, 1) == 1 + 4 * (2 + 3 * 1));
  const auto c = g.coords(g.index(3, 1, 1));
  CHECK(c == std::array<int, 3>{3, 1, 1});
  CHECK(g.center(0).isApprox(Position(-0.15, -0.1, -0.05)));
  CHECK(g.scatterer_count() == 0);
  g.eps[3] = 10.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.eps[3] = 0.5;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  CHECK(PermittivityGrid::centered({2, 2, 2}, 1.0 / 32.0).discretization_ok());
  CHECK_FALSE(PermittivityGrid::centered({2, 2, 2}, 0.05).discretization_ok());
}

TEST_CASE("interaction kernels") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  const Lattice lat{{6, 6, 6}, 1.0 / 16.0};
  std::vector<cplx> p(3 * lat.size()), direct(p.size()), omp(p.size()), fft(p.size());
  for (auto& v : p) v = {nd(rng), nd(rng)};

  interaction_direct_serial(lat, kK, p, direct);
  interaction_direct_omp(lat, kK, p, omp);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(omp[i] == direct[i]);

  FftInteraction f(lat, kK);
  f.apply(p, fft);
  CHECK(rel_diff(direct, fft) <= 1e-10);

  SUBCASE("a single dipole reproduces the free-space column") {
    std::vector<cplx> delta(p.size(), 0.0), out(p.size());
    const std::size_t src = 2 + 6 * (3 + 6 * 1);
    delta[3 * src + 0] = 1.0;
    f.apply(delta, out);
    for (std::size_t m = 0; m < lat.size(); ++m) {
      const Position rm(double(m % 6), double((m / 6) % 6), double(m / 36));
      const Position rs(2.0, 3.0, 1.0);
      if (m == src) {
        CHECK(std::abs(out[3 * m]) < 1e-10);
        continue;
      }
      const em::Dyad33 g = em::free_space_green(rm * lat.spacing, rs * lat.spacing, kK);
      for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(out[3 * m + a] - kK * kK * g(a, 0)) <= 1e-9 * std::abs(kK * kK * g.norm()));
      }
    }
  }

  SUBCASE("linearity") {
    std::vector<cplx> q(p.size()), fq(p.size()), combo(p.size()), fcombo(p.size());
    for (auto& v : q) v = {nd(rng), nd(rng)};
    const cplx alpha(0.3, -1.2), beta(-2.0, 0.5);
    for (std::size_t i = 0; i < p.size(); ++i) combo[i] = alpha * p[i] + beta * q[i];
    f.apply(q, fq);
    f.apply(combo, fcombo);
    std::vector<cplx> expect(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) expect[i] = alpha * fft[i] + beta * fq[i];
    CHECK(rel_diff(expect, fcombo) <= 1e-12);
  }

  SUBCASE("odd and anisotropic lattices") {
    for (auto dims : {std::array<int, 3>{5, 3, 7}, std::array<int, 3>{1, 1, 9},
                      std::array<int, 3>{12, 12, 12}}) {
      const Lattice l2{dims, 0.04};
      std::vector<cplx> x(3 * l2.size()), a(x.size()), b(x.size());
      for (auto& v : x) v = {nd(rng), nd(rng)};
      interaction_direct_serial(l2, kK, x, a);
      FftInteraction(l2, kK).apply(x, b);
      CHECK(rel_diff(a, b) <= 1e-10);
    }
  }
}

TEST_CASE("dense assembly") {
  SUBCASE("vacuum is the identity") {
    const auto g = PermittivityGrid::centered({3, 3, 3}, 0.05);
    const Eigen::MatrixXcd a = assemble_dense(g, kK);
    CHECK((a - Eigen::MatrixXcd::Identity(a.rows(), a.cols())).norm() == 0.0);
  }
  SUBCASE("parallel matches serial") {
    std::mt19937_64 rng(4);
    const auto g = random_grid(rng, {4, 3, 5}, 0.05);
    CHECK((assemble_dense(g, kK) - assemble_dense_serial(g, kK)).norm() == 0.0);
  }
  SUBCASE("size limit") {
    const auto g = PermittivityGrid::centered({13, 13, 12}, 0.01);
    CHECK_THROWS_AS(assemble_dense(g, kK), std::length_error);
    SolverOptions o;
    o.method = SolveMethod::dense;
    CHECK_THROWS_AS(VieSolver(g, kK, o), std::length_error);
  }
}

TEST_CASE("two-voxel system against a hand-assembled solve") {
  auto g = PermittivityGrid::uniform(Position(0.0, 0.0, 0.0), 0.05, {2, 1, 1});
  g.eps = {2.5, 4.0};
  const double dv = g.voxel_volume();
  const cplx c = SelfTermScheme{}.coefficient(dv, kK);
  const em::Dyad33 g01 = em::free_space_green(g.center(0), g.center(1), kK);

  Eigen::Matrix<cplx, 6, 6> a = Eigen::Matrix<cplx, 6, 6>::Zero();
  for (int m = 0; m < 2; ++m) {
    a.block<3, 3>(3 * m, 3 * m) = (1.0 - (g.eps[m] - 1.0) * c) * Eigen::Matrix3cd::Identity();
  }
  a.block<3, 3>(0, 3) = -kK * kK * (g.eps[1] - 1.0) * dv * g01;
  a.block<3, 3>(3, 0) = -kK * kK * (g.eps[0] - 1.0) * dv * g01.transpose();

  // The hand-built matrix is the one the solver assembles.
  CHECK((assemble_dense(g, kK) - a).norm() <= 1e-12 * a.norm());

  const Position src(0.025, 0.025, 0.3);
  const em::Direction p(0.0, 0.6, 0.8);
  Eigen::Matrix<cplx, 6, 1> inc;
  for (int m = 0; m < 2; ++m) inc.segment<3>(3 * m) = em::free_space_green(g.center(m), src, kK) * p;
  const Eigen::Matrix<cplx, 6, 1> expect = a.partialPivLu().solve(inc);

  for (auto method : {SolveMethod::dense, SolveMethod::iterative}) {
    const FieldMap fm = solve_fields(g, src, p, kK, method);
    for (int m = 0; m < 2; ++m) {
      CHECK((fm.values[m] - expect.segment<3>(3 * m)).norm() <= 1e-8 * expect.norm());
    }
  }
}

TEST_CASE("single voxel is the Born term up to local-field renormalization") {
  const Position src(0.0, 0.0, 0.2), obs(0.15, 0.0, -0.1);
  auto scattered = [&](double delta) {
    auto g = PermittivityGrid::uniform(Position::Constant(-1.0 / 32.0), 1.0 / 16.0, {1, 1, 1});
    g.eps[0] = 1.0 + delta;
    SolverOptions o;
    o.method = SolveMethod::dense;
    const VieSolver s(g, kK, o);
    return s.scattered_green(obs, s.solve_dyadic(src));
  };
  auto born = [&](double delta) -> em::Dyad33 {
    const Position r0 = Position::Zero();
    const double dv = std::pow(1.0 / 16.0, 3);
    return kK * kK * delta * dv * em::free_space_green(obs, r0, kK) *
           em::free_space_green(r0, src, kK);
  };
  const double e1 = (scattered(0.02) - born(0.02)).norm();
  const double e2 = (scattered(0.01) - born(0.01)).norm();
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
  // Exact ratio: E = E_inc / (1 - chi c).
  const cplx c = SelfTermScheme{}.coefficient(std::pow(1.0 / 16.0, 3), kK);
  CHECK((scattered(0.3) - born(0.3) / (1.0 - 0.3 * c)).norm() <= 1e-12 * born(0.3).norm());
}

TEST_CASE("vacuum grid leaves the source field untouched") {
  const auto g = PermittivityGrid::centered({4, 4, 4}, 0.05);
  const Position src(0.0, 0.0, 0.4);
  const em::Direction p(0.0, 0.0, 1.0);
  for (auto method : {SolveMethod::dense, SolveMethod::iterative}) {
    const FieldMap fm = solve_fields(g, src, p, kK, method);
    for (std::size_t m = 0; m < g.size(); ++m) {
      CHECK((fm.values[m] - em::free_space_green(g.center(m), src, kK) * p).norm() <= 1e-14);
    }
  }
  const GreenPair pair = scattered_green_pair(g, Position(0, 0, 0.4), Position(0, 0, -0.4), kK);
  CHECK(dyad_rel(pair.g12, em::free_space_green(Position(0, 0, 0.4), Position(0, 0, -0.4), kK)) <=
        1e-14);
  const auto c = em::couplings_from_green(pair.g11, pair.g22, pair.g12, em::Direction::UnitZ(), kK);
  CHECK(c.purcell == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.gamma22 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Rayleigh sphere polarizability") {
  const double radius = 0.05, eps = 2.25;
  const int n = 10;
  auto g = PermittivityGrid::uniform(Position::Zero(), 1.0, {n, n, n});
  std::vector<std::size_t> inside;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const auto c = g.coords(m);
    const double x = c[0] + 0.5 - n / 2.0, y = c[1] + 0.5 - n / 2.0, z = c[2] + 0.5 - n / 2.0;
    if (x * x + y * y + z * z <= n * n / 4.0) inside.push_back(m);
  }
  // Voxel size chosen so the staircase sphere has the target volume.
  g.spacing = radius * std::cbrt(4.0 * std::numbers::pi / (3.0 * inside.size()));
  g.origin = Position::Constant(-n * g.spacing / 2.0);
  for (auto m : inside) g.eps[m] = eps;

  SolverOptions o;
  o.tolerance = 1e-10;
  const VieSolver s(g, kK, o);
  Eigen::VectorXcd inc = Eigen::VectorXcd::Zero(3 * g.size());
  for (std::size_t m = 0; m < g.size(); ++m) inc(3 * m + 2) = 1.0;
  const Eigen::VectorXcd e = s.solve(inc);
  cplx pz = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) pz += (g.eps[m] - 1.0) * g.voxel_volume() * e(3 * m + 2);
  const double alpha0 = 4.0 * std::numbers::pi * std::pow(radius, 3) * (eps - 1.0) / (eps + 2.0);
  CHECK(std::abs(pz) / alpha0 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("dense and iterative paths agree") {
  std::mt19937_64 rng(8);
  for (auto dims : {std::array<int, 3>{4, 4, 4}, std::array<int, 3>{6, 5, 6},
                    std::array<int, 3>{6, 6, 6}}) {
    const auto g = random_grid(rng, dims, 1.0 / 32.0);
    SolverOptions dense, iter;
    dense.method = SolveMethod::dense;
    iter.tolerance = 1e-10;
    const Position r1(0.0, 0.0, 0.2), r2(0.0, 0.05, -0.25);
    const GreenPair a = scattered_green_pair(g, r1, r2, kK, dense);
    const GreenPair b = scattered_green_pair(g, r1, r2, kK, iter);
    CHECK(dyad_rel(b.g11, a.g11) <= 1e-6);
    CHECK(dyad_rel(b.g22, a.g22) <= 1e-6);
    CHECK(dyad_rel(b.g12, a.g12) <= 1e-6);
  }
}

TEST_CASE("Purcell factor near a dielectric sphere") {
  const double spacing = 1.0 / 32.0;
  auto g = PermittivityGrid::centered({6, 6, 6}, spacing);
  for (std::size_t m = 0; m < g.size(); ++m) {
    if (g.center(m).norm() <= 3.0 * spacing) g.eps[m] = 4.0;
  }
  const Position r1(0.0, 0.0, 3.0 * spacing + 0.3), r2(0.0, 0.0, -3.0 * spacing - 0.3);
  SolverOptions dense, iter;
  dense.method = SolveMethod::dense;
  iter.tolerance = 1e-11;
  const em::Direction z = em::Direction::UnitZ();
  const GreenPair a = scattered_green_pair(g, r1, r2, kK, dense);
  const GreenPair b = scattered_green_pair(g, r1, r2, kK, iter);
  const double fa = em::couplings_from_green(a.g11, a.g22, a.g12, z, kK).purcell;
  const double fb = em::couplings_from_green(b.g11, b.g22, b.g12, z, kK).purcell;
  CHECK(std::abs(fa - fb) <= 1e-6 * fa);
  CHECK(std::abs(fa - 1.0) > 1e-4);  // the sphere is visible
}

TEST_CASE("reciprocity and passivity on random grids") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const auto g = random_grid(rng, {4, 4, 4}, 1.0 / 32.0, 0.4);
    const Position r1(0.3 * u(rng), 0.3 * u(rng), 0.2 + 0.1 * std::abs(u(rng)));
    const Position r2(0.3 * u(rng), 0.3 * u(rng), -0.2 - 0.1 * std::abs(u(rng)));
    SolverOptions o;
    o.tolerance = 1e-11;
    const GreenPair pair = scattered_green_pair(g, r1, r2, kK, o);
    CHECK(dyad_rel(pair.g21.transpose(), pair.g12) <= 1e-8);
    CHECK(dyad_rel(pair.g11.transpose(), pair.g11) <= 1e-8);

    em::Direction p(u(rng), u(rng), u(rng));
    p.normalize();
    // A lossless scatterer keeps the local density of states positive and
    // the cross-spectral matrix positive semidefinite.
    CHECK_NOTHROW(em::couplings_from_green(pair.g11, pair.g22, pair.g12, p, kK));
  }
}

TEST_CASE("solver failure modes") {
  std::mt19937_64 rng(2);
  const auto g = random_grid(rng, {5, 5, 5}, 1.0 / 16.0, 0.8);
  SolverOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-14;
  const VieSolver s(g, kK, o);
  try {
    s.solve_fields(Position(0.0, 0.0, 0.5), em::Direction::UnitZ());
    FAIL("expected non-convergence");
  } catch (const SolverError& e) {
    CHECK(e.residual() > 1e-14);
  }
  CHECK_THROWS_AS(s.solve(Eigen::VectorXcd::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(scattered_green_pair(g, Position(0, 0, 1), Position(0, 0, 1), kK),
                  em::CoincidentPointsError);
}

TEST_CASE("distance to scatterer") {
  auto g = PermittivityGrid::centered({3, 3, 3}, 0.1);
  g.eps[g.index(1, 1, 1)] = 3.0;
  CHECK(distance_to_scatterer(g, Position(0.0, 0.0, 0.5)) == doctest::Approx(0.5));
}
