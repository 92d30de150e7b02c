#include <doctest.h>

#include <cmath>
#include <random>

#include "cloakopt/quantum/master_equation.hpp"
#include "cloakopt/quantum/witnesses.hpp"

using namespace cloakopt::quantum;

namespace {

MasterEqParams random_params(std::mt19937_64& rng, double pump_lo = 1e-3, double pump_hi = 2.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MasterEqParams p;
  p.gamma11 = 0.2 + 2.0 * u(rng);
  p.gamma22 = 0.2 + 2.0 * u(rng);
  p.gamma12 = (2.0 * u(rng) - 1.0) * std::sqrt(p.gamma11 * p.gamma22);
  p.g12 = 4.0 * (u(rng) - 0.5);
  p.pump = std::exp(std::log(pump_lo) + (std::log(pump_hi) - std::log(pump_lo)) * u(rng));
  return p;
}

// Oracle for gamma12 = gamma, g12 = 0: the dynamics reduce to a classical
// Markov chain over {G, S, A, E} (ground, symmetric, antisymmetric, doubly
// excited). Returns (concurrence, rho00, rho33) from the stationary distribution.
struct ChainResult {
  double concurrence, rho00, rho33;
};
ChainResult dicke_chain(double gamma, double pump) {
  // Generator Q with rows = from-state: G->S, G->A at P; S->E, A->E at P;
  // S->G, E->S at 2 gamma; the antisymmetric state is dark.
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  enum { G, S, A, E };
  q(G, S) = pump;
  q(G, A) = pump;
  q(S, E) = pump;
  q(A, E) = pump;
  q(S, G) = 2.0 * gamma;
  q(E, S) = 2.0 * gamma;
  for (int i = 0; i < 4; ++i) q(i, i) = -q.row(i).sum();
  // Stationary pi: pi Q = 0, sum pi = 1.
  Eigen::Matrix<double, 5, 4> m;
  m.topRows<4>() = q.transpose();
  m.row(4).setOnes();
  Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
  rhs(4) = 1.0;
  const Eigen::Vector4d pi = m.colPivHouseholderQr().solve(rhs);
  const double coherence = std::abs(pi(S) - pi(A)) / 2.0;
  return {2.0 * std::max(0.0, coherence - std::sqrt(pi(G) * pi(E))), pi(G), pi(E)};
}

}  // namespace

TEST_CASE("Liouvillian structure") {
  SUBCASE("decay only keeps the ground state") {
    const MasterEqParams p{1.0, 1.0, 0.0, 0.0, 0.0};
    const Liouvillian l = build_liouvillian(p);
    const Vec16 ground = vectorize(DensityMatrix4::ground().matrix());
    CHECK((l * ground).norm() < 1e-15);
  }

  SUBCASE("coherent coupling alone is skew-adjoint") {
    MasterEqParams p{1.0, 1.0, 0.0, 0.7, 0.0};
    Liouvillian l = build_liouvillian(p);
    // Remove the decay part to isolate -i[H, .].
    l -= build_liouvillian({1.0, 1.0, 0.0, 0.0, 0.0});
    CHECK((l + l.adjoint()).norm() < 1e-14);
    Eigen::ComplexEigenSolver<Liouvillian> es(l);
    CHECK(es.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("trace preservation") {
    std::mt19937_64 rng(5);
    Vec16 trace_row = Vec16::Zero();
    for (int i = 0; i < 4; ++i) trace_row(5 * i) = 1.0;
    for (int t = 0; t < 200; ++t) {
      const Liouvillian l = build_liouvillian(random_params(rng));
      CHECK((trace_row.transpose() * l).norm() < 1e-13);
      const DensityMatrix4 rho = random_density_matrix(rng);
      CHECK(std::abs((trace_row.transpose() * l * vectorize(rho.matrix()))(0)) <= 1e-12);
    }
  }

  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(build_liouvillian({0.0, 1.0, 0.0, 0.0, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(build_liouvillian({1.0, 1.0, 1.1, 0.0, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(build_liouvillian({1.0, 1.0, 0.0, 0.0, -0.1}), std::invalid_argument);
  }
}

TEST_CASE("steady state examples") {
  SUBCASE("isolated emitters") {
    for (double pump : {5e-3, 0.3, 2.0}) {
      const DensityMatrix4 rho = steady_state({1.0, 1.0, 0.0, 0.0, pump});
      const double excited = rho.rho11() + rho.rho33();
      CHECK(excited == doctest::Approx(pump / (pump + 1.0)).epsilon(1e-12));
    }
    const DensityMatrix4 rho = steady_state({1.0, 1.0, 0.0, 0.0, 5e-3});
    CHECK(rho.rho11() + rho.rho33() == doctest::Approx(4.9751e-3).epsilon(1e-4));
  }

  SUBCASE("balanced pump and decay") {
    const DensityMatrix4 rho = steady_state({1.0, 1.0, 0.0, 0.0, 1.0});
    CHECK((rho.matrix() - DensityMatrix4::maximally_mixed().matrix()).cwiseAbs().maxCoeff() <
          1e-12);
  }

  SUBCASE("ideal dissipative coupling against the Dicke-ladder chain") {
    const double pump = 5e-3;
    const ChainResult chain = dicke_chain(1.0, pump);
    const DensityMatrix4 exact = steady_state({1.0, 1.0, 1.0, 0.0, pump});
    CHECK(concurrence(exact) == doctest::Approx(chain.concurrence).epsilon(1e-10));
    CHECK(exact.rho00() == doctest::Approx(chain.rho00).epsilon(1e-10));
    CHECK(exact.rho33() == doctest::Approx(chain.rho33).epsilon(1e-10));

    // The dark state leaks at gamma - gamma12 = 1e-6, small against the pump.
    const DensityMatrix4 near = steady_state({1.0, 1.0, 1.0 - 1e-6, 0.0, pump});
    CHECK(concurrence(near) == doctest::Approx(chain.concurrence).epsilon(1e-3));
  }

  SUBCASE("dark state without pump is degenerate") {
    try {
      steady_state({1.0, 1.0, 1.0, 0.0, 0.0});
      FAIL("expected a degenerate kernel");
    } catch (const DegenerateSteadyStateError& e) {
      // |G><G|, |A><A| and the two G-A coherences are all stationary.
      CHECK(e.kernel_dimension() == 4);
    }
  }
}

TEST_CASE("steady state invariants over random parameters") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 10000; ++t) {
    const MasterEqParams p = random_params(rng);
    const DensityMatrix4 rho = steady_state(p);
    REQUIRE(rho.hermiticity_error() <= 1e-10);
    REQUIRE(std::abs(rho.trace() - 1.0) <= 1e-10);
    REQUIRE(rho.min_eigenvalue() >= -1e-9);
    REQUIRE(steady_state_residual(p, rho) <= 1e-10);
    REQUIRE(rho.x_structure_error() <= 1e-10);
  }
}

TEST_CASE("sign flips of the couplings leave the concurrence unchanged") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 500; ++t) {
    MasterEqParams p = random_params(rng);
    p.gamma22 = p.gamma11;  // symmetric pump model
    p.gamma12 = std::clamp(p.gamma12, -p.gamma11, p.gamma11);
    const double c = concurrence(steady_state(p));
    MasterEqParams q = p;
    q.g12 = -p.g12;
    CHECK(std::abs(concurrence(steady_state(q)) - c) <= 1e-10);
    q = p;
    q.gamma12 = -p.gamma12;
    CHECK(std::abs(concurrence(steady_state(q)) - c) <= 1e-10);
  }
}

TEST_CASE("time propagation agrees with the kernel") {
  std::mt19937_64 rng(17);
  SUBCASE("random parameters") {
    for (int t = 0; t < 100; ++t) {
      const MasterEqParams p = random_params(rng, 0.05, 1.0);
      PropagationOptions opt;
      const double max_rate =
          std::max({p.gamma11, p.gamma22, std::abs(p.g12), p.pump, std::abs(p.gamma12)});
      opt.dt = 0.01 / max_rate;
      const DensityMatrix4 a = propagate_to_steady(p, DensityMatrix4::ground(), opt);
      const DensityMatrix4 b = steady_state(p);
      CHECK((a.matrix() - b.matrix()).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
  SUBCASE("decay only") {
    const DensityMatrix4 rho =
        propagate_to_steady({1.0, 1.0, 0.3, 0.2, 0.0}, DensityMatrix4::maximally_mixed());
    CHECK(rho.rho00() == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("unreachable horizon") {
    PropagationOptions opt;
    opt.t_max = 1.0;
    CHECK_THROWS_AS(propagate_to_steady({1.0, 1.0, 0.0, 0.0, 0.1}, DensityMatrix4::ground(), opt),
                    PropagationError);
  }
}

TEST_CASE("concurrence examples") {
  Eigen::Vector4cd bell = Eigen::Vector4cd::Zero();
  bell(1) = bell(2) = 1.0;
  const DensityMatrix4 b = DensityMatrix4::from_pure(bell);
  CHECK(concurrence(b) == doctest::Approx(1.0));
  CHECK(concurrence_wootters(b) == doctest::Approx(1.0));
  CHECK(concurrence(DensityMatrix4::maximally_mixed()) == 0.0);

  Matrix4 m = Matrix4::Zero();
  m(0, 0) = 0.9;
  m(1, 1) = m(2, 2) = 0.05;
  m(1, 2) = m(2, 1) = 0.05;
  CHECK(concurrence(DensityMatrix4(m)) == doctest::Approx(0.1));

  // Product of single-qubit pure states.
  Eigen::Vector2cd a(0.6, cplx(0.0, 0.8)), c(std::sqrt(0.5), std::sqrt(0.5));
  Eigen::Vector4cd prod;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) prod(i + 2 * j) = a(i) * c(j);
  CHECK(concurrence_wootters(DensityMatrix4::from_pure(prod)) < 1e-7);
  bool fallback = false;
  concurrence(DensityMatrix4::from_pure(prod), &fallback);
  CHECK(fallback);
}

TEST_CASE("Werner states") {
  Eigen::Vector4cd phi = Eigen::Vector4cd::Zero();
  phi(0) = phi(3) = 1.0;
  const Matrix4 proj = DensityMatrix4::from_pure(phi).matrix();
  for (int i = 0; i <= 20; ++i) {
    const double p = i / 20.0;
    const DensityMatrix4 w(p * proj + (1.0 - p) * Matrix4::Identity() / 4.0);
    CHECK(concurrence_wootters(w) == doctest::Approx(std::max(0.0, (3.0 * p - 1.0) / 2.0)).epsilon(1e-10));
  }
}

TEST_CASE("closed forms match the general witnesses on X-states") {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 10000; ++t) {
    const DensityMatrix4 x = random_x_state(rng);
    const double c = concurrence(x);
    const double n = negativity(x);
    REQUIRE(std::abs(c - concurrence_wootters(x)) <= 1e-10);
    REQUIRE(std::abs(n - negativity_partial_transpose(x)) <= 1e-10);
    REQUIRE((c > 0.0) == (n > 0.0));
  }
}

TEST_CASE("closed forms match the general witnesses on steady states") {
  std::mt19937_64 rng(321);
  for (int t = 0; t < 2000; ++t) {
    const DensityMatrix4 rho = steady_state(random_params(rng));
    CHECK(std::abs(concurrence(rho) - concurrence_wootters(rho)) <= 1e-10);
    CHECK(std::abs(negativity(rho) - negativity_partial_transpose(rho)) <= 1e-10);
  }
}

TEST_CASE("negativity and linear entropy examples") {
  Eigen::Vector4cd bell = Eigen::Vector4cd::Zero();
  bell(1) = bell(2) = 1.0;
  CHECK(negativity(DensityMatrix4::from_pure(bell)) == doctest::Approx(1.0));
  CHECK(negativity_partial_transpose(DensityMatrix4::from_pure(bell)) == doctest::Approx(1.0));
  CHECK(negativity(DensityMatrix4::maximally_mixed()) == 0.0);
  CHECK(negativity(DensityMatrix4::ground()) == 0.0);

  CHECK(linear_entropy(DensityMatrix4::from_pure(bell)) == doctest::Approx(0.0));
  CHECK(linear_entropy(DensityMatrix4::maximally_mixed()) == doctest::Approx(1.0));
  Matrix4 half = Matrix4::Zero();
  half(0, 0) = half(1, 1) = 0.5;
  CHECK(linear_entropy(DensityMatrix4(half)) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("MEMS curve") {
  const MemsPoint top = mems_curve(1.0);
  CHECK(top.concurrence == 1.0);
  CHECK(top.linear_entropy == doctest::Approx(0.0));
  const MemsPoint zero = mems_curve(0.0);
  CHECK(zero.linear_entropy == doctest::Approx(8.0 / 9.0));

  // Both branch formulas at r = 2/3.
  const double r = 2.0 / 3.0;
  CHECK(8.0 / 3.0 * r * (1.0 - r) == doctest::Approx(16.0 / 27.0));
  CHECK(8.0 / 9.0 - 2.0 / 3.0 * r * r == doctest::Approx(16.0 / 27.0));
  CHECK(mems_curve(r).linear_entropy == doctest::Approx(16.0 / 27.0));

  // The explicit state reproduces the curve.
  for (int i = 0; i <= 50; ++i) {
    const double rr = i / 50.0;
    const DensityMatrix4 s = mems_state(rr);
    CHECK(concurrence_wootters(s) == doctest::Approx(rr).epsilon(1e-9));
    CHECK(linear_entropy(s) == doctest::Approx(mems_curve(rr).linear_entropy).epsilon(1e-12));
    CHECK(mems_concurrence_at_entropy(mems_curve(rr).linear_entropy) ==
          doctest::Approx(rr).epsilon(1e-9));
  }

  CHECK_THROWS_AS(mems_curve(1.2), std::domain_error);
  CHECK_THROWS_AS(mems_curve(-0.1), std::domain_error);
}

TEST_CASE("no sampled state beats the MEMS curve") {
  std::mt19937_64 rng(777);
  constexpr int kBins = 50;
  constexpr double kWindow = 0.005;
  std::vector<double> centers(kBins), best(kBins, 0.0);
  for (int b = 0; b < kBins; ++b) centers[b] = 0.01 + (0.98 - 0.01) * b / (kBins - 1);

  // Mix full-rank Ginibre samples with low-rank ones so the low-entropy bins are populated.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100000; ++t) {
    DensityMatrix4 rho = random_density_matrix(rng);
    if (t % 2 == 1) {
      Eigen::Vector4cd psi;
      std::normal_distribution<double> nd;
      for (int i = 0; i < 4; ++i) psi(i) = cplx(nd(rng), nd(rng));
      const double w = u(rng);
      rho = DensityMatrix4(w * DensityMatrix4::from_pure(psi).matrix() + (1.0 - w) * rho.matrix());
    }
    const double s = linear_entropy(rho);
    const double c = concurrence_wootters(rho);
    for (int b = 0; b < kBins; ++b) {
      if (std::abs(s - centers[b]) <= kWindow) best[b] = std::max(best[b], c);
    }
  }
  for (int b = 0; b < kBins; ++b) {
    // The curve decreases with entropy, so its window maximum sits at the left edge.
    CHECK(best[b] <= mems_concurrence_at_entropy(centers[b] - kWindow) + 1e-12);
  }
}
