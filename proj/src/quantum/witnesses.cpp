#include "cloakopt/quantum/witnesses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cloakopt::quantum {

namespace {

Matrix4 sigma_y_sigma_y() {
  Matrix4 t = Matrix4::Zero();
  t(0, 3) = -1.0;
  t(1, 2) = 1.0;
  t(2, 1) = 1.0;
  t(3, 0) = -1.0;
  return t;
}

double concurrence_x_closed_form(const DensityMatrix4& rho) {
  const double pop = std::sqrt(std::max(0.0, rho.rho00() * rho.rho33()));
  return 2.0 * std::max(0.0, std::abs(rho.rho12()) - pop);
}

double negativity_x_closed_form(const DensityMatrix4& rho) {
  const double diff = rho.rho00() - rho.rho33();
  const double root = std::sqrt(diff * diff + 4.0 * std::norm(rho.rho12()));
  return std::max(0.0, root - (rho.rho00() + rho.rho33()));
}

}  // namespace

bool is_x_state(const DensityMatrix4& rho, double tol) { return rho.x_structure_error() <= tol; }

double concurrence(const DensityMatrix4& rho, bool* used_fallback) {
  const bool x = is_x_state(rho);
  if (used_fallback) *used_fallback = !x;
  return x ? concurrence_x_closed_form(rho) : concurrence_wootters(rho);
}

double concurrence_wootters(const DensityMatrix4& rho) {
  const Matrix4 h = 0.5 * (rho.matrix() + rho.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4> es(h);
  const Eigen::Vector4d w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix4 root = es.eigenvectors() * w.cast<cplx>().asDiagonal() *
                       es.eigenvectors().adjoint();

  // Eigenvalues of rho T rho* T equal those of sqrt(rho) T rho* T sqrt(rho),
  // which is Hermitian positive semidefinite.
  const Matrix4 t = sigma_y_sigma_y();
  const Matrix4 tilde = t * h.conjugate() * t;
  const Matrix4 m = root * tilde * root;
  Eigen::SelfAdjointEigenSolver<Matrix4> rs(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);

  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) lam[i] = std::sqrt(std::max(0.0, rs.eigenvalues()(i)));
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return std::clamp(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0);
}

double negativity(const DensityMatrix4& rho, bool* used_fallback) {
  const bool x = is_x_state(rho);
  if (used_fallback) *used_fallback = !x;
  return x ? negativity_x_closed_form(rho) : negativity_partial_transpose(rho);
}

double negativity_partial_transpose(const DensityMatrix4& rho) {
  // Transpose on emitter 2 (the high bit of the basis index).
  Matrix4 pt;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const int rt = (r & 1) | (c & 2);
      const int ct = (c & 1) | (r & 2);
      pt(rt, ct) = rho.matrix()(r, c);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix4> es(0.5 * (pt + pt.adjoint()), Eigen::EigenvaluesOnly);
  double negative = 0.0;
  for (int i = 0; i < 4; ++i) negative += std::max(0.0, -es.eigenvalues()(i));
  return 2.0 * negative;
}

double linear_entropy(const DensityMatrix4& rho) {
  const double purity = (rho.matrix() * rho.matrix()).trace().real();
  return 4.0 / 3.0 * (1.0 - purity);
}

DensityMatrix4 mems_state(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("mems: r must lie in [0, 1]");
  const double g = std::max(r / 2.0, 1.0 / 3.0);
  Matrix4 m = Matrix4::Zero();
  m(0, 0) = g;
  m(1, 1) = 1.0 - 2.0 * g;
  m(3, 3) = g;
  m(0, 3) = r / 2.0;
  m(3, 0) = r / 2.0;
  return DensityMatrix4(m);
}

MemsPoint mems_curve(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("mems: r must lie in [0, 1]");
  const double s = r >= 2.0 / 3.0 ? 8.0 / 3.0 * r * (1.0 - r) : 8.0 / 9.0 - 2.0 / 3.0 * r * r;
  return {r, s};
}

double mems_concurrence_at_entropy(double s) {
  if (s <= 0.0) return 1.0;
  if (s <= 16.0 / 27.0) return 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - 1.5 * s)));
  if (s < 8.0 / 9.0) return std::sqrt(1.5 * (8.0 / 9.0 - s));
  return 0.0;
}

double distance_to_mems(double linear_entropy, double concurrence, int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const MemsPoint p = mems_curve(static_cast<double>(i) / (samples - 1));
    best = std::min(best, std::hypot(p.linear_entropy - linear_entropy,
                                     p.concurrence - concurrence));
  }
  return best;
}

DensityMatrix4 random_density_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix4 a;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a(i, j) = cplx(normal(rng), normal(rng));
  }
  Matrix4 rho = a * a.adjoint();
  rho /= rho.trace();
  return DensityMatrix4(rho);
}

DensityMatrix4 random_x_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<double, 4> p{};
  double total = 0.0;
  for (auto& v : p) total += (v = -std::log(1.0 - unit(rng)));
  for (auto& v : p) v /= total;
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  const double mag = unit(rng) * std::sqrt(p[1] * p[2]);
  Matrix4 m = Matrix4::Zero();
  for (int i = 0; i < 4; ++i) m(i, i) = p[i];
  m(1, 2) = std::polar(mag, phase);
  m(2, 1) = std::conj(m(1, 2));
  return DensityMatrix4(m);
}

}  // namespace cloakopt::quantum
