#include "cloakopt/em/green.hpp"

#include <cmath>
#include <sstream>

namespace cloakopt::em {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};
}  // namespace

Dyad33 free_space_green_offset(const Eigen::Vector3d& separation, double k) {
  const double r = separation.norm();
  const Eigen::Vector3d u = separation / r;
  const double kr = k * r;
  const cplx inv = 1.0 / cplx(kr, 0.0);
  const cplx inv2 = inv * inv;
  const cplx phase = std::exp(kI * kr) / (4.0 * kPi * r);

  const cplx a = (1.0 + kI * inv - inv2) * phase;
  const cplx b = (-1.0 - 3.0 * kI * inv + 3.0 * inv2) * phase;

  Dyad33 g = b * (u * u.transpose()).cast<cplx>();
  g.diagonal().array() += a;
  return g;
}

Dyad33 free_space_green(const Position& r1, const Position& r2, double k) {
  const Eigen::Vector3d sep = r1 - r2;
  const double r = sep.norm();
  if (!(r >= kCoincidentThreshold)) {
    std::ostringstream msg;
    msg << "free_space_green: points closer than " << kCoincidentThreshold
        << " lambda (R = " << r << "); use the self-term path";
    throw CoincidentPointsError(msg.str());
  }
  return free_space_green_offset(sep, k);
}

Dyad33 free_space_self_green(double k) {
  Dyad33 g = Dyad33::Zero();
  g.diagonal().setConstant(cplx(0.0, k / (6.0 * kPi)));
  return g;
}

cplx project(const Dyad33& g, const Direction& p_hat) {
  const Eigen::Vector3cd p = p_hat.cast<cplx>();
  return p.transpose() * g * p;
}

CouplingSet couplings_from_green(const Dyad33& g11, const Dyad33& g22,
                                 const Dyad33& g12, const Direction& p_hat,
                                 double k) {
  if (std::abs(p_hat.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("couplings_from_green: p_hat must be a unit vector");
  }
  const double gamma_scale = 6.0 * kPi / k;
  const double g_scale = 3.0 * kPi / k;

  CouplingSet c;
  c.gamma11 = gamma_scale * project(g11, p_hat).imag();
  c.gamma22 = gamma_scale * project(g22, p_hat).imag();
  const cplx cross = project(g12, p_hat);
  c.gamma12 = gamma_scale * cross.imag();
  c.g12 = g_scale * cross.real();
  c.purcell = c.gamma11;

  if (!(c.gamma11 > 0.0) || !(c.gamma22 > 0.0)) {
    std::ostringstream msg;
    msg << "non-positive decay rate (gamma11 = " << c.gamma11
        << ", gamma22 = " << c.gamma22 << ")";
    throw SolverInconsistencyError(msg.str());
  }
  if (std::abs(c.gamma12) > std::sqrt(c.gamma11 * c.gamma22) + kCrossSpectralTolerance) {
    std::ostringstream msg;
    msg << "|gamma12| = " << std::abs(c.gamma12)
        << " exceeds sqrt(gamma11 gamma22) = " << std::sqrt(c.gamma11 * c.gamma22);
    throw SolverInconsistencyError(msg.str());
  }
  return c;
}

double aligned_gamma12(double kd) {
  return 3.0 * (std::sin(kd) - kd * std::cos(kd)) / (kd * kd * kd);
}

double aligned_g12(double kd) {
  return 1.5 * (std::cos(kd) + kd * std::sin(kd)) / (kd * kd * kd);
}

}  // namespace cloakopt::em
