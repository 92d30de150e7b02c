#include "cloakopt/quantum/master_equation.hpp"

#include <cmath>
#include <sstream>

namespace cloakopt::quantum {

namespace {

constexpr cplx kI{0.0, 1.0};

// Singular values below this fraction of the largest count as kernel.
constexpr double kKernelThreshold = 1e-12;

Liouvillian kron(const Matrix4& a, const Matrix4& b) {
  Liouvillian out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
    }
  }
  return out;
}

// vec(A rho B) = (B^T kron A) vec(rho)
Liouvillian sandwich(const Matrix4& a, const Matrix4& b) { return kron(b.transpose(), a); }

Liouvillian left(const Matrix4& a) { return sandwich(a, Matrix4::Identity()); }
Liouvillian right(const Matrix4& b) { return sandwich(Matrix4::Identity(), b); }

// D(rho) = 2 a rho b^dag - b^dag a rho - rho b^dag a
Liouvillian dissipator(const Matrix4& jump_a, const Matrix4& jump_b) {
  const Matrix4 bd = jump_b.adjoint();
  const Matrix4 bda = bd * jump_a;
  return 2.0 * sandwich(jump_a, bd) - left(bda) - right(bda);
}

}  // namespace

void MasterEqParams::validate() const {
  std::ostringstream msg;
  if (!(gamma11 > 0.0) || !(gamma22 > 0.0)) {
    msg << "decay rates must be positive (gamma11 = " << gamma11 << ", gamma22 = " << gamma22
        << ")";
  } else if (!(pump >= 0.0)) {
    msg << "pump must be non-negative (P = " << pump << ")";
  } else if (!std::isfinite(gamma12) || !std::isfinite(g12)) {
    msg << "couplings must be finite";
  } else if (std::abs(gamma12) > std::sqrt(gamma11 * gamma22) * (1.0 + 1e-12)) {
    msg << "|gamma12| = " << std::abs(gamma12) << " exceeds sqrt(gamma11 gamma22)";
  } else {
    return;
  }
  throw std::invalid_argument(msg.str());
}

double DensityMatrix4::min_eigenvalue() const {
  const Matrix4 h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double DensityMatrix4::x_structure_error() const {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j || (i == 1 && j == 2) || (i == 2 && j == 1)) continue;
      worst = std::max(worst, std::abs(rho_(i, j)));
    }
  }
  return worst;
}

DensityMatrix4 DensityMatrix4::ground() { return DensityMatrix4(); }

DensityMatrix4 DensityMatrix4::maximally_mixed() {
  return DensityMatrix4(Matrix4::Identity() * 0.25);
}

DensityMatrix4 DensityMatrix4::from_pure(const Eigen::Vector4cd& psi) {
  const Eigen::Vector4cd n = psi.normalized();
  return DensityMatrix4(n * n.adjoint());
}

Matrix4 lowering(int emitter) {
  if (emitter != 1 && emitter != 2) throw std::out_of_range("emitter index must be 1 or 2");
  const int bit = emitter == 1 ? 1 : 2;
  Matrix4 s = Matrix4::Zero();
  for (int state = 0; state < 4; ++state) {
    if (state & bit) s(state & ~bit, state) = 1.0;
  }
  return s;
}

Vec16 vectorize(const Matrix4& rho) { return Eigen::Map<const Vec16>(rho.data()); }

Matrix4 unvectorize(const Vec16& v) { return Eigen::Map<const Matrix4>(v.data()); }

Liouvillian build_liouvillian(const MasterEqParams& params) {
  params.validate();
  const Matrix4 s1 = lowering(1);
  const Matrix4 s2 = lowering(2);
  const Matrix4 sigma[2] = {s1, s2};
  const double gamma[2][2] = {{params.gamma11, params.gamma12},
                              {params.gamma12, params.gamma22}};

  // Rotating frame at the common emitter frequency.
  const Matrix4 h = params.g12 * (s1.adjoint() * s2 + s2.adjoint() * s1);
  Liouvillian l = -kI * (left(h) - right(h));

  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (gamma[i][j] == 0.0) continue;
      // L_ij(rho) = 2 s_j rho s_i^dag - s_i^dag s_j rho - rho s_i^dag s_j
      l += 0.5 * gamma[i][j] * dissipator(sigma[j], sigma[i]);
    }
  }
  if (params.pump > 0.0) {
    for (const auto& s : sigma) {
      // L'_ii(rho) = 2 s^dag rho s - s s^dag rho - rho s s^dag
      const Matrix4 sd = s.adjoint();
      l += 0.5 * params.pump * dissipator(sd, sd);
    }
  }
  return l;
}

DensityMatrix4 steady_state(const MasterEqParams& params) {
  const Liouvillian l = build_liouvillian(params);
  Eigen::JacobiSVD<Liouvillian> svd(l, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = kKernelThreshold * std::max(1.0, sv(0));
  int kernel = 0;
  for (int i = 0; i < 16; ++i) {
    if (sv(i) <= cutoff) ++kernel;
  }
  if (kernel > 1) {
    std::ostringstream msg;
    msg << "steady state is not unique: Liouvillian kernel has dimension " << kernel;
    throw DegenerateSteadyStateError(kernel, msg.str());
  }
  const Vec16 v = svd.matrixV().col(15);
  Matrix4 rho = unvectorize(v);
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix4(rho);
}

double steady_state_residual(const MasterEqParams& params, const DensityMatrix4& rho) {
  return (build_liouvillian(params) * vectorize(rho.matrix())).norm();
}

DensityMatrix4 propagate_to_steady(const MasterEqParams& params, const DensityMatrix4& rho0,
                                   const PropagationOptions& options) {
  const Liouvillian l = build_liouvillian(params);
  const double h = options.dt;

  // One RK4 step of a linear autonomous system is a fixed matrix polynomial.
  const Liouvillian id = Liouvillian::Identity();
  const Liouvillian hl = h * l;
  const Liouvillian step = id + hl * (id + hl * (0.5 * id + hl * (id / 6.0 + hl / 24.0)));

  Vec16 v = vectorize(rho0.matrix());
  const cplx trace0 = rho0.trace();
  const long max_steps = static_cast<long>(std::ceil(options.t_max / h));
  constexpr long kCheckEvery = 64;

  for (long n = 0; n < max_steps; ++n) {
    v = step * v;
    const cplx tr = v(0) + v(5) + v(10) + v(15);
    if (std::abs(tr - trace0) > options.trace_drift_tolerance) {
      std::ostringstream msg;
      msg << "trace drifted by " << std::abs(tr - trace0) << " at t = " << (n + 1) * h;
      throw PropagationError(msg.str());
    }
    if (n % kCheckEvery == 0 && (l * v).norm() <= options.derivative_tolerance) {
      Matrix4 rho = unvectorize(v);
      return DensityMatrix4(0.5 * (rho + rho.adjoint()));
    }
  }
  std::ostringstream msg;
  msg << "no steady state within t_max = " << options.t_max
      << " (final |drho/dt| = " << (l * v).norm() << ")";
  throw PropagationError(msg.str());
}

}  // namespace cloakopt::quantum
