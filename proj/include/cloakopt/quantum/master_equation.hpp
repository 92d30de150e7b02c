// master_equation.hpp - two incoherently pumped emitters coupled through a
// shared photonic environment.
//
// Basis ordering: {|g1 g2>, |e1 g2>, |g1 e2>, |e1 e2>}, i.e. index = n1 + 2 n2.
// Superoperators act on column-major vec(rho).

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cloakopt::quantum {

using cplx = std::complex<double>;
using Matrix4 = Eigen::Matrix4cd;
using Liouvillian = Eigen::Matrix<cplx, 16, 16>;
using Vec16 = Eigen::Matrix<cplx, 16, 1>;

/// Rates in units of gamma0 (or of the device decay rate after renormalization).
struct MasterEqParams {
  double gamma11 = 1.0;
  double gamma22 = 1.0;
  double gamma12 = 0.0;
  double g12 = 0.0;
  double pump = 0.0;  // symmetric incoherent pump P

  void validate() const;
};

class DensityMatrix4 {
 public:
  DensityMatrix4() : rho_(Matrix4::Zero()) { rho_(0, 0) = 1.0; }
  explicit DensityMatrix4(const Matrix4& rho) : rho_(rho) {}

  const Matrix4& matrix() const { return rho_; }
  Matrix4& matrix() { return rho_; }

  double rho00() const { return rho_(0, 0).real(); }
  double rho11() const { return rho_(1, 1).real(); }
  double rho22() const { return rho_(2, 2).real(); }
  double rho33() const { return rho_(3, 3).real(); }
  cplx rho12() const { return rho_(1, 2); }
  cplx rho03() const { return rho_(0, 3); }

  cplx trace() const { return rho_.trace(); }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const;

  /// Largest magnitude among off-diagonal entries other than rho12 / rho21.
  double x_structure_error() const;

  static DensityMatrix4 ground();
  static DensityMatrix4 maximally_mixed();
  static DensityMatrix4 from_pure(const Eigen::Vector4cd& psi);

 private:
  Matrix4 rho_;
};

class DegenerateSteadyStateError : public std::runtime_error {
 public:
  DegenerateSteadyStateError(int kernel_dimension, const std::string& what)
      : std::runtime_error(what), kernel_dimension_(kernel_dimension) {}
  int kernel_dimension() const { return kernel_dimension_; }

 private:
  int kernel_dimension_;
};

class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowering operators sigma_1, sigma_2 in the product basis.
Matrix4 lowering(int emitter);

Vec16 vectorize(const Matrix4& rho);
Matrix4 unvectorize(const Vec16& v);

Liouvillian build_liouvillian(const MasterEqParams& params);

/// Unique trace-one kernel vector of the Liouvillian, from the smallest
/// right-singular vector. Throws DegenerateSteadyStateError when more than
/// one singular value falls below the kernel threshold.
DensityMatrix4 steady_state(const MasterEqParams& params);

/// ||L vec(rho)||_2, the stationarity residual.
double steady_state_residual(const MasterEqParams& params, const DensityMatrix4& rho);

struct PropagationOptions {
  double t_max = 1e5;
  double dt = 0.01;
  double derivative_tolerance = 1e-12;
  double trace_drift_tolerance = 1e-10;  // checked every step
};

/// Fixed-step RK4 integration of d vec(rho)/dt = L vec(rho) until the
/// derivative norm drops below the tolerance.
DensityMatrix4 propagate_to_steady(const MasterEqParams& params, const DensityMatrix4& rho0,
                                   const PropagationOptions& options = {});

}  // namespace cloakopt::quantum
