// bicgstab.ipp - matrix-free BiCGSTAB, no preconditioner, no restarts

#pragma once

#include <cmath>
#include <sstream>

namespace cloakopt::vie {

template <typename Apply>
Eigen::VectorXcd bicgstab(const Apply& apply, const Eigen::VectorXcd& b, double tolerance,
                          int max_iterations) {
  const double bnorm = b.norm();
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(b.size());
  if (bnorm == 0.0) return x;

  Eigen::VectorXcd r = b;
  const Eigen::VectorXcd r_hat = r;
  Eigen::VectorXcd p = Eigen::VectorXcd::Zero(b.size());
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(b.size());
  std::complex<double> rho = 1.0, alpha = 1.0, omega = 1.0;
  double rel = 1.0;

  for (int it = 1; it <= max_iterations; ++it) {
    const std::complex<double> rho_next = r_hat.dot(r);
    if (std::abs(rho_next) < 1e-300) break;
    const std::complex<double> beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    p = r + beta * (p - omega * v);
    v = apply(p);
    alpha = rho / r_hat.dot(v);
    Eigen::VectorXcd s = r - alpha * v;
    if (s.norm() / bnorm <= tolerance) {
      x += alpha * p;
      // Confirm against the true residual before returning.
      rel = (b - apply(x)).norm() / bnorm;
      if (rel <= tolerance) return x;
      r = b - apply(x);
      p.setZero();
      v.setZero();
      rho = alpha = omega = 1.0;
      continue;
    }
    const Eigen::VectorXcd t = apply(s);
    const double tt = t.squaredNorm();
    omega = tt > 0.0 ? t.dot(s) / tt : std::complex<double>(0.0);
    x += alpha * p + omega * s;
    r = s - omega * t;
    rel = r.norm() / bnorm;
    if (rel <= tolerance) {
      rel = (b - apply(x)).norm() / bnorm;
      if (rel <= tolerance) return x;
      r = b - apply(x);
      p.setZero();
      v.setZero();
      rho = alpha = omega = 1.0;
      continue;
    }
    if (omega == 0.0) break;
  }
  std::ostringstream msg;
  msg << "BiCGSTAB did not converge in " << max_iterations << " iterations (relative residual "
      << rel << ")";
  throw SolverError(msg.str(), rel, max_iterations);
}

}  // namespace cloakopt::vie
