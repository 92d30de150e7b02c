// interaction.hpp - voxel-to-voxel dipole interaction kernels
//
// All kernels compute out_m = sum_{n != m} k^2 G0(r_m - r_n) p_n over a uniform
// lattice, where p is a 3N polarization vector laid out as p[3 n + axis].
// interaction_direct_serial is the reference the parallel paths are tested against.

#pragma once

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "cloakopt/em/green.hpp"

namespace cloakopt::vie {

using cplx = std::complex<double>;

struct Lattice {
  std::array<int, 3> dims{1, 1, 1};
  double spacing = 0.1;

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
};

/// O(N^2) reference, single-threaded.
void interaction_direct_serial(const Lattice& lattice, double k, std::span<const cplx> p,
                               std::span<cplx> out);

/// O(N^2), rows distributed over OpenMP threads.
void interaction_direct_omp(const Lattice& lattice, double k, std::span<const cplx> p,
                            std::span<cplx> out);

/// Block-Toeplitz interaction applied through zero-padded 3D FFTs.
/// The kernel transform is computed once per lattice and wavenumber.
/// apply() is safe to call concurrently from several threads.
class FftInteraction {
 public:
  FftInteraction(const Lattice& lattice, double k);
  ~FftInteraction();
  FftInteraction(const FftInteraction&) = delete;
  FftInteraction& operator=(const FftInteraction&) = delete;
  FftInteraction(FftInteraction&&) noexcept;
  FftInteraction& operator=(FftInteraction&&) noexcept;

  void apply(std::span<const cplx> p, std::span<cplx> out) const;

  const Lattice& lattice() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cloakopt::vie
