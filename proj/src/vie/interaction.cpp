#include "cloakopt/vie/interaction.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace cloakopt::vie {

namespace {

// FFTW's planner is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer make_buffer(std::size_t n) {
  auto* raw = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!raw) throw std::bad_alloc();
  return FftwBuffer(raw);
}

cplx* as_cplx(fftw_complex* p) { return reinterpret_cast<cplx*>(p); }

inline void accumulate_pair(const Lattice& lattice, double k, std::size_t m,
                            std::span<const cplx> p, cplx* out_m) {
  const int nx = lattice.dims[0], ny = lattice.dims[1], nz = lattice.dims[2];
  const int mi = static_cast<int>(m % nx);
  const int mj = static_cast<int>((m / nx) % ny);
  const int mk = static_cast<int>(m / (static_cast<std::size_t>(nx) * ny));
  const double k2 = k * k;
  Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
  std::size_t n = 0;
  for (int kk = 0; kk < nz; ++kk) {
    for (int jj = 0; jj < ny; ++jj) {
      for (int ii = 0; ii < nx; ++ii, ++n) {
        if (n == m) continue;
        const Eigen::Vector3d sep(lattice.spacing * (mi - ii), lattice.spacing * (mj - jj),
                                  lattice.spacing * (mk - kk));
        const Eigen::Map<const Eigen::Vector3cd> pn(p.data() + 3 * n);
        acc.noalias() += em::free_space_green_offset(sep, k) * pn;
      }
    }
  }
  out_m[0] = k2 * acc(0);
  out_m[1] = k2 * acc(1);
  out_m[2] = k2 * acc(2);
}

void check_sizes(const Lattice& lattice, std::span<const cplx> p, std::span<cplx> out) {
  if (p.size() != 3 * lattice.size() || out.size() != 3 * lattice.size()) {
    throw std::invalid_argument("interaction: vector length must be 3 * voxel count");
  }
}

// Symmetric tensor components xx, yy, zz, xy, xz, yz.
constexpr int kComponent[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};

}  // namespace

void interaction_direct_serial(const Lattice& lattice, double k, std::span<const cplx> p,
                               std::span<cplx> out) {
  check_sizes(lattice, p, out);
  const std::size_t n = lattice.size();
  for (std::size_t m = 0; m < n; ++m) accumulate_pair(lattice, k, m, p, out.data() + 3 * m);
}

void interaction_direct_omp(const Lattice& lattice, double k, std::span<const cplx> p,
                            std::span<cplx> out) {
  check_sizes(lattice, p, out);
  const long n = static_cast<long>(lattice.size());
#pragma omp parallel for schedule(static)
  for (long m = 0; m < n; ++m) accumulate_pair(lattice, k, m, p, out.data() + 3 * m);
}

struct FftInteraction::Impl {
  Lattice lattice;
  std::array<int, 3> padded{};
  std::size_t padded_size = 0;
  std::array<FftwBuffer, 6> kernel;  // transformed, already scaled by k^2 / padded_size
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  std::size_t padded_index(int i, int j, int k) const {
    return static_cast<std::size_t>(k) +
           padded[2] * (static_cast<std::size_t>(j) + static_cast<std::size_t>(padded[1]) * i);
  }
};

FftInteraction::FftInteraction(const Lattice& lattice, double k) : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.lattice = lattice;
  for (int a = 0; a < 3; ++a) s.padded[a] = 2 * lattice.dims[a];
  s.padded_size = static_cast<std::size_t>(s.padded[0]) * s.padded[1] * s.padded[2];

  for (auto& buf : s.kernel) buf = make_buffer(s.padded_size);
  // Plans are in-place; every execution below passes in == out.
  auto scratch = make_buffer(s.padded_size);
  {
    std::lock_guard lock(planner_mutex());
    s.forward = fftw_plan_dft_3d(s.padded[0], s.padded[1], s.padded[2], scratch.get(),
                                 scratch.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    s.backward = fftw_plan_dft_3d(s.padded[0], s.padded[1], s.padded[2], scratch.get(),
                                  scratch.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (!s.forward || !s.backward) throw std::runtime_error("FFTW planning failed");

  // Circulant embedding: offset d in (-(n-1) .. n-1) lives at index d mod 2n;
  // index n (and offset 0) stay zero.
  const double scale = k * k / static_cast<double>(s.padded_size);
  const long total = static_cast<long>(s.padded_size);
#pragma omp parallel for schedule(static)
  for (long flat = 0; flat < total; ++flat) {
    const int i = static_cast<int>(flat / (static_cast<long>(s.padded[1]) * s.padded[2]));
    const int j = static_cast<int>((flat / s.padded[2]) % s.padded[1]);
    const int kk = static_cast<int>(flat % s.padded[2]);
    const int idx[3] = {i, j, kk};
    int off[3];
    bool valid = true;
    for (int a = 0; a < 3; ++a) {
      const int n = lattice.dims[a];
      off[a] = idx[a] < n ? idx[a] : idx[a] - 2 * n;
      if (idx[a] == n) valid = false;
    }
    const bool origin = off[0] == 0 && off[1] == 0 && off[2] == 0;
    em::Dyad33 g = em::Dyad33::Zero();
    if (valid && !origin) {
      g = em::free_space_green_offset(
          Eigen::Vector3d(off[0], off[1], off[2]) * lattice.spacing, k);
    }
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        as_cplx(s.kernel[kComponent[a][b]].get())[flat] = scale * g(a, b);
      }
    }
  }
  for (auto& buf : s.kernel) fftw_execute_dft(s.forward, buf.get(), buf.get());
}

FftInteraction::~FftInteraction() = default;
FftInteraction::FftInteraction(FftInteraction&&) noexcept = default;
FftInteraction& FftInteraction::operator=(FftInteraction&&) noexcept = default;

const Lattice& FftInteraction::lattice() const { return impl_->lattice; }

void FftInteraction::apply(std::span<const cplx> p, std::span<cplx> out) const {
  const Impl& s = *impl_;
  check_sizes(s.lattice, p, out);
  const int nx = s.lattice.dims[0], ny = s.lattice.dims[1], nz = s.lattice.dims[2];

  std::array<FftwBuffer, 3> field;
  for (auto& buf : field) buf = make_buffer(s.padded_size);

#pragma omp parallel for schedule(static)
  for (int a = 0; a < 3; ++a) {
    cplx* dst = as_cplx(field[a].get());
    std::fill(dst, dst + s.padded_size, cplx{});
    for (int kk = 0; kk < nz; ++kk) {
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const std::size_t lin = static_cast<std::size_t>(i) + nx * (j + static_cast<std::size_t>(ny) * kk);
          dst[s.padded_index(i, j, kk)] = p[3 * lin + a];
        }
      }
    }
    fftw_execute_dft(s.forward, field[a].get(), field[a].get());
  }

  const long total = static_cast<long>(s.padded_size);
  const cplx* kern[6];
  for (int c = 0; c < 6; ++c) kern[c] = as_cplx(s.kernel[c].get());
  cplx* f[3] = {as_cplx(field[0].get()), as_cplx(field[1].get()), as_cplx(field[2].get())};
#pragma omp parallel for schedule(static)
  for (long q = 0; q < total; ++q) {
    const cplx px = f[0][q], py = f[1][q], pz = f[2][q];
    f[0][q] = kern[0][q] * px + kern[3][q] * py + kern[4][q] * pz;
    f[1][q] = kern[3][q] * px + kern[1][q] * py + kern[5][q] * pz;
    f[2][q] = kern[4][q] * px + kern[5][q] * py + kern[2][q] * pz;
  }

#pragma omp parallel for schedule(static)
  for (int a = 0; a < 3; ++a) {
    fftw_execute_dft(s.backward, field[a].get(), field[a].get());
    const cplx* src = as_cplx(field[a].get());
    for (int kk = 0; kk < nz; ++kk) {
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const std::size_t lin = static_cast<std::size_t>(i) + nx * (j + static_cast<std::size_t>(ny) * kk);
          out[3 * lin + a] = src[s.padded_index(i, j, kk)];
        }
      }
    }
  }
}

}  // namespace cloakopt::vie
