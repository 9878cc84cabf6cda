#pragma once
// FFTW-backed transforms on the torus. Conventions:
//   dft:  f_hat(xi) = sum_x f(x) e^{-i xi.x}   (unnormalized)
//   idft: f(x) = (1/N) sum_xi f_hat(xi) e^{+i xi.x}
// so idft(dft(f)) == f and Parseval reads sum|f|^2 = (1/N) sum|f_hat|^2.
// Frequencies live on the Brillouin zone: xi_k = 2 pi m_k / L folded to
// (-pi, pi]. Plans are cached per (shape, sign) and reused through the
// new-array execute interface, which is safe to call concurrently.

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "homlat/errors.hpp"
#include "homlat/field.hpp"
#include "homlat/grid.hpp"

namespace homlat {

using cvector = std::vector<std::complex<double>>;

namespace detail {

class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(const TorusGrid& grid, int sign) {
    const std::pair<std::pair<int, int>, int> key{{grid.dim(), grid.side()}, sign};
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(grid.dim()), grid.side());
    const std::size_t n = static_cast<std::size_t>(grid.site_count());
    // Scratch buffers only anchor the plan; execution uses new-array calls.
    fftw_complex* a = fftw_alloc_complex(n);
    fftw_complex* b = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft(grid.dim(), dims.data(), a, b, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    if (!plan) throw ValidationError("fftw plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::pair<int, int>, int>, fftw_plan> plans_;
};

inline void execute_dft(const TorusGrid& grid, int sign, const std::complex<double>* in,
                        std::complex<double>* out) {
  fftw_plan plan = FftPlanCache::instance().get(grid, sign);
  // FFTW does not write through `in` for out-of-place c2c transforms.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace detail

inline cvector dft(const TorusGrid& grid, std::span<const std::complex<double>> f) {
  if (static_cast<std::int64_t>(f.size()) != grid.site_count())
    throw ValidationError("dft input size does not match grid");
  cvector out(f.size());
  detail::execute_dft(grid, FFTW_FORWARD, f.data(), out.data());
  return out;
}

inline cvector idft(const TorusGrid& grid, std::span<const std::complex<double>> fhat) {
  if (static_cast<std::int64_t>(fhat.size()) != grid.site_count())
    throw ValidationError("idft input size does not match grid");
  cvector out(fhat.size());
  detail::execute_dft(grid, FFTW_BACKWARD, fhat.data(), out.data());
  const double scale = 1.0 / static_cast<double>(grid.site_count());
  for (auto& z : out) z *= scale;
  return out;
}

inline cvector dft_real(const TorusGrid& grid, std::span<const double> f) {
  cvector tmp(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i];
  return dft(grid, tmp);
}

namespace detail {

// Forward transforms of all components of a vector field.
inline std::vector<cvector> dft_components(const LatticeVectorField& g) {
  const TorusGrid& grid = g.grid();
  const int d = grid.dim();
  const std::size_t n = static_cast<std::size_t>(grid.site_count());
  std::vector<cvector> hat(static_cast<std::size_t>(d));
  cvector buf(n);
  for (int c = 0; c < d; ++c) {
    for (std::int64_t s = 0; s < grid.site_count(); ++s)
      buf[static_cast<std::size_t>(s)] = g.at(s, c);
    hat[static_cast<std::size_t>(c)].resize(n);
    execute_dft(grid, FFTW_FORWARD, buf.data(), hat[static_cast<std::size_t>(c)].data());
  }
  return hat;
}

}  // namespace detail

// The Brillouin frequency vector of a flat index (site-major layout).
class FrequencyGrid {
 public:
  explicit FrequencyGrid(GridPtr grid) : grid_(std::move(grid)) {
    const int L = grid_->side();
    freq_.resize(static_cast<std::size_t>(L));
    for (int m = 0; m < L; ++m) {
      double xi = 2.0 * pi * m / L;
      if (xi > pi) xi -= 2.0 * pi;
      freq_[static_cast<std::size_t>(m)] = xi;
    }
  }

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }

  void frequency(std::int64_t flat, std::span<double> out) const {
    for (int k = 0; k < grid_->dim(); ++k) {
      const int m = static_cast<int>((flat / grid_->stride(k)) % grid_->side());
      out[k] = freq_[static_cast<std::size_t>(m)];
    }
  }

  static constexpr double pi = 3.14159265358979323846;

 private:
  GridPtr grid_;
  std::vector<double> freq_;
};

// Symbol of div* grad at frequency xi: sum_k |e^{i xi_k} - 1|^2 = sum_k 4 sin^2(xi_k/2).
inline double laplace_symbol(std::span<const double> xi) {
  double acc = 0.0;
  for (double x : xi) {
    const double s = std::sin(0.5 * x);
    acc += 4.0 * s * s;
  }
  return acc;
}

// Torus convolution (f*g)(x) = sum_y f(y) g(x-y), computed spectrally (exact
// up to roundoff because the DFT diagonalizes it).
inline LatticeScalarField convolve(const LatticeScalarField& f, const LatticeScalarField& g) {
  require_same_grid(f.grid(), g.grid());
  const TorusGrid& grid = f.grid();
  cvector fh = dft_real(grid, f.values());
  const cvector gh = dft_real(grid, g.values());
  for (std::size_t i = 0; i < fh.size(); ++i) fh[i] *= gh[i];
  const cvector conv = idft(grid, fh);
  LatticeScalarField out(f.grid_ptr());
  for (std::int64_t s = 0; s < grid.site_count(); ++s)
    out[s] = conv[static_cast<std::size_t>(s)].real();
  return out;
}

// Green function of lambda/T + div* grad with unit coefficients and source at
// the origin, computed by inverting the symbol.
inline LatticeScalarField green_constant(GridPtr grid, double T, double lambda_scale) {
  if (!(T > 0.0)) throw ValidationError("green_constant needs T > 0");
  if (!(lambda_scale > 0.0)) throw ValidationError("green_constant needs lambda > 0");
  const FrequencyGrid fg(grid);
  const std::int64_t n = grid->site_count();
  cvector ghat(static_cast<std::size_t>(n));
  std::array<double, max_dim> xi{};
  for (std::int64_t s = 0; s < n; ++s) {
    fg.frequency(s, std::span<double>(xi.data(), grid->dim()));
    ghat[static_cast<std::size_t>(s)] =
        1.0 / (lambda_scale / T + laplace_symbol(std::span<const double>(xi.data(), grid->dim())));
  }
  const cvector g = idft(*grid, ghat);
  LatticeScalarField out(grid);
  for (std::int64_t s = 0; s < n; ++s) out[s] = g[static_cast<std::size_t>(s)].real();
  return out;
}

}  // namespace homlat
