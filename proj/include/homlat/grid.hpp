#pragma once
// Periodic lattice (Z/LZ)^d with row-major site indexing (last axis
// contiguous, matching FFTW) and a cached nearest-neighbor table.
// Minimal-image coordinates live in (-L/2, L/2].

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "homlat/errors.hpp"

namespace homlat {

inline constexpr int max_dim = 4;
inline constexpr std::int64_t max_sites = std::int64_t(1) << 22;

class TorusGrid {
 public:
  TorusGrid(int dim, int side) : dim_(dim), side_(side) {
    if (dim < 1 || dim > max_dim)
      throw ValidationError("grid dimension must be in [1," + std::to_string(max_dim) +
                            "], got " + std::to_string(dim));
    if (side < 2)
      throw ValidationError("grid side must be >= 2, got " + std::to_string(side));
    count_ = 1;
    for (int k = 0; k < dim; ++k) {
      if (count_ > max_sites / side)
        throw CapacityError("grid exceeds " + std::to_string(max_sites) + " sites");
      count_ *= side;
    }
    stride_.fill(0);
    stride_[dim - 1] = 1;
    for (int k = dim - 2; k >= 0; --k) stride_[k] = stride_[k + 1] * side;
    build_neighbors();
  }

  int dim() const noexcept { return dim_; }
  int side() const noexcept { return side_; }
  std::int64_t site_count() const noexcept { return count_; }
  std::int64_t stride(int axis) const noexcept { return stride_[axis]; }

  // Site index from coordinates, reduced mod L (accepts any integers).
  std::int64_t index(std::span<const int> coords) const {
    std::int64_t s = 0;
    for (int k = 0; k < dim_; ++k) {
      int c = coords[k] % side_;
      if (c < 0) c += side_;
      s += stride_[k] * c;
    }
    return s;
  }

  void site_coords(std::int64_t site, std::span<int> out) const {
    for (int k = 0; k < dim_; ++k) {
      out[k] = static_cast<int>((site / stride_[k]) % side_);
    }
  }

  // Neighbor along axis: dir=+1 gives x+e_axis, dir=-1 gives x-e_axis.
  std::int64_t neighbor(std::int64_t site, int axis, int dir) const noexcept {
    return nbr_[(static_cast<std::size_t>(site) * dim_ + axis) * 2 + (dir > 0 ? 0 : 1)];
  }

  // Site shifted by an arbitrary integer vector z.
  std::int64_t shifted(std::int64_t site, std::span<const int> z) const {
    std::array<int, max_dim> c{};
    site_coords(site, std::span<int>(c.data(), dim_));
    for (int k = 0; k < dim_; ++k) c[k] += z[k];
    return index(std::span<const int>(c.data(), dim_));
  }

  // Representative of c in (-L/2, L/2] for c in [0, L).
  int minimal_coord(int c) const noexcept { return 2 * c <= side_ ? c : c - side_; }

  // Euclidean distance to the origin in the quotient metric.
  double site_radius(std::int64_t site) const {
    std::array<int, max_dim> c{};
    site_coords(site, std::span<int>(c.data(), dim_));
    double r2 = 0.0;
    for (int k = 0; k < dim_; ++k) {
      double m = minimal_coord(c[k]);
      r2 += m * m;
    }
    return std::sqrt(r2);
  }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
    return a.dim_ == b.dim_ && a.side_ == b.side_;
  }

 private:
  void build_neighbors() {
    nbr_.resize(static_cast<std::size_t>(count_) * dim_ * 2);
    std::array<int, max_dim> c{};
    for (std::int64_t s = 0; s < count_; ++s) {
      site_coords(s, std::span<int>(c.data(), dim_));
      for (int k = 0; k < dim_; ++k) {
        const std::int64_t base = stride_[k] * c[k];
        const std::int64_t up = s - base + stride_[k] * ((c[k] + 1) % side_);
        const std::int64_t dn = s - base + stride_[k] * ((c[k] + side_ - 1) % side_);
        nbr_[(static_cast<std::size_t>(s) * dim_ + k) * 2 + 0] = static_cast<std::int32_t>(up);
        nbr_[(static_cast<std::size_t>(s) * dim_ + k) * 2 + 1] = static_cast<std::int32_t>(dn);
      }
    }
  }

  int dim_;
  int side_;
  std::int64_t count_;
  std::array<std::int64_t, max_dim> stride_{};
  std::vector<std::int32_t> nbr_;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

inline GridPtr make_grid(int dim, int side) {
  return std::make_shared<const TorusGrid>(dim, side);
}

inline void require_same_grid(const TorusGrid& a, const TorusGrid& b) {
  if (!(a == b)) throw ValidationError("fields live on different grids");
}

}  // namespace homlat
