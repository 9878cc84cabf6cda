#pragma once
// Lattice fields: scalar, vector (d components per site), and coefficient
// (d x d matrix per site). Storage is site-major; vector components and
// row-major matrix blocks are contiguous per site. File I/O supports a
// binary format (magic "HLF1") and CSV, both lossless for doubles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "homlat/errors.hpp"
#include "homlat/grid.hpp"

namespace homlat {

class LatticeScalarField {
 public:
  LatticeScalarField() = default;
  explicit LatticeScalarField(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), v_(static_cast<std::size_t>(grid_->site_count()), fill) {}

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::int64_t size() const noexcept { return static_cast<std::int64_t>(v_.size()); }
  double& operator[](std::int64_t s) noexcept { return v_[static_cast<std::size_t>(s)]; }
  double operator[](std::int64_t s) const noexcept { return v_[static_cast<std::size_t>(s)]; }
  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

class LatticeVectorField {
 public:
  LatticeVectorField() = default;
  explicit LatticeVectorField(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)),
        v_(static_cast<std::size_t>(grid_->site_count()) * grid_->dim(), fill) {}

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int components() const { return grid_->dim(); }
  double& at(std::int64_t s, int c) noexcept {
    return v_[static_cast<std::size_t>(s) * grid_->dim() + c];
  }
  double at(std::int64_t s, int c) const noexcept {
    return v_[static_cast<std::size_t>(s) * grid_->dim() + c];
  }
  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }

  double magnitude(std::int64_t s) const {
    double r2 = 0.0;
    for (int c = 0; c < grid_->dim(); ++c) r2 += at(s, c) * at(s, c);
    return std::sqrt(r2);
  }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(GridPtr grid, double lambda)
      : grid_(std::move(grid)),
        lambda_(lambda),
        v_(static_cast<std::size_t>(grid_->site_count()) * grid_->dim() * grid_->dim(), 0.0) {}

  // Every site carries the same d x d block.
  CoefficientField(GridPtr grid, double lambda, std::span<const double> block)
      : CoefficientField(std::move(grid), lambda) {
    const int d = grid_->dim();
    if (static_cast<int>(block.size()) != d * d)
      throw ValidationError("constant block size does not match dimension");
    for (std::int64_t s = 0; s < grid_->site_count(); ++s)
      for (int k = 0; k < d * d; ++k)
        v_[static_cast<std::size_t>(s) * d * d + k] = block[static_cast<std::size_t>(k)];
  }

  const TorusGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  double lambda() const noexcept { return lambda_; }
  int dim() const { return grid_->dim(); }

  double& entry(std::int64_t s, int i, int j) noexcept {
    const int d = grid_->dim();
    return v_[(static_cast<std::size_t>(s) * d + i) * d + j];
  }
  double entry(std::int64_t s, int i, int j) const noexcept {
    const int d = grid_->dim();
    return v_[(static_cast<std::size_t>(s) * d + i) * d + j];
  }
  std::span<double> block(std::int64_t s) noexcept {
    const int d = grid_->dim();
    return std::span<double>(v_.data() + static_cast<std::size_t>(s) * d * d, d * d);
  }
  std::span<const double> block(std::int64_t s) const noexcept {
    const int d = grid_->dim();
    return std::span<const double>(v_.data() + static_cast<std::size_t>(s) * d * d, d * d);
  }
  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }

  // out = a(s) * in, for d-vectors.
  void apply_at(std::int64_t s, const double* in, double* out) const noexcept {
    const int d = grid_->dim();
    const double* b = v_.data() + static_cast<std::size_t>(s) * d * d;
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += b[i * d + j] * in[j];
      out[i] = acc;
    }
  }

  // Pointwise matrix transpose of every block.
  CoefficientField transposed() const {
    CoefficientField t(grid_, lambda_);
    const int d = grid_->dim();
    for (std::int64_t s = 0; s < grid_->site_count(); ++s)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) t.entry(s, i, j) = entry(s, j, i);
    return t;
  }

 private:
  GridPtr grid_;
  double lambda_ = 0.0;
  std::vector<double> v_;
};

// ---------------------------------------------------------------------------
// Serialization. Binary layout: "HLF1", u32 dim, u32 side, u32 components,
// then site_count*components little-endian f64 in site-major order. CSV
// layout: header "d,L,components", one line of those values, then one line
// per site with comma-separated components printed as %.17g.

enum class FieldFileFormat { binary, csv };

struct LoadedField {
  int dim = 0;
  int side = 0;
  int components = 0;
  std::vector<double> values;
};

inline void write_field(const std::string& path, const TorusGrid& grid,
                        std::span<const double> values, int components,
                        FieldFileFormat format) {
  if (static_cast<std::int64_t>(values.size()) != grid.site_count() * components)
    throw ValidationError("field value count does not match grid");
  std::ofstream out(path, format == FieldFileFormat::binary
                              ? std::ios::binary | std::ios::trunc
                              : std::ios::trunc);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  if (format == FieldFileFormat::binary) {
    const char magic[4] = {'H', 'L', 'F', '1'};
    out.write(magic, 4);
    const std::uint32_t head[3] = {static_cast<std::uint32_t>(grid.dim()),
                                   static_cast<std::uint32_t>(grid.side()),
                                   static_cast<std::uint32_t>(components)};
    out.write(reinterpret_cast<const char*>(head), sizeof(head));
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    out << "d,L,components\n"
        << grid.dim() << ',' << grid.side() << ',' << components << '\n';
    char buf[32];
    for (std::int64_t s = 0; s < grid.site_count(); ++s) {
      for (int c = 0; c < components; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[static_cast<std::size_t>(s) * components + c]);
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
  }
  if (!out) throw ValidationError("write failed: " + path);
}

inline LoadedField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path);
  char magic[4] = {};
  in.read(magic, 4);
  LoadedField f;
  if (in.gcount() == 4 && std::memcmp(magic, "HLF1", 4) == 0) {
    std::uint32_t head[3];
    in.read(reinterpret_cast<char*>(head), sizeof(head));
    if (!in) throw ValidationError("truncated field file: " + path);
    f.dim = static_cast<int>(head[0]);
    f.side = static_cast<int>(head[1]);
    f.components = static_cast<int>(head[2]);
    if (f.dim < 1 || f.dim > max_dim || f.side < 2 || f.components < 1)
      throw ValidationError("corrupt field header: " + path);
    std::int64_t n = 1;
    for (int k = 0; k < f.dim; ++k) n *= f.side;
    f.values.resize(static_cast<std::size_t>(n) * f.components);
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw ValidationError("truncated field file: " + path);
    return f;
  }
  // CSV fallback: reopen in text mode and parse.
  in.close();
  std::ifstream txt(path);
  std::string line;
  if (!std::getline(txt, line) || line != "d,L,components")
    throw ValidationError("unrecognized field file: " + path);
  if (!std::getline(txt, line)) throw ValidationError("truncated field file: " + path);
  if (std::sscanf(line.c_str(), "%d,%d,%d", &f.dim, &f.side, &f.components) != 3)
    throw ValidationError("corrupt field header: " + path);
  if (f.dim < 1 || f.dim > max_dim || f.side < 2 || f.components < 1)
    throw ValidationError("corrupt field header: " + path);
  std::int64_t n = 1;
  for (int k = 0; k < f.dim; ++k) n *= f.side;
  f.values.reserve(static_cast<std::size_t>(n) * f.components);
  while (std::getline(txt, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    for (int c = 0; c < f.components; ++c) {
      f.values.push_back(std::strtod(p, &end));
      if (end == p) throw ValidationError("corrupt field row: " + path);
      p = (*end == ',') ? end + 1 : end;
    }
  }
  if (static_cast<std::int64_t>(f.values.size()) != n * f.components)
    throw ValidationError("field row count does not match grid: " + path);
  return f;
}

inline void write_scalar_field(const std::string& path, const LatticeScalarField& f,
                               FieldFileFormat format) {
  write_field(path, f.grid(), f.values(), 1, format);
}

inline LatticeScalarField read_scalar_field(const std::string& path) {
  LoadedField raw = read_field(path);
  if (raw.components != 1)
    throw ValidationError("expected a scalar field in: " + path);
  LatticeScalarField f(make_grid(raw.dim, raw.side));
  std::copy(raw.values.begin(), raw.values.end(), f.values().begin());
  return f;
}

inline LatticeVectorField read_vector_field(const std::string& path) {
  LoadedField raw = read_field(path);
  if (raw.components != raw.dim)
    throw ValidationError("expected a vector field in: " + path);
  LatticeVectorField f(make_grid(raw.dim, raw.side));
  std::copy(raw.values.begin(), raw.values.end(), f.values().begin());
  return f;
}

inline void write_vector_field(const std::string& path, const LatticeVectorField& f,
                               FieldFileFormat format) {
  write_field(path, f.grid(), f.values(), f.grid().dim(), format);
}

}  // namespace homlat
