#pragma once

// Periodic-grid containers for the four unknowns (E1, E2, n, v).
//
// The plane is approximated by the box [0, L)^2 sampled at nx * ny points;
// sample (i, j) sits at x = i L / nx, y = j L / ny and is stored at
// index i * ny + j (row-major, x slowest).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "mzk/error.hpp"

namespace mzk {

using cplx = std::complex<double>;

struct Grid2D {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double L = 0.0;
  double dealias_fraction = 2.0 / 3.0;

  /// Validating constructor: nx, ny powers of two, L > 0, fraction in (0, 1].
  static Grid2D make(std::size_t nx, std::size_t ny, double L,
                     double dealias_fraction = 2.0 / 3.0);

  std::size_t size() const { return nx * ny; }
  double dx() const { return L / static_cast<double>(nx); }
  double dy() const { return L / static_cast<double>(ny); }
  double cell_area() const { return dx() * dy(); }
  double x(std::size_t i) const { return static_cast<double>(i) * dx(); }
  double y(std::size_t j) const { return static_cast<double>(j) * dy(); }

  /// Signed mode number of FFT index i along an axis with n points.
  static long mode(std::size_t i, std::size_t n) {
    return i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
  }
  double kx(std::size_t i) const;
  double ky(std::size_t j) const;

  /// True if mode (i, j) lies inside the dealiasing band.
  bool in_band(std::size_t i, std::size_t j) const;

  bool operator==(const Grid2D&) const = default;
};

template <class T>
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(const Grid2D& g) : grid_(g), values_(g.size(), T{}) {}
  Field2D(const Grid2D& g, std::vector<T> values) : grid_(g), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw ContractError("field sample count does not match grid");
    }
  }

  const Grid2D& grid() const { return grid_; }
  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }
  std::vector<T>& data() { return values_; }
  const std::vector<T>& data() const { return values_; }

  T& operator()(std::size_t i, std::size_t j) { return values_[i * grid_.ny + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.ny + j]; }
  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }

  /// Rebook the same samples on a different box side (used by rescaling).
  void set_box(double L) { grid_.L = L; }

 private:
  Grid2D grid_{};
  std::vector<T> values_;
};

using ComplexField2D = Field2D<cplx>;
using RealField2D = Field2D<double>;

struct VectorField2D {
  RealField2D x;
  RealField2D y;

  VectorField2D() = default;
  explicit VectorField2D(const Grid2D& g) : x(g), y(g) {}
  VectorField2D(RealField2D vx, RealField2D vy);
  const Grid2D& grid() const { return x.grid(); }
};

struct SystemState {
  ComplexField2D e1;
  ComplexField2D e2;
  RealField2D n;
  VectorField2D v;
  double t = 0.0;

  SystemState() = default;
  /// Zero state on `g` at time t.
  explicit SystemState(const Grid2D& g, double t = 0.0) : e1(g), e2(g), n(g), v(g), t(t) {}

  const Grid2D& grid() const { return e1.grid(); }
  void set_box(double L);
};

/// Throws InvalidFieldError on any non-finite sample.
void require_finite(std::span<const cplx> v, const char* what);
void require_finite(std::span<const double> v, const char* what);

/// Throws ContractError unless all components share one grid; InvalidFieldError
/// on non-finite samples; DomainError if t < 0.
void validate(const SystemState& s);

bool all_finite(const SystemState& s);

/// Coordinates of sample (i, j) relative to `center`, wrapped into [-L/2, L/2).
double wrapped_offset(double coord, double center, double L);

}  // namespace mzk
