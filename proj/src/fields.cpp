#include "mzk/fields.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mzk {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

Grid2D Grid2D::make(std::size_t nx, std::size_t ny, double L, double dealias_fraction) {
  if (!is_pow2(nx) || !is_pow2(ny) || nx < 2 || ny < 2) {
    throw DomainError("grid mode counts must be powers of two >= 2, got " + std::to_string(nx) +
                      "x" + std::to_string(ny));
  }
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw DomainError("box side L must be positive and finite");
  }
  if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0)) {
    throw DomainError("dealias_fraction must lie in (0, 1]");
  }
  return Grid2D{nx, ny, L, dealias_fraction};
}

double Grid2D::kx(std::size_t i) const {
  return 2.0 * std::numbers::pi / L * static_cast<double>(mode(i, nx));
}

double Grid2D::ky(std::size_t j) const {
  return 2.0 * std::numbers::pi / L * static_cast<double>(mode(j, ny));
}

bool Grid2D::in_band(std::size_t i, std::size_t j) const {
  const double cx = dealias_fraction * static_cast<double>(nx / 2);
  const double cy = dealias_fraction * static_cast<double>(ny / 2);
  return std::abs(static_cast<double>(mode(i, nx))) <= cx &&
         std::abs(static_cast<double>(mode(j, ny))) <= cy;
}

VectorField2D::VectorField2D(RealField2D vx, RealField2D vy) : x(std::move(vx)), y(std::move(vy)) {
  if (!(x.grid() == y.grid())) throw ContractError("vector components live on different grids");
}

void SystemState::set_box(double L) {
  e1.set_box(L);
  e2.set_box(L);
  n.set_box(L);
  v.x.set_box(L);
  v.y.set_box(L);
}

void require_finite(std::span<const cplx> v, const char* what) {
  for (const auto& z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw InvalidFieldError(std::string("non-finite sample in ") + what);
    }
  }
}

void require_finite(std::span<const double> v, const char* what) {
  for (double z : v) {
    if (!std::isfinite(z)) throw InvalidFieldError(std::string("non-finite sample in ") + what);
  }
}

void validate(const SystemState& s) {
  const Grid2D& g = s.grid();
  if (!(s.e2.grid() == g) || !(s.n.grid() == g) || !(s.v.x.grid() == g) || !(s.v.y.grid() == g)) {
    throw ContractError("state components live on different grids");
  }
  require_finite(s.e1.values(), "E1");
  require_finite(s.e2.values(), "E2");
  require_finite(s.n.values(), "n");
  require_finite(s.v.x.values(), "vx");
  require_finite(s.v.y.values(), "vy");
  if (!(s.t >= 0.0)) throw DomainError("state time must be non-negative");
}

bool all_finite(const SystemState& s) {
  auto ok_c = [](std::span<const cplx> v) {
    for (const auto& z : v)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  };
  auto ok_r = [](std::span<const double> v) {
    for (double z : v)
      if (!std::isfinite(z)) return false;
    return true;
  };
  return ok_c(s.e1.values()) && ok_c(s.e2.values()) && ok_r(s.n.values()) &&
         ok_r(s.v.x.values()) && ok_r(s.v.y.values());
}

double wrapped_offset(double coord, double center, double L) {
  double d = coord - center;
  d -= L * std::floor(d / L + 0.5);
  return d;
}

}  // namespace mzk
