#include "mzk/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <utility>

namespace mzk {

std::size_t thread_count() {
  static const std::size_t n = [] {
    const char* env = std::getenv("MZK_THREADS");
    if (env == nullptr) return std::size_t{1};
    const long v = std::strtol(env, nullptr, 10);
    return v > 0 ? static_cast<std::size_t>(v) : std::size_t{1};
  }();
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(fn, b, e);
  }
  fn(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

namespace spectral {

namespace {

// One plan pair per grid shape, made on an fftw_malloc buffer. Transforms
// copy through a per-thread aligned buffer of the same shape, so every call
// runs the same codelets regardless of where the caller's vector lives.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

struct AlignedBuffer {
  fftw_complex* p = nullptr;
  explicit AlignedBuffer(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~AlignedBuffer() { fftw_free(p); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

const PlanPair& plans_for(std::size_t nx, std::size_t ny) {
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find({nx, ny});
  if (it != cache.end()) return it->second;
  AlignedBuffer scratch(nx * ny);
  PlanPair pp;
  const int n0 = static_cast<int>(nx), n1 = static_cast<int>(ny);
  // The estimated plans for large shapes run faster through the unaligned
  // codelets. The choice depends on the shape only, so results stay
  // reproducible from run to run.
  const unsigned flags = FFTW_ESTIMATE | (nx * ny >= 65536 ? FFTW_UNALIGNED : 0u);
  pp.fwd = fftw_plan_dft_2d(n0, n1, scratch.p, scratch.p, FFTW_FORWARD, flags);
  pp.bwd = fftw_plan_dft_2d(n0, n1, scratch.p, scratch.p, FFTW_BACKWARD, flags);
  return cache.emplace(std::make_pair(nx, ny), pp).first->second;
}

fftw_complex* buffer_for(std::size_t nx, std::size_t ny) {
  thread_local std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<AlignedBuffer>> bufs;
  auto& b = bufs[{nx, ny}];
  if (!b) b = std::make_unique<AlignedBuffer>(nx * ny);
  return b->p;
}

void execute(const Grid2D& g, std::vector<cplx>& data, bool fwd) {
  const PlanPair& pp = plans_for(g.nx, g.ny);
  fftw_complex* buf = buffer_for(g.nx, g.ny);
  std::memcpy(buf, data.data(), data.size() * sizeof(cplx));
  fftw_execute_dft(fwd ? pp.fwd : pp.bwd, buf, buf);
  std::memcpy(static_cast<void*>(data.data()), buf, data.size() * sizeof(cplx));
}

template <class Mult>
std::vector<cplx> apply_multiplier(const Grid2D& g, std::vector<cplx> modes, Mult&& mult) {
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      modes[i * g.ny + j] *= mult(i, j);
    }
  }
  return modes;
}

bool nyquist_x(const Grid2D& g, std::size_t i) { return i == g.nx / 2; }
bool nyquist_y(const Grid2D& g, std::size_t j) { return j == g.ny / 2; }

}  // namespace

std::vector<cplx> forward(const Grid2D& g, std::vector<cplx> samples) {
  execute(g, samples, true);
  return samples;
}

std::vector<cplx> inverse(const Grid2D& g, std::vector<cplx> modes) {
  execute(g, modes, false);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& z : modes) z *= scale;
  return modes;
}

std::vector<cplx> forward(const ComplexField2D& f) { return forward(f.grid(), f.data()); }

std::vector<cplx> forward(const RealField2D& f) {
  std::vector<cplx> c(f.data().begin(), f.data().end());
  return forward(f.grid(), std::move(c));
}

ComplexField2D to_complex(const RealField2D& f) {
  return ComplexField2D(f.grid(), std::vector<cplx>(f.data().begin(), f.data().end()));
}

RealField2D real_part(const Grid2D& g, const std::vector<cplx>& samples) {
  std::vector<double> r(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) r[k] = samples[k].real();
  return RealField2D(g, std::move(r));
}

ComplexField2D derivative(const ComplexField2D& f, Axis axis) {
  require_finite(f.values(), "derivative input");
  const Grid2D& g = f.grid();
  auto m = apply_multiplier(g, forward(f), [&](std::size_t i, std::size_t j) {
    if (axis == Axis::x) return nyquist_x(g, i) ? cplx{} : cplx{0.0, g.kx(i)};
    return nyquist_y(g, j) ? cplx{} : cplx{0.0, g.ky(j)};
  });
  return ComplexField2D(g, inverse(g, std::move(m)));
}

RealField2D derivative(const RealField2D& f, Axis axis) {
  return real_part(f.grid(), derivative(to_complex(f), axis).data());
}

ComplexField2D second_derivative(const ComplexField2D& f, Axis axis) {
  require_finite(f.values(), "derivative input");
  const Grid2D& g = f.grid();
  auto m = apply_multiplier(g, forward(f), [&](std::size_t i, std::size_t j) {
    if (axis == Axis::x) return nyquist_x(g, i) ? cplx{} : cplx{-g.kx(i) * g.kx(i), 0.0};
    return nyquist_y(g, j) ? cplx{} : cplx{-g.ky(j) * g.ky(j), 0.0};
  });
  return ComplexField2D(g, inverse(g, std::move(m)));
}

ComplexField2D laplacian(const ComplexField2D& f) {
  require_finite(f.values(), "laplacian input");
  const Grid2D& g = f.grid();
  auto m = apply_multiplier(g, forward(f), [&](std::size_t i, std::size_t j) {
    return cplx{-(g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j)), 0.0};
  });
  return ComplexField2D(g, inverse(g, std::move(m)));
}

RealField2D laplacian(const RealField2D& f) {
  return real_part(f.grid(), laplacian(to_complex(f)).data());
}

VectorField2D gradient(const RealField2D& f) {
  require_finite(f.values(), "gradient input");
  const Grid2D& g = f.grid();
  const auto modes = forward(f);
  auto mx = apply_multiplier(g, modes, [&](std::size_t i, std::size_t) {
    return nyquist_x(g, i) ? cplx{} : cplx{0.0, g.kx(i)};
  });
  auto my = apply_multiplier(g, modes, [&](std::size_t, std::size_t j) {
    return nyquist_y(g, j) ? cplx{} : cplx{0.0, g.ky(j)};
  });
  return VectorField2D(real_part(g, inverse(g, std::move(mx))),
                       real_part(g, inverse(g, std::move(my))));
}

RealField2D divergence(const VectorField2D& v) {
  const Grid2D& g = v.grid();
  auto mx = forward(v.x);
  const auto my = forward(v.y);
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const std::size_t k = i * g.ny + j;
      const cplx dx = nyquist_x(g, i) ? cplx{} : cplx{0.0, g.kx(i)};
      const cplx dy = nyquist_y(g, j) ? cplx{} : cplx{0.0, g.ky(j)};
      mx[k] = dx * mx[k] + dy * my[k];
    }
  }
  return real_part(g, inverse(g, std::move(mx)));
}

RealField2D dealias(const RealField2D& f) {
  const Grid2D& g = f.grid();
  auto m = apply_multiplier(g, forward(f), [&](std::size_t i, std::size_t j) {
    return g.in_band(i, j) ? cplx{1.0, 0.0} : cplx{};
  });
  return real_part(g, inverse(g, std::move(m)));
}

VectorField2D solve_divergence(const RealField2D& src) {
  // div v = -src with v = grad(phi)  =>  Laplacian(phi) = -src.
  const Grid2D& g = src.grid();
  const auto modes = forward(src);
  std::vector<cplx> mx(g.size()), my(g.size());
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) {
      const std::size_t k = i * g.ny + j;
      const double kx = nyquist_x(g, i) ? 0.0 : g.kx(i);
      const double ky = nyquist_y(g, j) ? 0.0 : g.ky(j);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      const cplx phi = modes[k] / k2;  // -src_hat / (-k2)
      mx[k] = cplx{0.0, kx} * phi;
      my[k] = cplx{0.0, ky} * phi;
    }
  }
  return VectorField2D(real_part(g, inverse(g, std::move(mx))),
                       real_part(g, inverse(g, std::move(my))));
}

namespace {

std::vector<cplx> resample_modes(const Grid2D& from, const std::vector<cplx>& modes,
                                 const Grid2D& to, double* dropped) {
  std::vector<cplx> out(to.size());
  double kept = 0.0, total = 0.0;
  const long hx = static_cast<long>(std::min(from.nx, to.nx) / 2);
  const long hy = static_cast<long>(std::min(from.ny, to.ny) / 2);
  for (std::size_t i = 0; i < from.nx; ++i) {
    for (std::size_t j = 0; j < from.ny; ++j) {
      const cplx z = modes[i * from.ny + j];
      total += std::norm(z);
      const long mx = Grid2D::mode(i, from.nx);
      const long my = Grid2D::mode(j, from.ny);
      // Shared Nyquist modes are dropped so real fields stay real.
      if (mx >= hx || mx <= -hx || my >= hy || my <= -hy) continue;
      const std::size_t ti = static_cast<std::size_t>(mx < 0 ? mx + static_cast<long>(to.nx) : mx);
      const std::size_t tj = static_cast<std::size_t>(my < 0 ? my + static_cast<long>(to.ny) : my);
      out[ti * to.ny + tj] = z;
      kept += std::norm(z);
    }
  }
  if (dropped) *dropped = total > 0.0 ? (total - kept) / total : 0.0;
  const double scale = static_cast<double>(to.size()) / static_cast<double>(from.size());
  for (auto& z : out) z *= scale;
  return out;
}

}  // namespace

ComplexField2D resample(const ComplexField2D& f, std::size_t nx, std::size_t ny, double* dropped) {
  const Grid2D to = Grid2D::make(nx, ny, f.grid().L, f.grid().dealias_fraction);
  return ComplexField2D(to, inverse(to, resample_modes(f.grid(), forward(f), to, dropped)));
}

RealField2D resample(const RealField2D& f, std::size_t nx, std::size_t ny, double* dropped) {
  const Grid2D to = Grid2D::make(nx, ny, f.grid().L, f.grid().dealias_fraction);
  return real_part(to, inverse(to, resample_modes(f.grid(), forward(f), to, dropped)));
}

}  // namespace spectral

namespace {

double parseval_weight(const Grid2D& g) {
  return g.cell_area() / static_cast<double>(g.size());
}

double weighted_k2_sum(const Grid2D& g, const std::vector<cplx>& modes, bool band_only) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double kx = g.kx(i);
    for (std::size_t j = 0; j < g.ny; ++j) {
      if (band_only && !g.in_band(i, j)) continue;
      const double ky = g.ky(j);
      s += (kx * kx + ky * ky) * std::norm(modes[i * g.ny + j]);
    }
  }
  return s;
}

}  // namespace

double gradient_norm_sq(const ComplexField2D& f) {
  require_finite(f.values(), "gradient_norm_sq input");
  return parseval_weight(f.grid()) * weighted_k2_sum(f.grid(), spectral::forward(f), false);
}

double gradient_norm_sq(const RealField2D& f) { return gradient_norm_sq(spectral::to_complex(f)); }

double band_fraction_gradient(const ComplexField2D& f) {
  const auto modes = spectral::forward(f);
  const double total = weighted_k2_sum(f.grid(), modes, false);
  if (total == 0.0) return 1.0;
  return weighted_k2_sum(f.grid(), modes, true) / total;
}

double l2_norm_sq(const ComplexField2D& f) {
  require_finite(f.values(), "l2_norm_sq input");
  double s = 0.0;
  for (const auto& z : f.values()) s += std::norm(z);
  return s * f.grid().cell_area();
}

double l2_norm_sq(const RealField2D& f) {
  require_finite(f.values(), "l2_norm_sq input");
  double s = 0.0;
  for (double z : f.values()) s += z * z;
  return s * f.grid().cell_area();
}

double l2_norm_sq(const VectorField2D& v) { return l2_norm_sq(v.x) + l2_norm_sq(v.y); }

double l4_norm_4(const ComplexField2D& f) {
  require_finite(f.values(), "l4_norm_4 input");
  double s = 0.0;
  for (const auto& z : f.values()) {
    const double a = std::norm(z);
    s += a * a;
  }
  return s * f.grid().cell_area();
}

double l4_norm_4(const RealField2D& f) {
  require_finite(f.values(), "l4_norm_4 input");
  double s = 0.0;
  for (double z : f.values()) s += z * z * z * z;
  return s * f.grid().cell_area();
}

double l2_norm_sq_spectral(const ComplexField2D& f) {
  double s = 0.0;
  for (const auto& z : spectral::forward(f)) s += std::norm(z);
  return s * parseval_weight(f.grid());
}

double boundary_mass_fraction(const ComplexField2D& f) {
  const Grid2D& g = f.grid();
  double inner = 0.0, total = 0.0;
  for (std::size_t i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    for (std::size_t j = 0; j < g.ny; ++j) {
      const double y = g.y(j);
      const double a = std::norm(f(i, j));
      total += a;
      if (x >= 0.25 * g.L && x < 0.75 * g.L && y >= 0.25 * g.L && y < 0.75 * g.L) inner += a;
    }
  }
  return total > 0.0 ? (total - inner) / total : 0.0;
}

}  // namespace mzk
