#pragma once

// Spectral machinery on the periodic box: FFTs, derivatives, dealiasing,
// and the norms used throughout (all with the trapezoidal/Parseval weight).

#include <cstddef>
#include <functional>
#include <vector>

#include "mzk/fields.hpp"

namespace mzk {

/// Worker count for pointwise loops, read from MZK_THREADS (default 1).
/// Results never depend on this value.
std::size_t thread_count();

/// Runs fn(begin, end) over [0, n) split into contiguous chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

namespace spectral {

/// Unnormalized forward DFT of a complex sample array on `g`.
std::vector<cplx> forward(const Grid2D& g, std::vector<cplx> samples);
/// Inverse DFT including the 1/(nx ny) normalization.
std::vector<cplx> inverse(const Grid2D& g, std::vector<cplx> modes);

std::vector<cplx> forward(const ComplexField2D& f);
std::vector<cplx> forward(const RealField2D& f);

ComplexField2D to_complex(const RealField2D& f);
RealField2D real_part(const Grid2D& g, const std::vector<cplx>& samples);

enum class Axis { x, y };

/// d/dx or d/dy of the trigonometric interpolant (Nyquist mode dropped).
ComplexField2D derivative(const ComplexField2D& f, Axis axis);
RealField2D derivative(const RealField2D& f, Axis axis);

/// Second derivative along one axis, -k^2 multiplier (Nyquist dropped).
ComplexField2D second_derivative(const ComplexField2D& f, Axis axis);

ComplexField2D laplacian(const ComplexField2D& f);
RealField2D laplacian(const RealField2D& f);

VectorField2D gradient(const RealField2D& f);
RealField2D divergence(const VectorField2D& v);

/// Projection onto the dealiasing band.
RealField2D dealias(const RealField2D& f);

/// Curl-free, mean-free v with div v = -g: v = -grad(Laplacian^{-1} g).
VectorField2D solve_divergence(const RealField2D& g);

/// Spectral resampling onto a different mode count on the same box
/// (zero-padding or truncation). `dropped` receives the relative L2 mass of
/// truncated modes.
ComplexField2D resample(const ComplexField2D& f, std::size_t nx, std::size_t ny,
                        double* dropped = nullptr);
RealField2D resample(const RealField2D& f, std::size_t nx, std::size_t ny,
                     double* dropped = nullptr);

}  // namespace spectral

/// int |grad f|^2 dx computed as the Parseval sum of |k|^2 |f_hat|^2.
double gradient_norm_sq(const ComplexField2D& f);
double gradient_norm_sq(const RealField2D& f);

/// Fraction of gradient_norm_sq carried by modes inside the dealiasing band.
double band_fraction_gradient(const ComplexField2D& f);

double l2_norm_sq(const ComplexField2D& f);
double l2_norm_sq(const RealField2D& f);
double l2_norm_sq(const VectorField2D& v);

double l4_norm_4(const ComplexField2D& f);
double l4_norm_4(const RealField2D& f);

/// Same quantity evaluated on the mode side; equals l2_norm_sq by Parseval.
double l2_norm_sq_spectral(const ComplexField2D& f);

/// Fraction of |f|^2 located within distance L/4 of the box edge, measured
/// from the box center.
double boundary_mass_fraction(const ComplexField2D& f);

}  // namespace mzk
