#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "fct/core/tensor.hpp"

namespace fct::spectral {

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
std::size_t next_power_of_two(std::size_t n);
constexpr std::size_t half_length(std::size_t n) { return n / 2 + 1; }

// Non-redundant half of the spectrum of a real signal along one axis.
//
// `bins` has the shape of the source tensor with the transformed axis
// replaced by floor(N/2)+1. The DC bin, and the Nyquist bin when N is even,
// are purely real; the remaining bins of the full spectrum are the complex
// conjugates F(N-k) = conj(F(k)).
struct HalfSpectrum {
  ComplexTensor bins;
  std::size_t original_len = 0;
  std::size_t axis = 0;
};

// Twiddle and bit-reversal tables for one power-of-two length. Immutable once
// built and shared between threads through plan_for().
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  // In-place complex transform of one contiguous sequence. inverse=true uses
  // the conjugate twiddles and applies no scaling.
  void execute(double* re, double* im, bool inverse) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

std::shared_ptr<const FftPlan> plan_for(std::size_t n);

// Forward transform, unnormalised: F(k) = sum_n x(n) exp(-j 2 pi k n / N).
// Radix-2 fast path for power-of-two N, direct O(N^2) sum otherwise.
// Throws SizeError when the axis has fewer than 2 samples.
HalfSpectrum dft(const RealTensor& x, std::size_t axis);
// Direct O(N^2) evaluation for any N >= 2; the reference for the fast path.
HalfSpectrum dft_naive(const RealTensor& x, std::size_t axis);

// Exact inverse with the 1/N factor. Throws InvariantError if the DC or
// Nyquist bin carries an imaginary part.
RealTensor idft(const HalfSpectrum& s);

// Real signal synthesised from half-spectrum bins, ignoring any imaginary
// part on the DC/Nyquist bins (those terms multiply sin(0) and sin(pi n)).
// Used inside attention, where mixed bins are not guaranteed to be real there.
RealTensor synthesize(const ComplexTensor& bins, std::size_t n, std::size_t axis);

// Adjoint of x -> dft(x).bins, treating each bin's real and imaginary parts as
// outputs: <dft(x), g> = <x, dft_adjoint(g)>. Interior bins represent a
// conjugate pair of the full spectrum, so the route through the inverse
// transform weights them by 1/2 relative to DC and Nyquist.
RealTensor dft_adjoint(const ComplexTensor& grad_bins, std::size_t n, std::size_t axis);

// Adjoint of (bins -> synthesize(bins, n, axis)).
ComplexTensor synthesize_adjoint(const RealTensor& grad, std::size_t axis);

// Conjugate-symmetric expansion to all N bins along the axis.
ComplexTensor full_spectrum(const HalfSpectrum& s);

// Cosine (real-spectrum) and sine (imaginary-spectrum) components of x along
// its last axis; they sum to x. x must be rank 1 or 2.
std::pair<RealTensor, RealTensor> decompose(const RealTensor& x);

// Full complex DFT of each row of a matrix (no normalisation unless inverse,
// which carries 1/N).
ComplexTensor complex_dft_rows(const ComplexTensor& x, bool inverse = false);

}  // namespace fct::spectral
