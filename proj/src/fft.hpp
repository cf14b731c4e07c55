#pragma once

// Thin FFTW wrapper. Plans are created once per (size, direction) under a
// mutex; execution uses the new-array interface, which FFTW allows from
// concurrent threads.

#include <complex>
#include <vector>

namespace mpyro::detail {

using Complex = std::complex<double>;

/// In-place unnormalized 2-D DFT of a row-major width x height array.
void fft2d(std::vector<Complex>& data, int width, int height, bool inverse);

} // namespace mpyro::detail
