#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace hpl::fft {

using cvec = std::vector<std::complex<double>>;

/// Smallest power of two >= n.
std::size_t good_size(std::size_t n);

/// Unnormalized in-place DFT of length data.size(); sign -1 forward, +1 backward.
/// Plans are created once per (length, sign) and shared between threads.
void transform(cvec& data, int sign);

/// Linear convolution (length a.size() + b.size() - 1). Small inputs are
/// convolved directly, larger ones through zero-padded transforms.
cvec convolve(cvec const& a, cvec const& b);

}  // namespace hpl::fft
