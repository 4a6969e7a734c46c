#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace hpl::fft {

namespace {

fftw_plan plan_for(std::size_t n, int sign)
{
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, int>, fftw_plan> plans;
    std::lock_guard lock(mutex);
    auto const key = std::make_pair(n, sign);
    if (auto it = plans.find(key); it != plans.end()) {
        return it->second;
    }
    auto* buffer = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buffer, buffer,
                                      sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buffer);
    plans.emplace(key, plan);
    return plan;
}

}  // namespace

std::size_t good_size(std::size_t n)
{
    std::size_t size = 1;
    while (size < n) {
        size <<= 1;
    }
    return size;
}

void transform(cvec& data, int sign)
{
    if (data.empty()) {
        return;
    }
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_for(data.size(), sign), ptr, ptr);
}

cvec convolve(cvec const& a, cvec const& b)
{
    if (a.empty() || b.empty()) {
        return {};
    }
    if (a.size() == 1 || b.size() == 1) {
        auto const& scalar = a.size() == 1 ? a : b;
        cvec out = a.size() == 1 ? b : a;
        for (auto& v : out) {
            v *= scalar[0];
        }
        return out;
    }
    std::size_t const len = a.size() + b.size() - 1;
    if (a.size() * b.size() <= 4096) {
        cvec out(len);
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < b.size(); ++j) {
                out[i + j] += a[i] * b[j];
            }
        }
        return out;
    }
    std::size_t const n = good_size(len);
    cvec fa(n);
    cvec fb(n);
    std::copy(a.begin(), a.end(), fa.begin());
    std::copy(b.begin(), b.end(), fb.begin());
    transform(fa, -1);
    transform(fb, -1);
    for (std::size_t i = 0; i < n; ++i) {
        fa[i] *= fb[i];
    }
    transform(fa, +1);
    double const scale = 1.0 / static_cast<double>(n);
    cvec out(len);
    for (std::size_t i = 0; i < len; ++i) {
        out[i] = fa[i] * scale;
    }
    return out;
}

}  // namespace hpl::fft
