#include "hpl/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hpl {

namespace {

constexpr std::uint32_t kW32A = 0x9E3779B9u;
constexpr std::uint32_t kW32B = 0xBB67AE85u;
constexpr std::uint32_t kM4x32A = 0xD2511F53u;
constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2> const& key)
{
    std::uint64_t const p0 = static_cast<std::uint64_t>(kM4x32A) * ctr[0];
    std::uint64_t const p1 = static_cast<std::uint64_t>(kM4x32B) * ctr[2];
    auto const hi0 = static_cast<std::uint32_t>(p0 >> 32);
    auto const lo0 = static_cast<std::uint32_t>(p0);
    auto const hi1 = static_cast<std::uint32_t>(p1 >> 32);
    auto const lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

// Largest mean handled by a single inversion pass; larger means are split
// into chunks (a sum of independent Poissons is Poisson).
constexpr double kPoissonChunk = 32.0;

std::uint64_t poisson_inversion(RandomStream& rng, double mean)
{
    double const u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
        if (p == 0.0 && cdf < u) {
            // tail underflow; cdf is 1 to double precision
            break;
        }
    }
    return k;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW32A;
            key[1] += kW32B;
        }
        philox_round(counter, key);
    }
    return counter;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id)
{
    std::uint64_t const k = splitmix64(seed);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

RandomStream RandomStream::substream(std::uint64_t tag) const
{
    // Children share the key and live in a hashed stream-id slot.
    return RandomStream(seed_, splitmix64(stream_id_ ^ splitmix64(tag + 0x5bd1e995ull)));
}

void RandomStream::refill()
{
    std::array<std::uint32_t, 4> const ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    auto const out = philox4x32(ctr, key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    available_ = 2;
    ++block_;
}

std::uint64_t RandomStream::next_u64()
{
    if (available_ == 0) {
        refill();
    }
    return buffer_[2 - available_--];
}

double RandomStream::uniform()
{
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double RandomStream::exponential()
{
    return -std::log(uniform());
}

double RandomStream::normal()
{
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double const r = std::sqrt(-2.0 * std::log(uniform()));
    double const theta = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

std::uint64_t RandomStream::poisson(double mean)
{
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("poisson: mean must be finite and non-negative");
    }
    std::uint64_t total = 0;
    while (mean > kPoissonChunk) {
        total += poisson_inversion(*this, kPoissonChunk);
        mean -= kPoissonChunk;
    }
    if (mean > 0.0) {
        total += poisson_inversion(*this, mean);
    }
    return total;
}

std::uint64_t RandomStream::below(std::uint64_t n)
{
    if (n == 0) {
        throw std::invalid_argument("below: n must be positive");
    }
    // Lemire's nearly-divisionless method.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        std::uint64_t const threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

int RandomStream::sign()
{
    return (next_u64() >> 63) ? 1 : -1;
}

}  // namespace hpl
