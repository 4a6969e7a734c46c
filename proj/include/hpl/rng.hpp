#pragma once

#include <array>
#include <cstdint>

namespace hpl {

/// Philox4x32-10 block function (Salmon et al., SC'11).
///
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits. Pure
/// function: the same (counter, key) always produces the same block.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to turn seeds and stream indices into keys.
constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// Stream layout: the Philox key is splitmix64(seed); counter words 2..3
/// hold the 64-bit stream id and words 0..1 a block index that starts at 0
/// and increments by one per 128-bit block. Every (seed, stream id) pair is
/// an independent sequence, so replica r of a run with master seed s always
/// draws from RandomStream(s, r) regardless of which worker thread runs it.
///
/// All variate generators below are implemented here (not via <random>
/// distributions) so output is bit-identical across standard libraries.
class RandomStream
{
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    /// Child stream for a named sub-task (e.g. calibration batch, permutations).
    RandomStream substream(std::uint64_t tag) const;

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);
    /// Standard exponential, -log(U).
    double exponential();
    /// Standard normal (Box-Muller; the second variate is cached).
    double normal();
    /// Poisson count with the given mean (exact; sequential inversion).
    std::uint64_t poisson(double mean);
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Fair +-1.
    int sign();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint32_t, 2> key_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// Stream for replica `replica` of a run with master seed `seed`.
inline RandomStream replica_stream(std::uint64_t seed, std::uint64_t replica)
{
    return RandomStream(seed, replica);
}

}  // namespace hpl
