#include "hpl/hermite_oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "fft.hpp"
#include "hpl/digest.hpp"
#include "hpl/wick.hpp"

namespace hpl {

namespace {

void check_hurst(double H)
{
    if (!(H > 0.0 && H < 1.0)) {
        throw std::invalid_argument("Hurst coefficient must lie in (0, 1)");
    }
}

void check_lrd(double H, int k)
{
    if (!(H > 0.5 && H < 1.0)) {
        throw std::invalid_argument("long-range dependence needs H in (1/2, 1)");
    }
    if (k < 1) {
        throw std::invalid_argument("Hermite order k must be >= 1");
    }
}

struct FbmFactor
{
    std::vector<std::size_t> positive;  // indices of t > 0 in the caller's grid
    Eigen::MatrixXd lower;
};

std::shared_ptr<FbmFactor const> fbm_factor(double H, std::span<double const> t_grid)
{
    static std::mutex mutex;
    static std::map<std::pair<double, std::vector<double>>, std::shared_ptr<FbmFactor const>> cache;
    std::vector<double> key_grid(t_grid.begin(), t_grid.end());
    std::lock_guard lock(mutex);
    auto key = std::make_pair(H, key_grid);
    if (auto it = cache.find(key); it != cache.end()) {
        return it->second;
    }
    auto factor = std::make_shared<FbmFactor>();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] > 0.0) {
            factor->positive.push_back(i);
        }
    }
    auto const n = static_cast<Eigen::Index>(factor->positive.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            cov(a, b) = target_covariance(H, t_grid[factor->positive[a]], t_grid[factor->positive[b]]);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("fBm covariance is not numerically positive definite (H = "
                                 + std::to_string(H) + ", " + std::to_string(n) + " points)");
    }
    factor->lower = llt.matrixL();
    std::shared_ptr<FbmFactor const> shared = std::move(factor);
    cache.emplace(std::move(key), shared);
    return shared;
}

/// Set partitions of {0..k-1} as lists of blocks.
void set_partitions_rec(int k, int s, std::vector<std::vector<int>>& blocks,
                        std::vector<std::vector<std::vector<int>>>& out)
{
    if (s == k) {
        out.push_back(blocks);
        return;
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        blocks[b].push_back(s);
        set_partitions_rec(k, s + 1, blocks, out);
        blocks[b].pop_back();
    }
    blocks.push_back({s});
    set_partitions_rec(k, s + 1, blocks, out);
    blocks.pop_back();
}

double bin_mass(double a, double lo, double hi)
{
    if (a == 0.0) {
        return hi - lo;
    }
    return (std::pow(hi, 1.0 - a) - std::pow(lo, 1.0 - a)) / (1.0 - a);
}

}  // namespace

double target_covariance(double H, double s, double t)
{
    check_hurst(H);
    if (s < 0.0 || t < 0.0) {
        throw std::invalid_argument("target covariance needs s, t >= 0");
    }
    double const h2 = 2.0 * H;
    return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(s - t), h2));
}

std::vector<double> fbm_sample(double H, std::span<double const> t_grid, RandomStream& rng)
{
    check_hurst(H);
    if (t_grid.empty() || t_grid.size() > 4096) {
        throw std::invalid_argument("fBm grid must have between 1 and 4096 points");
    }
    std::vector<double> sorted(t_grid.begin(), t_grid.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0.0 || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("fBm grid must hold distinct nonnegative times");
    }
    auto const factor = fbm_factor(H, t_grid);
    auto const n = static_cast<Eigen::Index>(factor->positive.size());
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = rng.normal();
    }
    Eigen::VectorXd const x = factor->lower.triangularView<Eigen::Lower>() * z;
    std::vector<double> out(t_grid.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        out[factor->positive[i]] = x(i);
    }
    return out;
}

double hermite_polynomial(int j, double x)
{
    if (j < 0) {
        throw std::invalid_argument("Hermite degree must be >= 0");
    }
    double prev = 1.0;
    if (j == 0) {
        return prev;
    }
    double cur = x;
    for (int n = 1; n < j; ++n) {
        double const next = x * cur - n * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double lrd_correlation(double H, int k, std::size_t lag)
{
    return std::pow(1.0 + static_cast<double>(lag), (2.0 * H - 2.0) / k);
}

LrdSampler::LrdSampler(double H, int k, std::size_t n) : H_(H), k_(k), n_(n)
{
    check_lrd(H, k);
    if (n == 0) {
        throw std::invalid_argument("sequence length must be positive");
    }
    if (n <= 4096) {
        method_ = Method::cholesky;
        auto const N = static_cast<Eigen::Index>(n);
        Eigen::MatrixXd cov(N, N);
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = 0; j < N; ++j) {
                cov(i, j) = lrd_correlation(H, k, static_cast<std::size_t>(std::abs(i - j)));
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
            Eigen::VectorXd lambda = eig.eigenvalues();
            double const floor = 1e-14 * lambda.cwiseAbs().maxCoeff();
            lambda = lambda.cwiseMax(floor);
            Eigen::MatrixXd const projected =
                eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
            perturbation_ = (projected - cov).norm();
            if (perturbation_ >= 1e-8) {
                throw std::runtime_error("LRD correlation matrix is not positive definite "
                                         "(nearest-PD perturbation "
                                         + std::to_string(perturbation_) + ")");
            }
            llt.compute(projected);
            if (llt.info() != Eigen::Success) {
                throw std::runtime_error("LRD Cholesky failed after nearest-PD projection");
            }
        }
        Eigen::MatrixXd const L = llt.matrixL();
        factor_.resize(n * (n + 1) / 2);
        std::size_t pos = 0;
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                factor_[pos++] = L(i, j);
            }
        }
        return;
    }
    method_ = Method::circulant;
    std::size_t const M = 2 * n;
    fft::cvec c(M);
    for (std::size_t j = 0; j < M; ++j) {
        c[j] = lrd_correlation(H, k, std::min(j, M - j));
    }
    fft::transform(c, -1);
    double max_lambda = 0.0;
    double min_lambda = 0.0;
    for (auto const& v : c) {
        max_lambda = std::max(max_lambda, v.real());
        min_lambda = std::min(min_lambda, v.real());
    }
    if (min_lambda < -1e-10 * max_lambda) {
        throw std::runtime_error("circulant embedding has negative eigenvalues; use the Cholesky "
                                 "path (n <= 4096)");
    }
    eigen_sqrt_.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
        eigen_sqrt_[j] = std::sqrt(std::max(0.0, c[j].real()) / static_cast<double>(M));
    }
}

std::vector<double> LrdSampler::sample(RandomStream& rng) const
{
    std::vector<double> out(n_);
    if (method_ == Method::cholesky) {
        std::vector<double> z(n_);
        for (double& v : z) {
            v = rng.normal();
        }
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
                acc += factor_[pos++] * z[j];
            }
            out[i] = acc;
        }
        return out;
    }
    fft::cvec w(eigen_sqrt_.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        double const re = rng.normal();
        double const im = rng.normal();
        w[j] = eigen_sqrt_[j] * std::complex<double>(re, im);
    }
    fft::transform(w, -1);
    for (std::size_t i = 0; i < n_; ++i) {
        out[i] = w[i].real();
    }
    return out;
}

std::vector<double> lrd_gaussian_sequence(double H, int k, std::size_t n, RandomStream& rng)
{
    check_lrd(H, k);
    static std::mutex mutex;
    static std::map<std::tuple<double, int, std::size_t>, std::shared_ptr<LrdSampler const>> cache;
    std::shared_ptr<LrdSampler const> sampler;
    {
        std::lock_guard lock(mutex);
        auto const key = std::make_tuple(H, k, n);
        auto it = cache.find(key);
        if (it == cache.end()) {
            it = cache.emplace(key, std::make_shared<LrdSampler const>(H, k, n)).first;
        }
        sampler = it->second;
    }
    return sampler->sample(rng);
}

void OracleConfig::validate() const
{
    check_lrd(H, k);
    if (n == 0) {
        throw std::invalid_argument("partial-sum length n must be positive");
    }
    if (t_grid.empty()) {
        throw std::invalid_argument("t_grid must not be empty");
    }
    for (double t : t_grid) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw std::invalid_argument("t_grid values must be finite and >= 0");
        }
    }
}

std::string OracleConfig::digest() const
{
    return Digest{}.add("oracle").add(k).add(H).add(static_cast<double>(n)).add(t_grid).hex();
}

std::vector<double> hermite_partial_sum(OracleConfig const& config, RandomStream& rng)
{
    config.validate();
    auto const nd = static_cast<double>(config.n);
    auto const steps = [&](double t) {
        return static_cast<std::size_t>(std::floor(nd * t + 1e-9));
    };
    double const t_max = *std::max_element(config.t_grid.begin(), config.t_grid.end());
    std::size_t const length = steps(t_max);
    std::vector<double> partial(length + 1, 0.0);
    if (length > 0) {
        auto const xi = lrd_gaussian_sequence(config.H, config.k, length, rng);
        for (std::size_t l = 0; l < length; ++l) {
            partial[l + 1] = partial[l] + hermite_polynomial(config.k, xi[l]);
        }
    }
    double const scale = std::pow(nd, -config.H);
    std::vector<double> out;
    out.reserve(config.t_grid.size());
    for (double t : config.t_grid) {
        out.push_back(scale * partial[steps(t)]);
    }
    return out;
}

void SpectralGrid::validate() const
{
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("spectral cutoff must be positive");
    }
    if (bins < 1) {
        throw std::invalid_argument("spectral grid needs at least one bin");
    }
}

std::vector<double> symmetric_exponents(int k, double H)
{
    check_lrd(H, k);
    return std::vector<double>(static_cast<std::size_t>(k), 2.0 * (H - 1.0) / k + 1.0);
}

SpectralSample spectral_hermite_sample(std::span<double const> exponents,
                                       std::span<double const> t_grid, SpectralGrid const& grid,
                                       RandomStream& rng)
{
    grid.validate();
    auto const k = static_cast<int>(exponents.size());
    if (k < 1 || k > 3) {
        throw std::invalid_argument("spectral sampler supports orders 1 to 3");
    }
    double exponent_sum = 0.0;
    for (double a : exponents) {
        if (!(a >= 0.0 && a < 1.0)) {
            throw std::invalid_argument("spectral exponents must lie in [0, 1)");
        }
        exponent_sum += a;
    }
    double const hurst = 1.0 - 0.5 * k + 0.5 * exponent_sum;
    if (!(hurst > 0.5 && hurst < 1.0)) {
        throw std::invalid_argument("spectral exponents must give a Hurst index in (1/2, 1)");
    }
    std::size_t const N = grid.bins;
    double const dw = grid.dw();

    std::vector<std::complex<double>> Z(N);
    double const amp = std::sqrt(0.5 * dw);
    for (auto& z : Z) {
        double const re = rng.normal();
        double const im = rng.normal();
        z = amp * std::complex<double>(re, im);
    }
    // scale[s][b] = sqrt(M_s(b) / dw)
    std::vector<std::vector<double>> scale(static_cast<std::size_t>(k), std::vector<double>(N));
    for (int s = 0; s < k; ++s) {
        for (std::size_t b = 0; b < N; ++b) {
            double const lo = static_cast<double>(b) * dw;
            scale[s][b] = std::sqrt(bin_mass(exponents[s], lo, lo + dw) / dw);
        }
    }

    // Frequencies are odd multiples h of dw/2 in [-M, M]; a block of r slots
    // sharing |u| lives on [-rM, rM], stored at index h + rM.
    auto const M = static_cast<std::ptrdiff_t>(2 * N - 1);
    auto block_distribution = [&](std::vector<int> const& slots) {
        auto const r = static_cast<std::ptrdiff_t>(slots.size());
        fft::cvec out(static_cast<std::size_t>(2 * r * M + 1));
        auto const patterns = std::size_t{1} << slots.size();
        for (std::size_t b = 0; b < N; ++b) {
            auto const h1 = static_cast<std::ptrdiff_t>(2 * b + 1);
            for (std::size_t p = 0; p < patterns; ++p) {
                std::complex<double> value = 1.0;
                std::ptrdiff_t h = 0;
                for (std::size_t i = 0; i < slots.size(); ++i) {
                    bool const negative = (p >> i) & 1u;
                    auto const s = static_cast<std::size_t>(slots[i]);
                    value *= scale[s][b] * (negative ? std::conj(Z[b]) : Z[b]);
                    h += negative ? -h1 : h1;
                }
                out[static_cast<std::size_t>(h + r * M)] += value;
            }
        }
        return out;
    };

    fft::cvec total(static_cast<std::size_t>(2 * k * M + 1));
    if (grid.diagonal == SpectralGrid::Diagonal::exclude) {
        std::vector<std::vector<std::vector<int>>> partitions;
        std::vector<std::vector<int>> blocks;
        set_partitions_rec(k, 0, blocks, partitions);
        for (auto const& partition : partitions) {
            double weight = 1.0;
            fft::cvec dist{1.0};
            for (auto const& block : partition) {
                auto const size = block.size();
                weight *= size % 2 == 1 ? 1.0 : -1.0;
                for (std::size_t f = 2; f < size; ++f) {
                    weight *= static_cast<double>(f);
                }
                dist = fft::convolve(dist, block_distribution(block));
            }
            for (std::size_t i = 0; i < total.size(); ++i) {
                total[i] += weight * dist[i];
            }
        }
    } else {
        // Wick ordering: sum over pair sets A of (-1)^|A| prod_{(i,j) in A} E[Z_i Z_j]
        // times the unrestricted sum over the unpaired slots.
        for (auto const& A : enumerate_pair_sets(k)) {
            double weight = A.size() % 2 == 0 ? 1.0 : -1.0;
            for (auto const& [i, j] : A.pairs) {
                double pairing = 0.0;
                for (std::size_t b = 0; b < N; ++b) {
                    pairing += scale[i][b] * scale[j][b];
                }
                weight *= 2.0 * dw * pairing;
            }
            fft::cvec dist{1.0};
            std::ptrdiff_t free_slots = 0;
            for (int slot = 0; slot < k; ++slot) {
                if (!A.covers(slot)) {
                    dist = fft::convolve(dist, block_distribution({slot}));
                    ++free_slots;
                }
            }
            auto const shift = static_cast<std::size_t>((k - free_slots) * M);
            for (std::size_t i = 0; i < dist.size(); ++i) {
                total[shift + i] += weight * dist[i];
            }
        }
    }

    // Pairs with |u_1|, |u_2| > omega and u_1 + u_2 near 0 are cut off; their
    // covariance is 2 pi G min(s, t), G = 4 omega^(1 - a_1 - a_2) / (a_1 + a_2 - 1).
    std::vector<double> brownian(t_grid.size(), 0.0);
    if (k == 2 && grid.compensate_tail) {
        double const rate = 8.0 * std::numbers::pi * std::pow(grid.omega, 1.0 - exponent_sum)
                            / (exponent_sum - 1.0);
        std::vector<std::size_t> order(t_grid.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return t_grid[x] < t_grid[y]; });
        double level = 0.0;
        double last = 0.0;
        for (std::size_t i : order) {
            double const dt = std::max(0.0, t_grid[i]) - last;
            level += std::sqrt(rate * dt) * rng.normal();
            last = std::max(0.0, t_grid[i]);
            brownian[i] = level;
        }
    }

    SpectralSample out;
    out.values.reserve(t_grid.size());
    out.imaginary.reserve(t_grid.size());
    auto const offset = static_cast<std::ptrdiff_t>(k) * M;
    for (double t : t_grid) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < total.size(); ++i) {
            auto const h = static_cast<std::ptrdiff_t>(i) - offset;
            std::complex<double> kernel;
            if (h == 0) {
                kernel = t;
            } else {
                double const u = 0.5 * dw * static_cast<double>(h);
                kernel = std::complex<double>(std::sin(u * t) / u, (1.0 - std::cos(u * t)) / u);
            }
            acc += kernel * total[i];
        }
        out.values.push_back(acc.real() + brownian[out.values.size()]);
        out.imaginary.push_back(acc.imag());
    }
    return out;
}

}  // namespace hpl
