#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cfpipe/errors.hpp"
#include "cfpipe/time_series.hpp"

namespace cfpipe {

// Daubechies wavelet with 6 vanishing moments (12-tap filters), published
// orthonormal scaling coefficients.
namespace db6 {

inline constexpr std::size_t kTaps = 12;

inline constexpr std::array<double, kTaps> dec_lo = {
    -0.00107730108499558,   0.004777257511010651,  0.0005538422009938016,
    -0.031582039318031156,  0.02752286553001629,   0.09750160558707936,
    -0.12976686756709563,   -0.22626469396516913,  0.3152503517092432,
    0.7511339080215775,     0.4946238903983854,    0.11154074335008017};

inline constexpr std::array<double, kTaps> make_dec_hi() {
    std::array<double, kTaps> h{};
    // Quadrature mirror: hi[k] = (-1)^k · lo[kTaps-1-k]
    for (std::size_t k = 0; k < kTaps; ++k)
        h[k] = ((k % 2) ? -1.0 : 1.0) * dec_lo[kTaps - 1 - k];
    return h;
}

inline constexpr std::array<double, kTaps> reverse(const std::array<double, kTaps>& f) {
    std::array<double, kTaps> r{};
    for (std::size_t k = 0; k < kTaps; ++k) r[k] = f[kTaps - 1 - k];
    return r;
}

inline constexpr std::array<double, kTaps> dec_hi = make_dec_hi();
inline constexpr std::array<double, kTaps> rec_lo = reverse(dec_lo);
inline constexpr std::array<double, kTaps> rec_hi = reverse(dec_hi);

}  // namespace db6

struct WaveletSpec {
    int max_levels = 4;
    double noise_sigma = 0.0;  // σ_a, estimated per pair
};

namespace detail {

// Half-point symmetric extension by db6::kTaps-1 samples on each side:
// ... x2 x1 | x1 x2 ... xn | xn xn-1 ...
inline std::vector<double> sym_extend(std::span<const double> x) {
    const std::size_t m = db6::kTaps - 1;
    std::vector<double> ext;
    ext.reserve(x.size() + 2 * m);
    for (std::size_t i = 0; i < m; ++i) ext.push_back(x[m - 1 - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < m; ++i) ext.push_back(x[x.size() - 1 - i]);
    return ext;
}

// out[k] = Σ_m f[m] · ext[k + kTaps-1 - m]  ("valid" convolution)
inline std::vector<double> conv_valid(std::span<const double> ext,
                                      const std::array<double, db6::kTaps>& f) {
    const std::size_t L = db6::kTaps;
    std::vector<double> out(ext.size() - L + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double acc = 0.0;
        for (std::size_t m = 0; m < L; ++m) acc += f[m] * ext[k + L - 1 - m];
        out[k] = acc;
    }
    return out;
}

}  // namespace detail

// Single-level DWT with symmetric boundary extension. Returns approximation
// and detail bands of length floor((n + kTaps - 1)/2) each; together with
// idwt_db6 this round-trips any signal exactly (up to float round-off).
inline std::pair<std::vector<double>, std::vector<double>> dwt_db6(std::span<const double> x) {
    if (x.size() < 2) throw InvalidInputError("dwt_db6: signal too short");
    auto ext = detail::sym_extend(x);
    auto lo = detail::conv_valid(ext, db6::dec_lo);
    auto hi = detail::conv_valid(ext, db6::dec_hi);
    std::vector<double> ca, cd;
    for (std::size_t k = 1; k < lo.size(); k += 2) {
        ca.push_back(lo[k]);
        cd.push_back(hi[k]);
    }
    return {std::move(ca), std::move(cd)};
}

// Inverse of dwt_db6; n is the original signal length.
inline std::vector<double> idwt_db6(std::span<const double> ca, std::span<const double> cd,
                                    std::size_t n) {
    if (ca.size() != cd.size() || ca.empty())
        throw InvalidInputError("idwt_db6: band size mismatch");
    const std::size_t L = db6::kTaps;
    const std::size_t m = ca.size();
    if (n + L - 1 > 2 * m + L - 1)
        throw InvalidInputError("idwt_db6: bands too short for requested length");
    // Upsample (coefficient k sits at index 2k+1), filter, overlap-add.
    std::vector<double> rec(2 * m + L - 1, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t base = 2 * k + 1;
        for (std::size_t j = 0; j < L; ++j) {
            rec[base + j] += ca[k] * db6::rec_lo[j] + cd[k] * db6::rec_hi[j];
        }
    }
    return {rec.begin() + (L - 1), rec.begin() + (L - 1) + static_cast<std::ptrdiff_t>(n)};
}

// Decomposition depth used for denoising a signal of length n.
inline int wavelet_levels(std::size_t n, int max_levels) {
    int lv = static_cast<int>(std::floor(std::log2(static_cast<double>(n) / 11.0)));
    return std::max(1, std::min(max_levels, lv));
}

// Multilevel db6 denoising: soft-threshold every detail band at the
// universal threshold T = σ·sqrt(2·ln n), then reconstruct.
inline std::vector<double> wavelet_denoise(std::span<const double> x, double sigma,
                                           int max_levels = 4) {
    const std::size_t n = x.size();
    if (n < 2 * db6::kTaps)
        throw InvalidInputError("wavelet_denoise: need at least 24 samples");
    if (sigma < 0.0) throw InvalidInputError("wavelet_denoise: negative noise sigma");
    std::vector<double> out(x.begin(), x.end());
    if (sigma == 0.0) return out;

    const int levels = wavelet_levels(n, max_levels);
    std::vector<std::vector<double>> details;
    std::vector<std::size_t> lengths;
    std::vector<double> approx = std::move(out);
    for (int l = 0; l < levels; ++l) {
        lengths.push_back(approx.size());
        auto [ca, cd] = dwt_db6(approx);
        details.push_back(std::move(cd));
        approx = std::move(ca);
    }
    const double thr = sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
    for (auto& band : details)
        for (double& c : band) {
            double mag = std::abs(c) - thr;
            c = (mag > 0.0) ? (c > 0.0 ? mag : -mag) : 0.0;
        }
    for (int l = levels - 1; l >= 0; --l)
        approx = idwt_db6(approx, details[static_cast<std::size_t>(l)],
                          lengths[static_cast<std::size_t>(l)]);
    return approx;
}

// TimeSeries front-end; requires a uniform grid.
inline TimeSeries wavelet_denoise(const TimeSeries& s, const WaveletSpec& spec) {
    detail::require_increasing(s, "wavelet_denoise");
    if (s.size() >= 3) {
        const double dt = (s.t.back() - s.t.front()) / static_cast<double>(s.size() - 1);
        for (std::size_t i = 1; i < s.size(); ++i)
            if (std::abs((s.t[i] - s.t[i - 1]) - dt) > 1e-6 * std::max(1.0, dt))
                throw InvalidInputError("wavelet_denoise: grid not uniform");
    }
    return {s.t, wavelet_denoise(std::span<const double>(s.y), spec.noise_sigma, spec.max_levels)};
}

}  // namespace cfpipe
