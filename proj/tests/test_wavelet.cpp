#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cfpipe/wavelet.hpp"
#include "oracles.hpp"

using cfpipe::dwt_db6;
using cfpipe::idwt_db6;
using cfpipe::wavelet_denoise;

namespace {

std::vector<double> chirp(std::size_t n, double amp = 2.0) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * 0.1;
        y[i] = amp * std::sin(2.0 * std::numbers::pi * (0.02 + 0.0015 * t) * t);
    }
    return y;
}

}  // namespace

TEST_CASE("db6 filter bank identities", "[wavelet]") {
    double sum = 0.0, sumsq = 0.0;
    for (double h : cfpipe::db6::dec_lo) {
        sum += h;
        sumsq += h * h;
    }
    CHECK(sum == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
    CHECK(sumsq == Catch::Approx(1.0).margin(1e-11));
    for (int p = 0; p < 6; ++p) {  // six vanishing moments
        double m = 0.0;
        for (std::size_t k = 0; k < cfpipe::db6::kTaps; ++k)
            m += std::pow(static_cast<double>(k), p) * cfpipe::db6::dec_hi[k];
        CHECK(std::abs(m) < 1e-7);
    }
}

TEST_CASE("single and multilevel round trips are exact", "[wavelet]") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> val(0.0, 3.0);
    for (std::size_t n : {24u, 25u, 37u, 64u, 101u, 128u, 255u, 512u, 1024u, 2048u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = val(rng);
        auto [ca, cd] = dwt_db6(x);
        const auto back = idwt_db6(ca, cd, n);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(back[i] - x[i]));
        CAPTURE(n);
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("zero sigma returns the input unchanged", "[wavelet]") {
    const auto x = chirp(200);
    const auto y = wavelet_denoise(x, 0.0);
    CHECK(y == x);
}

TEST_CASE("constant series pass through unchanged", "[wavelet]") {
    std::vector<double> x(100, 3.7);
    const auto y = wavelet_denoise(x, 0.5);
    for (double v : y) CHECK(v == Catch::Approx(3.7).margin(1e-9));
}

TEST_CASE("denoising halves the error on a noisy chirp", "[wavelet]") {
    const std::size_t n = 512;
    const auto clean = chirp(n);
    std::vector<double> ratios;
    for (int seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> noise(0.0, 0.3);
        std::vector<double> noisy(n);
        for (std::size_t i = 0; i < n; ++i) noisy[i] = clean[i] + noise(rng);
        const auto den = wavelet_denoise(noisy, 0.3);
        ratios.push_back(oracles::brute_rmse(den, clean) / oracles::brute_rmse(noisy, clean));
    }
    CHECK(oracles::median(ratios) <= 0.5);
}

TEST_CASE("input validation", "[wavelet]") {
    std::vector<double> tiny(20, 1.0);
    CHECK_THROWS_AS(wavelet_denoise(tiny, 0.1), cfpipe::InvalidInputError);
    std::vector<double> x(64, 1.0);
    CHECK_THROWS_AS(wavelet_denoise(x, -0.5), cfpipe::InvalidInputError);

    cfpipe::TimeSeries nonuniform;
    for (double t : {0.0, 0.1, 0.25, 0.3, 0.4}) nonuniform.t.push_back(t);
    nonuniform.y.assign(5, 1.0);
    CHECK_THROWS_AS(wavelet_denoise(nonuniform, {4, 0.1}), cfpipe::InvalidInputError);
}

TEST_CASE("decomposition depth follows the length rule", "[wavelet]") {
    CHECK(cfpipe::wavelet_levels(24, 4) == 1);
    CHECK(cfpipe::wavelet_levels(100, 4) == 3);
    CHECK(cfpipe::wavelet_levels(512, 4) == 4);
    CHECK(cfpipe::wavelet_levels(512, 2) == 2);
}
