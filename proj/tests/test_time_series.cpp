#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cfpipe/time_series.hpp"
#include "oracles.hpp"

using cfpipe::TimeSeries;
using cfpipe::finite_diff;
using cfpipe::resample_uniform;
using cfpipe::rmse;

namespace {

TimeSeries sampled(double t0, double t1, double dt, double (*fn)(double)) {
    TimeSeries s;
    for (std::size_t k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        if (t > t1 + 1e-12) break;
        s.t.push_back(t);
        s.y.push_back(fn(t));
    }
    return s;
}

}  // namespace

TEST_CASE("finite_diff is exact on linear data", "[timeseries]") {
    TimeSeries s{{0, 1, 2, 3}, {0, 1, 2, 3}};
    const auto d = finite_diff(s);
    REQUIRE(d.size() == 4);
    for (double v : d.y) CHECK(v == Catch::Approx(1.0));
}

TEST_CASE("finite_diff central stencil is exact on quadratics", "[timeseries]") {
    const auto s = sampled(0.0, 1.0, 0.1, [](double t) { return t * t; });
    const auto d = finite_diff(s);
    for (std::size_t i = 1; i + 1 < d.size(); ++i)
        CHECK(d.y[i] == Catch::Approx(2.0 * d.t[i]).margin(1e-12));
}

TEST_CASE("finite_diff approximates cos for sin input", "[timeseries]") {
    const auto s = sampled(0.0, 1.0, 0.01, [](double t) { return std::sin(t); });
    const auto d = finite_diff(s);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < d.size(); ++i)
        worst = std::max(worst, std::abs(d.y[i] - std::cos(d.t[i])));
    CHECK(worst < 1e-3);
}

TEST_CASE("finite_diff input validation", "[timeseries]") {
    CHECK_THROWS_AS(finite_diff({{0.0}, {1.0}}), cfpipe::InvalidInputError);
    CHECK_THROWS_AS(finite_diff({{0.0, 0.0, 1.0}, {1.0, 2.0, 3.0}}), cfpipe::InvalidInputError);
    CHECK_THROWS_AS(finite_diff({{0.0, 1.0}, {1.0}}), cfpipe::InvalidInputError);
}

TEST_CASE("finite_diff of a constant is identically zero", "[timeseries][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dt(0.01, 0.7);
    TimeSeries s;
    double t = 0.0;
    for (int i = 0; i < 100; ++i) {
        s.t.push_back(t);
        s.y.push_back(3.25);
        t += dt(rng);
    }
    for (double v : finite_diff(s).y) CHECK(v == 0.0);
}

TEST_CASE("finite_diff is linear", "[timeseries][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> step(0.02, 0.4);
    std::normal_distribution<double> val(0.0, 5.0);
    TimeSeries f, g, combo;
    const double alpha = 2.5, beta = -1.25;
    double t = 0.0;
    for (int i = 0; i < 200; ++i) {
        f.t.push_back(t);
        g.t.push_back(t);
        combo.t.push_back(t);
        const double fy = val(rng), gy = val(rng);
        f.y.push_back(fy);
        g.y.push_back(gy);
        combo.y.push_back(alpha * fy + beta * gy);
        t += step(rng);
    }
    const auto df = finite_diff(f), dg = finite_diff(g), dc = finite_diff(combo);
    for (std::size_t i = 0; i < dc.size(); ++i) {
        const double want = alpha * df.y[i] + beta * dg.y[i];
        CHECK(dc.y[i] == Catch::Approx(want).epsilon(1e-10).margin(1e-10));
    }
}

TEST_CASE("resample_uniform basic interpolation", "[timeseries]") {
    const auto r = resample_uniform({{0.0, 1.0}, {0.0, 2.0}}, 0.5);
    REQUIRE(r.size() == 3);
    CHECK(r.t[1] == Catch::Approx(0.5));
    CHECK(r.y[0] == Catch::Approx(0.0));
    CHECK(r.y[1] == Catch::Approx(1.0));
    CHECK(r.y[2] == Catch::Approx(2.0));
}

TEST_CASE("resample_uniform is the identity on matching grids", "[timeseries]") {
    const auto s = sampled(2.0, 5.0, 0.1, [](double t) { return t * 3.0 - 1.0; });
    const auto r = resample_uniform(s, 0.1);
    REQUIRE(r.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::abs(r.t[i] - s.t[i]) <= 1e-12);
        CHECK(std::abs(r.y[i] - s.y[i]) <= 1e-12);
    }
}

TEST_CASE("resample_uniform meets the linear interpolation error bound", "[timeseries]") {
    // error ≤ dt²/8 · max|f''| for f = t³ on [0,2]: bound = 0.01/8 · 12
    TimeSeries s;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> step(0.05, 0.2);
    double t = 0.0;
    while (t < 2.0) {
        s.t.push_back(t);
        s.y.push_back(t * t * t);
        t += step(rng);
    }
    s.t.push_back(2.0);
    s.y.push_back(8.0);
    const auto r = resample_uniform(s, 0.1);
    // compare against the source polyline's own bound: interpolation error of
    // the polyline vs t³ is bounded by (h²/8)·max|f''| with h = max source gap
    double h = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) h = std::max(h, s.t[i] - s.t[i - 1]);
    const double bound = h * h / 8.0 * 12.0 + 1e-12;
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(std::abs(r.y[i] - r.t[i] * r.t[i] * r.t[i]) <= bound);
}

TEST_CASE("resample_uniform rejects bad dt and never extrapolates", "[timeseries]") {
    CHECK_THROWS_AS(resample_uniform({{0.0, 1.0}, {0.0, 1.0}}, 0.0), cfpipe::InvalidInputError);
    CHECK_THROWS_AS(resample_uniform({{0.0, 1.0}, {0.0, 1.0}}, -0.1), cfpipe::InvalidInputError);
    const auto r = resample_uniform({{0.0, 0.95}, {0.0, 9.5}}, 0.3);
    CHECK(r.t.back() <= 0.95 + 1e-12);
}

TEST_CASE("rmse matches hand values and brute-force oracle", "[timeseries]") {
    CHECK(rmse({{0, 1, 2}, {1, 2, 3}}, {{0, 1, 2}, {1, 2, 3}}) == 0.0);
    CHECK(rmse({{0, 1}, {0, 0}}, {{0, 1}, {3, 4}}) == Catch::Approx(std::sqrt(12.5)));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> val(0.0, 2.0);
    TimeSeries a, b;
    for (int i = 0; i < 1000; ++i) {
        a.t.push_back(i);
        b.t.push_back(i);
        a.y.push_back(val(rng));
        b.y.push_back(val(rng));
    }
    CHECK(rmse(a, b) == Catch::Approx(oracles::brute_rmse(a.y, b.y)).margin(1e-12));
}

TEST_CASE("rmse validates grids and is symmetric with a triangle bound", "[timeseries][property]") {
    CHECK_THROWS_AS(rmse({{0, 1}, {0, 0}}, {{0, 2}, {0, 0}}), cfpipe::InvalidInputError);
    CHECK_THROWS_AS(rmse({{0, 1}, {0, 0}}, {{0, 1, 2}, {0, 0, 0}}), cfpipe::InvalidInputError);

    std::mt19937_64 rng(13);
    std::normal_distribution<double> val(0.0, 1.0);
    TimeSeries a, b, c;
    for (int i = 0; i < 257; ++i) {
        for (TimeSeries* s : {&a, &b, &c}) {
            s->t.push_back(i);
            s->y.push_back(val(rng));
        }
    }
    CHECK(rmse(a, b) == Catch::Approx(rmse(b, a)));
    CHECK(rmse(a, c) <= rmse(a, b) + rmse(b, c) + 1e-12);
}
