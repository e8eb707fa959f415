#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "regcore/rng.hpp"

using regcore::Philox;

TEST_CASE("philox4x32-10 known-answer vectors")
{
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("generator output is a pure function of seed and stream")
{
    Philox a(1234, 5), b(1234, 5), c(1234, 6), d(1235, 5);
    std::vector<std::uint32_t> va, vb, vc, vd;
    for (int i = 0; i < 64; ++i) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        vd.push_back(d());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
}

TEST_CASE("uniform draws stay in range and degenerate ranges collapse")
{
    Philox rng(7);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(rng.uniform(10.0, 10.0) == 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-3.0, 2.0);
        CHECK(v >= -3.0);
        CHECK(v <= 2.0);
    }
}

TEST_CASE("normal draws have unit variance")
{
    Philox rng(8);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("lambda is log-uniform on [1e-6, 10]")
{
    Philox rng(9, 3);
    const int n = 100000;
    const double a = std::log(1e-6);
    const double b = std::log(10.0);
    std::vector<double> u;
    u.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double lambda = regcore::sample_lambda(rng);
        CHECK(lambda >= 1e-6);
        CHECK(lambda <= 10.0);
        u.push_back((std::log(lambda) - a) / (b - a));
    }
    std::sort(u.begin(), u.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        ks = std::max({ks, std::abs((i + 1.0) / n - u[i]), std::abs(static_cast<double>(i) / n - u[i])});
    }
    CHECK(ks < 0.01);

    Philox fixed(1);
    CHECK(regcore::sample_lambda(fixed, 10.0, 10.0) == 10.0);
}
