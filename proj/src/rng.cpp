#include "regcore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "regcore/errors.hpp"

namespace regcore {

namespace {

constexpr std::uint32_t mul0 = 0xD2511F53u;
constexpr std::uint32_t mul1 = 0xCD9E8D57u;
constexpr std::uint32_t weyl0 = 0x9E3779B9u;
constexpr std::uint32_t weyl1 = 0xBB67AE85u;

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(mul0, ctr[0], hi0, lo0);
        mulhilo(mul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += weyl0;
        key[1] += weyl1;
    }
    return ctr;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    , counter_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}
{
}

void Philox::refill()
{
    buffer_ = block(counter_, key_);
    // 64-bit position counter in the low two words.
    if (++counter_[0] == 0) {
        ++counter_[1];
    }
    used_ = 0;
}

Philox::result_type Philox::operator()()
{
    if (used_ == 4) {
        refill();
    }
    return buffer_[used_++];
}

double Philox::uniform()
{
    const std::uint64_t hi = (*this)() >> 5; // 27 bits
    const std::uint64_t lo = (*this)() >> 6; // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

double Philox::uniform(double lo, double hi)
{
    if (lo == hi) {
        return lo;
    }
    return lo + (hi - lo) * uniform();
}

double Philox::normal()
{
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    // 1 - u lies in (0, 1], keeping the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(a);
    has_spare_normal_ = true;
    return r * std::cos(a);
}

double sample_lambda(Philox& rng, double lo, double hi)
{
    if (!(lo > 0.0) || !(hi >= lo)) {
        throw InvalidArgument("lambda range must satisfy 0 < lo <= hi");
    }
    if (lo == hi) {
        return lo;
    }
    const double v = std::exp(rng.uniform(std::log(lo), std::log(hi)));
    return std::clamp(v, lo, hi);
}

} // namespace regcore
