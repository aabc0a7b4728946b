#pragma once

// IEEE 754 binary16 rounding, used to emulate half-precision operands and
// accumulators on hosts without native half arithmetic.

#include <cmath>
#include <cstdint>
#include <limits>

namespace pnce {

inline constexpr double kBinary16Max = 65504.0;
inline constexpr int kBinary16MinExp = -14; // smallest normal exponent
inline constexpr int kBinary16Mantissa = 10;

/// Nearest binary16 value under round-to-nearest-even, widened back to
/// double. Overflow gives a signed infinity; NaN propagates.
inline double quantize_binary16(double x) noexcept
{
    if (!std::isfinite(x) || x == 0.0) {
        return x;
    }
    const double mag = std::fabs(x);
    // Halfway between 65504 and 65536; the tie rounds to the even (overflowing) side.
    if (mag >= 65520.0) {
        return std::copysign(std::numeric_limits<double>::infinity(), x);
    }
    int exp = std::ilogb(mag);
    if (exp < kBinary16MinExp) {
        exp = kBinary16MinExp; // subnormal range shares the minimum quantum
    }
    const double quantum = std::ldexp(1.0, exp - kBinary16Mantissa);
    // Scaling by a power of two is exact; nearbyint rounds half to even in the
    // default floating-point environment.
    return std::nearbyint(x / quantum) * quantum;
}

inline double decode_binary16(std::uint16_t bits) noexcept
{
    const bool negative = bits & 0x8000u;
    const int exp_field = (bits >> 10) & 0x1f;
    const int mant = bits & 0x3ff;
    double v;
    if (exp_field == 0x1f) {
        v = mant ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    } else if (exp_field == 0) {
        v = std::ldexp(static_cast<double>(mant), kBinary16MinExp - kBinary16Mantissa);
    } else {
        v = std::ldexp(static_cast<double>(mant | 0x400), exp_field - 15 - kBinary16Mantissa);
    }
    return negative ? -v : v;
}

inline std::uint16_t encode_binary16(double x) noexcept
{
    const double q = quantize_binary16(x);
    const std::uint16_t sign = std::signbit(q) ? 0x8000u : 0u;
    if (std::isnan(q)) {
        return 0x7e00u;
    }
    if (std::isinf(q)) {
        return sign | 0x7c00u;
    }
    const double mag = std::fabs(q);
    if (mag == 0.0) {
        return sign;
    }
    const int exp = std::ilogb(mag);
    if (exp < kBinary16MinExp) {
        return sign | static_cast<std::uint16_t>(std::ldexp(mag, kBinary16Mantissa - kBinary16MinExp));
    }
    const auto mant = static_cast<std::uint16_t>(std::ldexp(mag, kBinary16Mantissa - exp)) & 0x3ffu;
    return sign | static_cast<std::uint16_t>((exp + 15) << 10) | mant;
}

} // namespace pnce
