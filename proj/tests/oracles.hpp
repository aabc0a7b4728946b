#pragma once

// Test-only reference computations. Nothing here calls into the library's
// arithmetic paths; each routine is the most direct way to compute its value.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// Shift register held as a vector of bits, stepped by list manipulation.
// reg[0] is the bit that leaves the register next.
inline std::vector<int> lfsr_chips(int degree, const std::vector<int>& taps, std::uint32_t state, std::size_t n)
{
    std::vector<int> reg(degree);
    for (int i = 0; i < degree; ++i) {
        reg[i] = (state >> i) & 1;
    }
    std::vector<int> chips;
    for (std::size_t step = 0; step < n; ++step) {
        chips.push_back(reg[0] ? -1 : 1);
        int fb = 0;
        for (int t : taps) {
            fb ^= reg[degree - t];
        }
        reg.erase(reg.begin());
        reg.push_back(fb);
    }
    return chips;
}

// Full M x M circulant, row tau = s[(i - tau) mod M], times y, over M.
inline std::vector<cplx> circulant_correlate(std::span<const double> s, std::span<const cplx> y)
{
    const std::size_t m = s.size();
    std::vector<std::vector<double>> rows(m, std::vector<double>(m));
    for (std::size_t tau = 0; tau < m; ++tau) {
        for (std::size_t i = 0; i < m; ++i) {
            rows[tau][i] = s[(i + m - tau) % m];
        }
    }
    std::vector<cplx> out(m);
    for (std::size_t tau = 0; tau < m; ++tau) {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            acc += rows[tau][i] * y[i];
        }
        out[tau] = acc / static_cast<double>(m);
    }
    return out;
}

// y[n] = sum_k h[k] x[n - k], full length.
inline std::vector<cplx> linear_convolve(std::span<const double> x, std::span<const cplx> h)
{
    std::vector<cplx> y(x.size() + h.size() - 1);
    for (std::size_t n = 0; n < y.size(); ++n) {
        for (std::size_t k = 0; k < h.size(); ++k) {
            if (n >= k && n - k < x.size()) {
                y[n] += h[k] * x[n - k];
            }
        }
    }
    return y;
}

// Every finite binary16 value, ascending, built from the bit layout.
inline const std::vector<double>& all_finite_halves()
{
    static const std::vector<double> table = [] {
        std::vector<double> v;
        for (int e = 0; e < 31; ++e) {
            for (int mant = 0; mant < 1024; ++mant) {
                const double mag = e == 0 ? mant * std::pow(2.0, -24) : (1024 + mant) * std::pow(2.0, e - 25);
                v.push_back(mag);
                if (mag != 0.0) {
                    v.push_back(-mag);
                }
            }
        }
        std::sort(v.begin(), v.end());
        return v;
    }();
    return table;
}

// Nearest half by search; ties go to the value whose last mantissa bit is 0.
inline double nearest_half(double x)
{
    const auto& t = all_finite_halves();
    if (std::fabs(x) >= 65520.0) {
        return std::copysign(std::numeric_limits<double>::infinity(), x);
    }
    auto hi = std::lower_bound(t.begin(), t.end(), x);
    if (hi == t.end()) return t.back();
    if (*hi == x || hi == t.begin()) return *hi;
    auto lo = hi - 1;
    const double dl = x - *lo, dh = *hi - x;
    if (dl < dh) return *lo;
    if (dh < dl) return *hi;
    // tie: even mantissa means an even index among magnitudes of one binade;
    // scaling by the spacing gives an integer whose parity is the mantissa LSB.
    auto even = [](double v) {
        const double a = std::fabs(v);
        const int e = a < std::pow(2.0, -14) ? -14 : static_cast<int>(std::floor(std::log2(a)));
        const double q = std::pow(2.0, e - 10);
        return std::fmod(std::round(a / q), 2.0) == 0.0;
    };
    return even(*lo) ? *lo : *hi;
}

inline std::vector<cplx> random_complex(std::size_t n, std::uint64_t seed, double sigma = 1.0)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, sigma / std::sqrt(2.0));
    std::vector<cplx> v(n);
    for (auto& x : v) {
        x = {nd(gen), nd(gen)};
    }
    return v;
}

} // namespace oracle
