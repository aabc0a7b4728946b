#pragma once

/// Maximal-length PN sequences from Fibonacci LFSRs, plus the circular
/// sequence utilities the pilot and estimator layers are built on.

#include "pnce/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pnce {

/// Feedback polynomial and seed of a Fibonacci LFSR. A tap at position p
/// means the term x^p of the feedback polynomial; position `degree` must be
/// present for the register to be invertible.
struct LfsrSpec
{
    int degree = 0;
    std::vector<int> taps;
    std::uint32_t initial_state = 1;

    friend bool operator==(const LfsrSpec&, const LfsrSpec&) = default;
};

inline constexpr int kMaxLfsrDegree = 24;

inline void validate(const LfsrSpec& spec)
{
    if (spec.degree < 2 || spec.degree > kMaxLfsrDegree) {
        fail(ErrorCode::InvalidSpec, "LFSR degree must be in [2, " + std::to_string(kMaxLfsrDegree) + "], got "
                                         + std::to_string(spec.degree));
    }
    if (spec.initial_state == 0) {
        fail(ErrorCode::ZeroState, "all-zero LFSR state never leaves itself");
    }
    if (spec.initial_state >> spec.degree) {
        fail(ErrorCode::InvalidSpec, "initial state wider than the register");
    }
    bool has_top = false;
    for (int t : spec.taps) {
        if (t < 1 || t > spec.degree) {
            fail(ErrorCode::InvalidSpec, "tap " + std::to_string(t) + " outside [1, degree]");
        }
        has_top = has_top || t == spec.degree;
    }
    if (!has_top) {
        fail(ErrorCode::InvalidSpec, "tap set must contain the degree");
    }
}

/// Known primitive trinomials/pentanomials for degrees 2..16. Degrees 9, 10
/// and 11 give the 511/1023/2047-chip sequences used by the experiments.
inline LfsrSpec default_lfsr(int degree)
{
    static const std::vector<std::vector<int>> table = {
        {},
        {},
        {2, 1},
        {3, 2},
        {4, 3},
        {5, 3},
        {6, 5},
        {7, 6},
        {8, 6, 5, 4},
        {9, 5},
        {10, 7},
        {11, 9},
        {12, 11, 10, 4},
        {13, 12, 11, 8},
        {14, 13, 12, 2},
        {15, 14},
        {16, 15, 13, 4},
    };
    if (degree < 2 || degree >= static_cast<int>(table.size())) {
        fail(ErrorCode::InvalidSpec, "no built-in primitive polynomial for degree " + std::to_string(degree));
    }
    return LfsrSpec{degree, table[static_cast<std::size_t>(degree)], 1u};
}

/// Raw output bits of the register for `count` steps. No period check.
inline std::vector<std::uint8_t> lfsr_bits(const LfsrSpec& spec, std::size_t count)
{
    validate(spec);
    std::uint32_t mask = 0;
    for (int t : spec.taps) {
        mask |= 1u << (spec.degree - t);
    }
    std::uint32_t state = spec.initial_state;
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits) {
        b = static_cast<std::uint8_t>(state & 1u);
        const auto feedback = static_cast<std::uint32_t>(__builtin_parity(state & mask));
        state = (state >> 1) | (feedback << (spec.degree - 1));
    }
    return bits;
}

/// Number of steps until the register first returns to its initial state.
inline std::uint64_t lfsr_period(const LfsrSpec& spec)
{
    validate(spec);
    std::uint32_t mask = 0;
    for (int t : spec.taps) {
        mask |= 1u << (spec.degree - t);
    }
    // Tap `degree` is present, so the state map is a permutation and the orbit
    // of the initial state is a cycle of length at most 2^degree - 1.
    std::uint32_t state = spec.initial_state;
    std::uint64_t steps = 0;
    do {
        const auto feedback = static_cast<std::uint32_t>(__builtin_parity(state & mask));
        state = (state >> 1) | (feedback << (spec.degree - 1));
        ++steps;
    } while (state != spec.initial_state);
    return steps;
}

/// Bipolar chip sequence. Instances produced by generate_mseq are certified
/// maximal-length; from_chips admits arbitrary +/-1 sequences for testing.
class PnSequence
{
public:
    PnSequence() = default;

    static PnSequence from_chips(std::vector<double> chips, LfsrSpec origin = {})
    {
        if (chips.empty()) {
            fail(ErrorCode::InvalidSpec, "empty chip sequence");
        }
        for (double c : chips) {
            if (c != 1.0 && c != -1.0) {
                fail(ErrorCode::InvalidSpec, "chips must be +1 or -1");
            }
        }
        PnSequence s;
        s.chips_ = std::move(chips);
        s.origin_ = std::move(origin);
        return s;
    }

    std::size_t size() const noexcept { return chips_.size(); }
    double operator[](std::size_t i) const { return chips_[i]; }
    std::span<const double> chips() const noexcept { return chips_; }
    const LfsrSpec& origin() const noexcept { return origin_; }

    friend bool operator==(const PnSequence& a, const PnSequence& b) { return a.chips_ == b.chips_; }

private:
    std::vector<double> chips_;
    LfsrSpec origin_;
};

inline double chip_from_bit(std::uint8_t bit) noexcept { return bit ? -1.0 : 1.0; }

/// One full period of the register mapped 0 -> +1, 1 -> -1.
inline PnSequence generate_mseq(const LfsrSpec& spec)
{
    validate(spec);
    const std::uint64_t expected = (std::uint64_t{1} << spec.degree) - 1;
    const std::uint64_t period = lfsr_period(spec);
    if (period != expected) {
        fail(ErrorCode::NotMaximalLength, "period " + std::to_string(period) + " != " + std::to_string(expected)
                                              + " (feedback polynomial is not primitive)");
    }
    const auto bits = lfsr_bits(spec, expected);
    std::vector<double> chips(bits.size());
    std::transform(bits.begin(), bits.end(), chips.begin(), chip_from_bit);
    return PnSequence::from_chips(std::move(chips), spec);
}

inline PnSequence generate_mseq(int degree) { return generate_mseq(default_lfsr(degree)); }

/// Degree k such that 2^k - 1 == length, or 0 when length is not of that form.
inline int mseq_degree(std::size_t length) noexcept
{
    for (int k = 2; k <= kMaxLfsrDegree; ++k) {
        if ((std::size_t{1} << k) - 1 == length) {
            return k;
        }
    }
    return 0;
}

/// (1/M) sum_m s[m] s[(m + lag) mod M]. The sum is formed in integers so an
/// m-sequence gives exactly 1 and -1/M after the single division.
inline double circular_autocorrelation(const PnSequence& seq, std::size_t lag)
{
    const std::size_t m = seq.size();
    if (lag >= m) {
        fail(ErrorCode::LagOutOfRange, "lag " + std::to_string(lag) + " not in [0, " + std::to_string(m) + ")");
    }
    long long acc = 0;
    for (std::size_t i = 0; i < m; ++i) {
        acc += static_cast<long long>(seq[i]) * static_cast<long long>(seq[(i + lag) % m]);
    }
    return static_cast<double>(acc) / static_cast<double>(m);
}

/// output[i] = input[(i + shift) mod M], i.e. a circular advance.
inline PnSequence circular_shift(const PnSequence& seq, std::size_t shift)
{
    const std::size_t m = seq.size();
    if (shift >= m) {
        fail(ErrorCode::ShiftOutOfRange, "shift " + std::to_string(shift) + " not in [0, " + std::to_string(m) + ")");
    }
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = seq[(i + shift) % m];
    }
    return PnSequence::from_chips(std::move(out), seq.origin());
}

} // namespace pnce
