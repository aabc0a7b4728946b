#pragma once

/// Cyclic-prefixed pilot frames and the batching plan for multiplexed
/// transmission of circularly shifted copies of a single PN sequence.

#include "pnce/error.hpp"
#include "pnce/pn_core.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace pnce {

struct PilotConfig
{
    std::size_t pn_length = 0;  // M
    std::size_t cp_length = 0;  // C
    std::size_t num_tx = 1;     // N_t
    std::size_t batch_size = 1; // N_batch
    std::size_t cir_length = 0; // L
    double sample_rate = 1.0;   // F_s, samples per second

    std::size_t pilot_length() const noexcept { return cp_length + pn_length; }
    std::size_t num_batches() const noexcept { return (num_tx + batch_size - 1) / batch_size; }
};

/// floor(M / C): how many shifted copies fit without their lag windows overlapping.
inline std::size_t max_batch(std::size_t pn_length, std::size_t cp_length)
{
    if (cp_length < 1 || cp_length > pn_length) {
        fail(ErrorCode::InvalidConfig, "cyclic prefix length " + std::to_string(cp_length) + " not in [1, "
                                           + std::to_string(pn_length) + "]");
    }
    return pn_length / cp_length;
}

inline void validate(const PilotConfig& cfg)
{
    if (cfg.pn_length < 1) {
        fail(ErrorCode::InvalidConfig, "PN length must be positive");
    }
    if (cfg.cir_length < 1 || cfg.cir_length > cfg.cp_length || cfg.cp_length > cfg.pn_length) {
        fail(ErrorCode::InvalidConfig, "need 1 <= L <= C <= M, got L=" + std::to_string(cfg.cir_length) + " C="
                                           + std::to_string(cfg.cp_length) + " M=" + std::to_string(cfg.pn_length));
    }
    if (cfg.num_tx < 1) {
        fail(ErrorCode::InvalidConfig, "need at least one transmitter");
    }
    const std::size_t bound = max_batch(cfg.pn_length, cfg.cp_length);
    if (cfg.batch_size < 1 || cfg.batch_size > bound) {
        fail(ErrorCode::InvalidConfig, "N_batch=" + std::to_string(cfg.batch_size) + " not in [1, floor(M/C)="
                                           + std::to_string(bound) + "]");
    }
    if (!(cfg.sample_rate > 0.0) || !std::isfinite(cfg.sample_rate)) {
        fail(ErrorCode::InvalidConfig, "sample rate must be positive and finite");
    }
}

/// floor(M / N_batch) * (t mod N_batch).
inline std::size_t shift_for_transmitter(std::size_t transmitter, const PilotConfig& cfg)
{
    validate(cfg);
    if (transmitter >= cfg.num_tx) {
        fail(ErrorCode::InvalidConfig, "transmitter index " + std::to_string(transmitter) + " out of range");
    }
    return (cfg.pn_length / cfg.batch_size) * (transmitter % cfg.batch_size);
}

struct PilotFrame
{
    std::vector<double> samples; // C prefix samples followed by the M body samples
    std::size_t transmitter = 0;
    std::size_t shift = 0;
    std::size_t cp_length = 0;

    std::span<const double> body() const { return std::span<const double>(samples).subspan(cp_length); }
};

inline PilotFrame build_pilot(const PnSequence& seq, std::size_t shift, std::size_t cp_length,
                              std::size_t transmitter = 0)
{
    const std::size_t m = seq.size();
    if (cp_length < 1 || cp_length > m) {
        fail(ErrorCode::InvalidConfig, "cyclic prefix length " + std::to_string(cp_length) + " not in [1, M]");
    }
    const PnSequence body = circular_shift(seq, shift);
    PilotFrame frame;
    frame.transmitter = transmitter;
    frame.shift = shift;
    frame.cp_length = cp_length;
    frame.samples.reserve(cp_length + m);
    for (std::size_t i = m - cp_length; i < m; ++i) {
        frame.samples.push_back(body[i]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        frame.samples.push_back(body[i]);
    }
    return frame;
}

struct BatchAssignment
{
    std::size_t transmitter = 0;
    std::size_t shift = 0;

    friend bool operator==(const BatchAssignment&, const BatchAssignment&) = default;
};

struct BatchEntry
{
    std::size_t index = 0;
    std::vector<BatchAssignment> members;
};

struct BatchPlan
{
    std::vector<BatchEntry> batches;
};

/// Shortest distance between two shifts on the circle of M positions.
inline std::size_t cyclic_separation(std::size_t a, std::size_t b, std::size_t m) noexcept
{
    const std::size_t d = a > b ? a - b : b - a;
    return std::min(d, m - d);
}

/// Throws PlanMismatch unless every pair of shifts in the entry is at least
/// `cir_length` apart around the circle.
inline void check_separation(const BatchEntry& entry, std::size_t pn_length, std::size_t cir_length)
{
    const auto& ms = entry.members;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        if (ms[i].shift >= pn_length) {
            fail(ErrorCode::PlanMismatch, "shift " + std::to_string(ms[i].shift) + " outside [0, M)");
        }
        for (std::size_t j = i + 1; j < ms.size(); ++j) {
            if (cyclic_separation(ms[i].shift, ms[j].shift, pn_length) < cir_length) {
                fail(ErrorCode::PlanMismatch, "transmitters " + std::to_string(ms[i].transmitter) + " and "
                                                  + std::to_string(ms[j].transmitter)
                                                  + " have shifts closer than L=" + std::to_string(cir_length));
            }
        }
    }
}

/// Transmitters are grouped in index order: batch b holds b*N_batch ..
/// b*N_batch + N_batch - 1, so members of a batch get distinct shifts. The
/// last batch is short when N_batch does not divide N_t.
inline BatchPlan build_batch_plan(const PilotConfig& cfg)
{
    validate(cfg);
    BatchPlan plan;
    plan.batches.resize(cfg.num_batches());
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        plan.batches[b].index = b;
    }
    for (std::size_t t = 0; t < cfg.num_tx; ++t) {
        plan.batches[t / cfg.batch_size].members.push_back({t, shift_for_transmitter(t, cfg)});
    }
    for (const auto& entry : plan.batches) {
        check_separation(entry, cfg.pn_length, cfg.cir_length);
    }
    return plan;
}

/// Exact non-negative fraction; used to check overhead arithmetic without rounding.
struct Rational
{
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    static Rational make(std::uint64_t n, std::uint64_t d)
    {
        if (d == 0) {
            fail(ErrorCode::InvalidConfig, "zero denominator");
        }
        const std::uint64_t g = std::gcd(n, d);
        return {n / g, d / g};
    }

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator==(const Rational&, const Rational&) = default;
};

/// (P * N_t) / (F_s * N_batch) seconds. With N_batch = 1 this is the
/// sequential pilot overhead.
inline double propagation_time(const PilotConfig& cfg)
{
    validate(cfg);
    return static_cast<double>(cfg.pilot_length() * cfg.num_tx)
           / (cfg.sample_rate * static_cast<double>(cfg.batch_size));
}

/// Same quantity as an exact fraction; requires an integral sample rate.
inline Rational propagation_time_exact(const PilotConfig& cfg)
{
    validate(cfg);
    if (cfg.sample_rate != std::floor(cfg.sample_rate) || cfg.sample_rate > 1e15) {
        fail(ErrorCode::InvalidConfig, "exact propagation time needs an integral sample rate");
    }
    const auto fs = static_cast<std::uint64_t>(cfg.sample_rate);
    return Rational::make(cfg.pilot_length() * cfg.num_tx, fs * cfg.batch_size);
}

} // namespace pnce
