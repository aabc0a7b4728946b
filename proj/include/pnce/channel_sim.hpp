#pragma once

/// Sparse block-static multipath MIMO channels, pilot propagation through
/// them (including the superposition of a multiplexed batch) and AWGN.

#include "pnce/error.hpp"
#include "pnce/pilot_design.hpp"
#include "pnce/pn_core.hpp"
#include "pnce/random.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace pnce {

using cplx = std::complex<double>;

struct ChannelSpec
{
    std::size_t cir_length = 1;   // L
    std::size_t nonzero_taps = 1; // L_nz
    std::size_t num_tx = 1;
    std::size_t num_rx = 1;
    std::uint64_t seed = 0;
};

inline void validate(const ChannelSpec& spec)
{
    if (spec.cir_length < 1 || spec.num_tx < 1 || spec.num_rx < 1) {
        fail(ErrorCode::InvalidSpec, "channel dimensions must be at least 1");
    }
    if (spec.nonzero_taps < 1 || spec.nonzero_taps > spec.cir_length) {
        fail(ErrorCode::InvalidSpec, "need 1 <= L_nz <= L, got L_nz=" + std::to_string(spec.nonzero_taps)
                                         + " L=" + std::to_string(spec.cir_length));
    }
}

/// Per-tap power cap 1 / (N_t sqrt(L_nz)).
inline double max_tap_power(std::size_t num_tx, std::size_t nonzero_taps)
{
    return 1.0 / (static_cast<double>(num_tx) * std::sqrt(static_cast<double>(nonzero_taps)));
}

/// CIRs for every (receiver, transmitter) pair, stored receiver-major.
class ChannelRealization
{
public:
    ChannelRealization() = default;
    ChannelRealization(std::size_t num_rx, std::size_t num_tx, std::size_t cir_length)
        : num_rx_(num_rx), num_tx_(num_tx), cir_length_(cir_length), taps_(num_rx * num_tx * cir_length)
    {
    }

    std::size_t num_rx() const noexcept { return num_rx_; }
    std::size_t num_tx() const noexcept { return num_tx_; }
    std::size_t cir_length() const noexcept { return cir_length_; }

    std::span<cplx> cir(std::size_t rx, std::size_t tx)
    {
        return std::span<cplx>(taps_).subspan((rx * num_tx_ + tx) * cir_length_, cir_length_);
    }
    std::span<const cplx> cir(std::size_t rx, std::size_t tx) const
    {
        return std::span<const cplx>(taps_).subspan((rx * num_tx_ + tx) * cir_length_, cir_length_);
    }
    std::span<const cplx> taps() const noexcept { return taps_; }

    friend bool operator==(const ChannelRealization&, const ChannelRealization&) = default;

private:
    std::size_t num_rx_ = 0;
    std::size_t num_tx_ = 0;
    std::size_t cir_length_ = 0;
    std::vector<cplx> taps_;
};

/// L_nz distinct positions per pair, uniform without replacement; each tap
/// a * exp(j theta) with a uniform on (0, A_max] and theta uniform on [0, 2pi).
inline ChannelRealization draw_channel(const ChannelSpec& spec)
{
    validate(spec);
    const double amp_cap = std::sqrt(max_tap_power(spec.num_tx, spec.nonzero_taps));
    ChannelRealization h(spec.num_rx, spec.num_tx, spec.cir_length);
    Rng rng(spec.seed);
    std::vector<std::size_t> positions(spec.cir_length);
    for (std::size_t r = 0; r < spec.num_rx; ++r) {
        for (std::size_t t = 0; t < spec.num_tx; ++t) {
            std::iota(positions.begin(), positions.end(), std::size_t{0});
            auto cir = h.cir(r, t);
            for (std::size_t k = 0; k < spec.nonzero_taps; ++k) {
                const std::size_t pick = k + rng.below(spec.cir_length - k);
                std::swap(positions[k], positions[pick]);
                const double amp = amp_cap * (1.0 - rng.uniform());
                const double phase = 2.0 * std::numbers::pi * rng.uniform();
                cir[positions[k]] = std::polar(amp, phase);
            }
        }
    }
    return h;
}

/// One receiver's samples for one batch transmission: P samples plus the
/// L - 1 sample convolution tail.
struct ReceivedFrame
{
    std::size_t batch_index = 0;
    std::size_t receiver = 0;
    std::vector<cplx> samples;
};

/// Y_r = sum over the batch of (frame_t * h[r][t]), linear convolution.
inline std::vector<ReceivedFrame> apply_channel(std::span<const PilotFrame> frames, const ChannelRealization& h,
                                                const BatchEntry& batch)
{
    if (frames.size() != batch.members.size()) {
        fail(ErrorCode::DimensionMismatch, "batch has " + std::to_string(batch.members.size()) + " members but "
                                               + std::to_string(frames.size()) + " frames were given");
    }
    if (frames.empty()) {
        fail(ErrorCode::DimensionMismatch, "empty batch");
    }
    const std::size_t p = frames.front().samples.size();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].samples.size() != p) {
            fail(ErrorCode::DimensionMismatch, "pilot frames in a batch must share one length");
        }
        if (frames[i].transmitter != batch.members[i].transmitter || frames[i].shift != batch.members[i].shift) {
            fail(ErrorCode::DimensionMismatch, "frame " + std::to_string(i) + " does not match the batch entry");
        }
        if (frames[i].transmitter >= h.num_tx()) {
            fail(ErrorCode::DimensionMismatch, "transmitter index beyond channel realization");
        }
    }
    const std::size_t len = h.cir_length();
    std::vector<ReceivedFrame> out(h.num_rx());
    for (std::size_t r = 0; r < h.num_rx(); ++r) {
        out[r].batch_index = batch.index;
        out[r].receiver = r;
        out[r].samples.assign(p + len - 1, cplx{});
        for (const auto& frame : frames) {
            const auto cir = h.cir(r, frame.transmitter);
            for (std::size_t d = 0; d < len; ++d) {
                const cplx tap = cir[d];
                if (tap == cplx{}) {
                    continue;
                }
                cplx* dst = out[r].samples.data() + d;
                for (std::size_t n = 0; n < p; ++n) {
                    dst[n] += tap * frame.samples[n];
                }
            }
        }
    }
    return out;
}

/// Mean |y|^2 over the first `window` samples (the pilot span, no tail).
inline double mean_power(std::span<const cplx> y, std::size_t window)
{
    window = std::min(window, y.size());
    if (window == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        acc += std::norm(y[i]);
    }
    return acc / static_cast<double>(window);
}

struct SnrSpec
{
    double snr_db = std::numeric_limits<double>::infinity(); // +inf means noiseless
    std::uint64_t seed = 0;

    bool noiseless() const noexcept { return snr_db == std::numeric_limits<double>::infinity(); }
};

inline double noise_variance(double snr_db, double signal_power)
{
    return signal_power / std::pow(10.0, snr_db / 10.0);
}

/// Adds circularly-symmetric complex Gaussian noise of total per-sample
/// variance signal_power / 10^(snr_db / 10).
inline ReceivedFrame add_awgn(ReceivedFrame y, const SnrSpec& snr, double signal_power)
{
    if (std::isnan(snr.snr_db) || snr.snr_db == -std::numeric_limits<double>::infinity()) {
        fail(ErrorCode::InvalidSpec, "SNR must be a real number or +inf");
    }
    if (!(signal_power > 0.0) || !std::isfinite(signal_power)) {
        fail(ErrorCode::InvalidSpec, "signal power must be positive and finite");
    }
    if (snr.noiseless()) {
        return y;
    }
    const double sigma = std::sqrt(noise_variance(snr.snr_db, signal_power) / 2.0);
    Rng rng(snr.seed);
    for (auto& s : y.samples) {
        const double re = rng.normal();
        const double im = rng.normal();
        s += cplx(sigma * re, sigma * im);
    }
    return y;
}

/// Ground truth plus, for each batch, one received frame per receiver.
struct SimulatedFrame
{
    ChannelRealization truth;
    BatchPlan plan;
    std::vector<std::vector<ReceivedFrame>> batches; // [batch][receiver]
};

inline void check_consistent(const PilotConfig& cfg, const ChannelSpec& chan, const PnSequence& seq)
{
    validate(cfg);
    validate(chan);
    if (chan.cir_length != cfg.cir_length || chan.num_tx != cfg.num_tx) {
        fail(ErrorCode::DimensionMismatch, "pilot and channel configurations disagree on L or N_t");
    }
    if (seq.size() != cfg.pn_length) {
        fail(ErrorCode::DimensionMismatch, "PN sequence length " + std::to_string(seq.size()) + " != M="
                                               + std::to_string(cfg.pn_length));
    }
}

/// Received frames for every batch of a given channel, without noise.
inline SimulatedFrame propagate(const PilotConfig& cfg, const ChannelRealization& truth, const PnSequence& seq)
{
    SimulatedFrame sim;
    sim.truth = truth;
    sim.plan = build_batch_plan(cfg);
    sim.batches.reserve(sim.plan.batches.size());
    for (const auto& entry : sim.plan.batches) {
        std::vector<PilotFrame> frames;
        frames.reserve(entry.members.size());
        for (const auto& m : entry.members) {
            frames.push_back(build_pilot(seq, m.shift, cfg.cp_length, m.transmitter));
        }
        sim.batches.push_back(apply_channel(frames, truth, entry));
    }
    return sim;
}

/// Adds noise to every received frame. Each (batch, receiver) stream draws
/// from its own generator seeded from snr.seed, referenced to the mean power
/// of that noiseless frame over its P pilot samples.
inline void add_noise(SimulatedFrame& sim, const SnrSpec& snr, std::size_t pilot_length)
{
    if (snr.noiseless()) {
        return;
    }
    for (auto& batch : sim.batches) {
        for (auto& frame : batch) {
            const double power = mean_power(frame.samples, pilot_length);
            const SnrSpec stream{snr.snr_db, derive_seed(snr.seed, {frame.batch_index, frame.receiver})};
            frame = add_awgn(std::move(frame), stream, power);
        }
    }
}

/// Pilot construction, propagation and noise for all batches of one frame.
inline SimulatedFrame simulate_frame(const PilotConfig& cfg, const ChannelSpec& chan, const SnrSpec& snr,
                                     const PnSequence& seq)
{
    check_consistent(cfg, chan, seq);
    SimulatedFrame sim = propagate(cfg, draw_channel(chan), seq);
    add_noise(sim, snr, cfg.pilot_length());
    return sim;
}

} // namespace pnce
