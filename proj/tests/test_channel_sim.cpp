#include "oracles.hpp"

#include "pnce/channel_sim.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pnce;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::IoError;
}

} // namespace

TEST(ChannelSim, DrawIsDeterministicPerSeed)
{
    const ChannelSpec spec{64, 16, 4, 3, 42};
    EXPECT_EQ(draw_channel(spec), draw_channel(spec));
    ChannelSpec other = spec;
    other.seed = 43;
    EXPECT_FALSE(draw_channel(spec) == draw_channel(other));
}

TEST(ChannelSim, SparsityAndAmplitudeCap)
{
    for (std::size_t lnz : {1u, 5u, 64u}) {
        const ChannelSpec spec{64, lnz, 8, 4, 7};
        const auto h = draw_channel(spec);
        const double cap = std::sqrt(1.0 / (8.0 * std::sqrt(static_cast<double>(lnz))));
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t t = 0; t < 8; ++t) {
                std::size_t nz = 0;
                for (const auto& tap : h.cir(r, t)) {
                    if (tap != cplx{}) {
                        ++nz;
                        EXPECT_LE(std::abs(tap), cap * (1 + 1e-12));
                    }
                }
                EXPECT_EQ(nz, lnz);
            }
        }
    }
}

TEST(ChannelSim, TapStatistics)
{
    // Amplitude uniform on (0, A]: E|h|^2 = A^2 / 3; phase uniform: E[h] = 0.
    const ChannelSpec spec{32, 8, 16, 64, 9};
    const auto h = draw_channel(spec);
    const double a2 = max_tap_power(16, 8);
    double power = 0.0;
    cplx mean{};
    std::vector<double> hits(32, 0.0);
    std::size_t n = 0;
    for (std::size_t r = 0; r < 64; ++r) {
        for (std::size_t t = 0; t < 16; ++t) {
            const auto cir = h.cir(r, t);
            for (std::size_t d = 0; d < 32; ++d) {
                if (cir[d] != cplx{}) {
                    power += std::norm(cir[d]);
                    mean += cir[d];
                    hits[d] += 1.0;
                    ++n;
                }
            }
        }
    }
    ASSERT_EQ(n, 64u * 16u * 8u);
    EXPECT_NEAR(power / n / (a2 / 3.0), 1.0, 0.06);
    EXPECT_LT(std::abs(mean / static_cast<double>(n)) / std::sqrt(a2), 0.04);
    // Each position is occupied with probability 8/32.
    for (double c : hits) {
        EXPECT_NEAR(c / 1024.0, 0.25, 0.06);
    }
}

TEST(ChannelSim, SpecValidation)
{
    EXPECT_EQ(code_of([] { draw_channel({64, 0, 1, 1, 1}); }), ErrorCode::InvalidSpec);
    EXPECT_EQ(code_of([] { draw_channel({64, 65, 1, 1, 1}); }), ErrorCode::InvalidSpec);
    EXPECT_EQ(code_of([] { draw_channel({64, 4, 0, 1, 1}); }), ErrorCode::InvalidSpec);
}

TEST(ChannelSim, ApplyChannelMatchesLinearConvolution)
{
    const auto seq = generate_mseq(7);
    const PilotConfig cfg{127, 20, 6, 3, 20, 1e6};
    const auto plan = build_batch_plan(cfg);
    const auto h = draw_channel({20, 6, 6, 2, 5});
    for (const auto& entry : plan.batches) {
        std::vector<PilotFrame> frames;
        for (const auto& m : entry.members) {
            frames.push_back(build_pilot(seq, m.shift, 20, m.transmitter));
        }
        const auto rx = apply_channel(frames, h, entry);
        ASSERT_EQ(rx.size(), 2u);
        for (std::size_t r = 0; r < 2; ++r) {
            std::vector<cplx> want(147 + 19);
            for (const auto& f : frames) {
                const auto part = oracle::linear_convolve(f.samples, h.cir(r, f.transmitter));
                for (std::size_t i = 0; i < want.size(); ++i) {
                    want[i] += part[i];
                }
            }
            ASSERT_EQ(rx[r].samples.size(), want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                ASSERT_NEAR(std::abs(rx[r].samples[i] - want[i]), 0.0, 1e-12);
            }
        }
    }
}

TEST(ChannelSim, ApplyChannelDimensionChecks)
{
    const auto seq = generate_mseq(5);
    const auto h = draw_channel({4, 2, 2, 1, 1});
    BatchEntry entry{0, {{0, 0}, {1, 15}}};
    std::vector<PilotFrame> one{build_pilot(seq, 0, 4, 0)};
    EXPECT_EQ(code_of([&] { apply_channel(one, h, entry); }), ErrorCode::DimensionMismatch);
    std::vector<PilotFrame> wrong{build_pilot(seq, 0, 4, 0), build_pilot(seq, 3, 4, 1)};
    EXPECT_EQ(code_of([&] { apply_channel(wrong, h, entry); }), ErrorCode::DimensionMismatch);
    BatchEntry far{0, {{5, 0}}};
    std::vector<PilotFrame> beyond{build_pilot(seq, 0, 4, 5)};
    EXPECT_EQ(code_of([&] { apply_channel(beyond, h, far); }), ErrorCode::DimensionMismatch);
}

TEST(ChannelSim, NoiseLevelMatchesSnr)
{
    ReceivedFrame y{0, 0, std::vector<cplx>(200000, cplx{0.5, -0.5})};
    const double power = 0.5;
    for (double snr_db : {-10.0, 0.0, 10.0, 30.0}) {
        const auto noisy = add_awgn(y, {snr_db, 77}, power);
        double var = 0.0;
        cplx mean{};
        for (std::size_t i = 0; i < y.samples.size(); ++i) {
            const cplx n = noisy.samples[i] - y.samples[i];
            var += std::norm(n);
            mean += n;
        }
        var /= y.samples.size();
        const double want = power / std::pow(10.0, snr_db / 10.0);
        EXPECT_NEAR(var / want, 1.0, 0.02) << snr_db;
        EXPECT_LT(std::abs(mean) / y.samples.size(), 0.01 * std::sqrt(want));
    }
}

TEST(ChannelSim, NoiseArgumentChecks)
{
    ReceivedFrame y{0, 0, {cplx{1, 0}}};
    EXPECT_EQ(add_awgn(y, {}, 1.0).samples, y.samples);
    EXPECT_EQ(code_of([&] { add_awgn(y, {std::nan(""), 1}, 1.0); }), ErrorCode::InvalidSpec);
    EXPECT_EQ(code_of([&] { add_awgn(y, {10.0, 1}, 0.0); }), ErrorCode::InvalidSpec);
}

TEST(ChannelSim, SimulateFrameShapesAndNoiseless)
{
    const auto seq = generate_mseq(9);
    const PilotConfig cfg{511, 64, 8, 4, 64, 1e7};
    const ChannelSpec chan{64, 10, 8, 3, 11};
    const auto clean = simulate_frame(cfg, chan, {}, seq);
    ASSERT_EQ(clean.batches.size(), 2u);
    for (const auto& b : clean.batches) {
        ASSERT_EQ(b.size(), 3u);
        for (const auto& f : b) {
            EXPECT_EQ(f.samples.size(), 575u + 63u);
        }
    }
    const auto again = propagate(cfg, draw_channel(chan), seq);
    EXPECT_EQ(clean.batches[1][2].samples, again.batches[1][2].samples);

    const auto noisy = simulate_frame(cfg, chan, {10.0, 3}, seq);
    EXPECT_EQ(noisy.truth, clean.truth);
    EXPECT_NE(noisy.batches[0][0].samples, clean.batches[0][0].samples);
    EXPECT_EQ(noisy.batches[0][0].samples, simulate_frame(cfg, chan, {10.0, 3}, seq).batches[0][0].samples);
}

TEST(ChannelSim, ConsistencyChecks)
{
    const auto seq = generate_mseq(9);
    EXPECT_EQ(code_of([&] { simulate_frame({511, 64, 8, 1, 64, 1e7}, {32, 4, 8, 1, 1}, {}, seq); }),
              ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] { simulate_frame({1023, 64, 8, 1, 64, 1e7}, {64, 4, 8, 1, 1}, {}, seq); }),
              ErrorCode::DimensionMismatch);
}
