#include "oracles.hpp"

#include "pnce/channel_sim.hpp"
#include "pnce/estimator.hpp"
#include "pnce/metrics.hpp"
#include "pnce/oracle.hpp"

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

// Noiseless circular-convolution estimate of tap l: h[l] - (1/M) sum_{d != l} h[d].
cplx expected_tap(std::span<const cplx> h, std::size_t l, std::size_t m)
{
    cplx others{};
    for (std::size_t d = 0; d < h.size(); ++d) {
        if (d != l) {
            others += h[d];
        }
    }
    return h[l] - others / static_cast<double>(m);
}

} // namespace

TEST(Estimator, FullCirculantMatchesOracles)
{
    const auto seq = generate_mseq(7);
    const auto y = oracle::random_complex(127, 1);
    const auto got = correlate(build_partial_circulant(seq, 127), y, BackendConfig::reference64());
    const auto want = oracle::circulant_correlate(seq.chips(), y);
    const auto fft = oracle_circular_correlate(y, seq);
    ASSERT_EQ(got.size(), 127u);
    for (std::size_t i = 0; i < 127; ++i) {
        EXPECT_NEAR(std::abs(got[i] - want[i]), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(fft[i] - want[i]), 0.0, 1e-12);
    }
}

TEST(Estimator, DelayedSequencePeaksAtItsDelay)
{
    const auto seq = generate_mseq(9);
    for (std::size_t d : {0u, 1u, 77u, 510u}) {
        std::vector<cplx> y(511);
        for (std::size_t i = 0; i < 511; ++i) {
            y[i] = seq[(i + 511 - d) % 511];
        }
        const auto c = correlate(build_correlation_rows(seq, {d, (d + 1) % 511}), y, BackendConfig::reference64());
        EXPECT_DOUBLE_EQ(c[0].real(), 1.0);
        EXPECT_DOUBLE_EQ(c[1].real(), -1.0 / 511.0);
    }
}

TEST(Estimator, BackendsAgreeWithinTheirPrecision)
{
    const auto seq = generate_mseq(11);
    const auto y = oracle::random_complex(2047, 4);
    const auto corr = build_partial_circulant(seq, 64);
    const auto ref = correlate(corr, y, BackendConfig::reference64());
    const auto f32 = correlate(corr, y, BackendConfig::reference32());
    MmaStats stats;
    const auto f16 = correlate(corr, y, BackendConfig::tensor16(), &stats);
    EXPECT_EQ(stats.chunks, 16u * 8u);
    EXPECT_FALSE(stats.saturated);
    for (std::size_t i = 0; i < 64; ++i) {
        EXPECT_LT(std::abs(f32[i] - ref[i]), 1e-6);
        // binary16 input rounding: relative 2^-11 per sample, averaged over M.
        EXPECT_LT(std::abs(f16[i] - ref[i]), 2e-4);
    }
}

TEST(Estimator, OddShapesArePadded)
{
    const auto y = oracle::random_complex(7, 2);
    std::vector<double> a(5 * 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = (i * 37 % 11) - 5.0;
    }
    const RealMatrix m(5, 7, a);
    EXPECT_EQ(m.padded_cols(), 8u);
    EXPECT_EQ(m.num_panels(), 2u);
    for (auto backend : {BackendConfig::reference64(), BackendConfig::reference32(), BackendConfig::tensor16(4)}) {
        const auto got = gemv(m, y, backend, 1);
        for (std::size_t r = 0; r < 5; ++r) {
            cplx want{};
            for (std::size_t k = 0; k < 7; ++k) {
                want += a[r * 7 + k] * y[k];
            }
            EXPECT_LT(std::abs(got[r] - want), 1e-2) << to_string(backend.kind);
        }
    }
}

TEST(Estimator, Binary16AccumulatorDriftsWithoutChunking)
{
    const RealMatrix ones(1, 2048, std::vector<double>(2048, 1.0));
    const std::vector<cplx> y(2048, cplx{1.25, 0.0});
    double acc = 0.0;
    for (int k = 0; k < 2048; ++k) {
        acc = oracle::nearest_half(acc + 1.25);
    }
    const double want_unchunked = static_cast<double>(static_cast<float>(acc) / 2048.0f);
    const auto unchunked = gemv(ones, y, BackendConfig::tensor16(0, Accumulator::binary16));
    const auto chunked = gemv(ones, y, BackendConfig::tensor16(256, Accumulator::binary16));
    EXPECT_EQ(unchunked[0].real(), want_unchunked);
    EXPECT_NE(unchunked[0].real(), 1.25);
    EXPECT_EQ(chunked[0].real(), 1.25);
}

TEST(Estimator, SaturationIsReported)
{
    const RealMatrix ones(1, 2048, std::vector<double>(2048, 1.0));
    const std::vector<cplx> y(2048, cplx{40.0, 0.0});
    MmaStats stats;
    EXPECT_EQ(code_of([&] { gemv(ones, y, BackendConfig::tensor16(0, Accumulator::binary16), 0, &stats); }),
              ErrorCode::SaturationDetected);
    EXPECT_TRUE(stats.saturated);
    MmaStats ok;
    const auto r = gemv(ones, y, BackendConfig::tensor16(256, Accumulator::binary16), 0, &ok);
    EXPECT_FALSE(ok.saturated);
    EXPECT_LE(ok.max_abs_intermediate, kBinary16Max);
    EXPECT_EQ(r[0].real(), 40.0);
}

TEST(Estimator, BackendValidation)
{
    const RealMatrix m(1, 4, {1, 2, 3, 4});
    const std::vector<cplx> y(4);
    BackendConfig bad = BackendConfig::tensor16(6);
    EXPECT_EQ(code_of([&] { gemv(m, y, bad); }), ErrorCode::InvalidConfig);
    bad = BackendConfig::tensor16();
    bad.tile = 8;
    EXPECT_EQ(code_of([&] { gemv(m, y, bad); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([&] { gemv(m, std::vector<cplx>(5), BackendConfig::reference64()); }),
              ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] { tiled_mma_gemm(m, y, BackendConfig::reference32()); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(code_of([] { parse_backend("gpu"); }), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_backend("tensor16"), BackendKind::tensor16);
    EXPECT_EQ(code_of([] { build_partial_circulant(generate_mseq(5), 32); }), ErrorCode::RowsOutOfRange);
    EXPECT_EQ(code_of([] { build_correlation_rows(generate_mseq(5), {31}); }), ErrorCode::RowsOutOfRange);
}

TEST(Estimator, RemoveCp)
{
    std::vector<cplx> f(12);
    for (std::size_t i = 0; i < 12; ++i) {
        f[i] = static_cast<double>(i);
    }
    const auto body = remove_cp(f, 3, 7);
    ASSERT_EQ(body.size(), 7u);
    EXPECT_EQ(body.front(), cplx(3.0));
    EXPECT_EQ(body.back(), cplx(9.0));
    EXPECT_EQ(code_of([&] { remove_cp(f, 6, 7); }), ErrorCode::FrameTooShort);
}

TEST(Estimator, SequentialNoiselessRecovery)
{
    const auto seq = generate_mseq(9);
    const PilotConfig cfg{511, 32, 1, 1, 32, 1e6};
    const auto h = draw_channel({32, 9, 1, 1, 3});
    const auto sim = propagate(cfg, h, seq);
    const auto body = remove_cp(sim.batches[0][0].samples, 32, 511);
    const auto est = estimate_sequential(body, seq, 32, BackendConfig::reference64());
    for (std::size_t l = 0; l < 32; ++l) {
        EXPECT_NEAR(std::abs(est[l] - expected_tap(h.cir(0, 0), l, 511)), 0.0, 1e-14);
        EXPECT_LE(std::abs(est[l] - h.cir(0, 0)[l]), sidelobe_bound(h.cir(0, 0), 511));
    }
}

TEST(Estimator, BatchedNoiselessRecovery)
{
    const auto seq = generate_mseq(9);
    const PilotConfig cfg{511, 40, 4, 4, 40, 1e6};
    const auto h = draw_channel({40, 40, 4, 1, 8});
    const auto sim = propagate(cfg, h, seq);
    const auto body = remove_cp(sim.batches[0][0].samples, 40, 511);
    const auto est = estimate_batched(body, seq, sim.plan.batches[0], 40, BackendConfig::reference64());
    ASSERT_EQ(est.size(), 4u);
    for (std::size_t t = 0; t < 4; ++t) {
        // Other transmitters leak through sidelobes only.
        std::vector<cplx> all;
        for (std::size_t u = 0; u < 4; ++u) {
            all.insert(all.end(), h.cir(0, u).begin(), h.cir(0, u).end());
        }
        double bound = 0.0;
        for (const auto& v : all) {
            bound += std::abs(v);
        }
        for (std::size_t l = 0; l < 40; ++l) {
            EXPECT_LE(std::abs(est.at(t)[l] - h.cir(0, t)[l]), bound / 511.0 + 1e-15);
        }
    }
    BatchEntry tight{0, {{0, 0}, {1, 10}}};
    EXPECT_EQ(code_of([&] { estimate_batched(body, seq, tight, 40, BackendConfig::reference64()); }),
              ErrorCode::PlanMismatch);
}

TEST(Estimator, WindowStart)
{
    EXPECT_EQ(window_start(0, 511), 0u);
    EXPECT_EQ(window_start(127, 511), 384u);
    const auto lags = batch_lags(BatchEntry{0, {{0, 0}, {1, 200}}}, 511, 3);
    EXPECT_EQ(lags, (std::vector<std::size_t>{0, 1, 2, 311, 312, 313}));
}

TEST(Estimator, FrameEstimatorAndCounters)
{
    const auto seq = generate_mseq(9);
    for (std::size_t nb : {1u, 2u, 4u}) {
        const PilotConfig cfg{511, 64, 8, nb, 64, 1e7};
        const auto sim = propagate(cfg, draw_channel({64, 64, 8, 3, 21}), seq);
        for (auto backend : {BackendConfig::reference64(), BackendConfig::tensor16()}) {
            const Estimator estimator(seq, cfg, backend);
            WorkCounters work;
            MmaStats stats;
            const auto est = estimator.estimate(sim.batches, &work, &stats);
            EXPECT_EQ(work.samples_moved, 3u * 575u * 8u / nb);
            EXPECT_EQ(work.macs, 2u * 64u * 511u * 8u * 3u);
            for (std::size_t r = 0; r < 3; ++r) {
                for (std::size_t t = 0; t < 8; ++t) {
                    double bound = 0.0;
                    for (std::size_t u = 0; u < 8; ++u) {
                        if (u / nb == t / nb) {
                            for (const auto& v : sim.truth.cir(r, u)) {
                                bound += std::abs(v);
                            }
                        }
                    }
                    const double slack = backend.kind == BackendKind::reference64 ? 1e-15 : 2e-4;
                    for (std::size_t l = 0; l < 64; ++l) {
                        ASSERT_LE(std::abs(est.cir(r, t)[l] - sim.truth.cir(r, t)[l]), bound / 511.0 + slack);
                    }
                }
            }
        }
    }
}

TEST(Estimator, FrameEstimatorShapeChecks)
{
    const auto seq = generate_mseq(9);
    const PilotConfig cfg{511, 64, 4, 2, 64, 1e7};
    const Estimator estimator(seq, cfg, BackendConfig::reference64());
    const auto sim = propagate(cfg, draw_channel({64, 4, 4, 2, 1}), seq);
    std::vector<std::vector<ReceivedFrame>> one(sim.batches.begin(), sim.batches.begin() + 1);
    EXPECT_EQ(code_of([&] { estimator.estimate(one); }), ErrorCode::DimensionMismatch);
    auto short_frames = sim.batches;
    short_frames[1][0].samples.resize(100);
    EXPECT_EQ(code_of([&] { estimator.estimate(short_frames); }), ErrorCode::FrameTooShort);
    EXPECT_EQ(code_of([&] { Estimator(generate_mseq(10), cfg, BackendConfig::reference64()); }),
              ErrorCode::DimensionMismatch);
}
