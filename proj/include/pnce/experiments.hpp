#pragma once

/// Monte-Carlo experiment drivers: MAE against SNR for several PN lengths
/// and batch sizes, MAE against the number of nonzero channel taps, and
/// per-frame processing latency against batch size.

#include "pnce/channel_sim.hpp"
#include "pnce/error.hpp"
#include "pnce/estimator.hpp"
#include "pnce/metrics.hpp"
#include "pnce/pilot_design.hpp"
#include "pnce/pn_core.hpp"
#include "pnce/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace pnce {

enum class ExperimentKind { snr, taps, latency };

constexpr std::string_view to_string(ExperimentKind k) noexcept
{
    switch (k) {
    case ExperimentKind::snr: return "snr";
    case ExperimentKind::taps: return "taps";
    case ExperimentKind::latency: return "latency";
    }
    return "unknown";
}

struct MimoScale
{
    std::size_t num_tx = 16;
    std::size_t num_rx = 16;
};

inline std::vector<double> default_snr_grid()
{
    std::vector<double> g;
    for (int db = -10; db <= 30; db += 5) {
        g.push_back(db);
    }
    return g;
}

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::snr;
    std::vector<MimoScale> scales{{16, 16}};
    std::vector<std::size_t> pn_lengths{511, 2047};
    std::size_t cp_length = 0; // 0 means C = L
    std::size_t cir_length = 64;
    std::vector<std::size_t> nonzero_taps{64};
    std::vector<std::size_t> batch_sizes{1, 2, 4};
    std::vector<double> snr_db = default_snr_grid();
    std::size_t iterations = 50;
    std::uint64_t seed = 1;
    std::vector<BackendConfig> backends{BackendConfig::tensor16()};
    double sample_rate = 10e6;
    std::size_t threads = 0;     // 0: PNCE_THREADS or hardware concurrency
    std::size_t repetitions = 10; // latency only
    std::size_t warmup = 2;       // latency only

    std::size_t effective_cp() const noexcept { return cp_length ? cp_length : cir_length; }
};

/// Table I domains: M in {511, 1023, 2047}, C in 64..128, L_nz in 1..128,
/// N_batch in {1, 2, 4, 8}, scales 16/32/64. Values outside are allowed as
/// desk-scale overrides; this only reports whether any were used.
inline bool within_table_domains(const ExperimentConfig& cfg)
{
    auto in = [](std::size_t v, std::initializer_list<std::size_t> set) {
        return std::find(set.begin(), set.end(), v) != set.end();
    };
    for (auto m : cfg.pn_lengths) {
        if (!in(m, {511, 1023, 2047})) return false;
    }
    for (auto b : cfg.batch_sizes) {
        if (!in(b, {1, 2, 4, 8})) return false;
    }
    for (auto t : cfg.nonzero_taps) {
        if (t < 1 || t > 128) return false;
    }
    for (const auto& s : cfg.scales) {
        if (!in(s.num_tx, {16, 32, 64}) || s.num_tx != s.num_rx) return false;
    }
    const auto c = cfg.effective_cp();
    return c >= 64 && c <= 128 && cfg.iterations == 50;
}

inline void validate(const ExperimentConfig& cfg)
{
    if (cfg.iterations < 1) {
        fail(ErrorCode::InvalidConfig, "iterations must be at least 1");
    }
    if (cfg.scales.empty() || cfg.pn_lengths.empty() || cfg.nonzero_taps.empty() || cfg.batch_sizes.empty()
        || cfg.backends.empty()) {
        fail(ErrorCode::InvalidConfig, "experiment grids must not be empty");
    }
    if (cfg.kind != ExperimentKind::latency && cfg.snr_db.empty()) {
        fail(ErrorCode::InvalidConfig, "SNR grid must not be empty");
    }
    for (double s : cfg.snr_db) {
        if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) {
            fail(ErrorCode::InvalidConfig, "SNR values must be real or +inf");
        }
    }
    if (cfg.kind == ExperimentKind::latency && cfg.repetitions < 10) {
        fail(ErrorCode::InvalidConfig, "latency benchmarks need at least 10 timed repetitions");
    }
    for (const auto& b : cfg.backends) {
        validate(b);
    }
    for (const auto& s : cfg.scales) {
        for (auto m : cfg.pn_lengths) {
            if (mseq_degree(m) == 0) {
                fail(ErrorCode::InvalidConfig, "PN length " + std::to_string(m) + " is not 2^k - 1");
            }
            for (auto b : cfg.batch_sizes) {
                PilotConfig p{m, cfg.effective_cp(), s.num_tx, b, cfg.cir_length, cfg.sample_rate};
                validate(p);
            }
        }
        for (auto t : cfg.nonzero_taps) {
            validate(ChannelSpec{cfg.cir_length, t, s.num_tx, s.num_rx, 0});
        }
    }
}

/// Worker count: explicit value, else PNCE_THREADS, else hardware concurrency.
inline std::size_t worker_count(std::size_t requested = 0)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("PNCE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index is
/// processed exactly once; callers store results by index so the outcome
/// does not depend on scheduling. The first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body)
{
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) {
                            error = std::current_exception();
                        }
                        next = n;
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

struct SweepResult
{
    std::string experiment;
    std::string backend;
    std::size_t nt = 0, nr = 0, m = 0, c = 0, l = 0, l_nz = 0, n_batch = 0;
    double snr_db = 0.0;
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    double mae = 0.0;
    double mae_stderr = 0.0;
    double latency_s = 0.0; // mean wall-clock per frame estimate
    std::size_t samples_moved = 0;
    std::size_t macs = 0;
    std::size_t saturations = 0;
    std::vector<double> iteration_mae; // NaN where the iteration saturated
};

namespace detail {

struct GridPoint
{
    MimoScale scale;
    std::size_t m = 0;
    std::size_t l_nz = 0;
    std::size_t n_batch = 0;
};

// Per-iteration outcome for every (snr, backend) cell of one grid point.
struct IterationCells
{
    std::vector<double> mae;     // [snr * backends + b]
    std::vector<double> seconds; // same layout
    std::vector<std::uint8_t> saturated;
    WorkCounters work;           // one frame, identical for every cell
};

inline std::vector<SweepResult> run_point(const ExperimentConfig& cfg, const GridPoint& pt, std::string_view name)
{
    const PnSequence seq = generate_mseq(mseq_degree(pt.m));
    const PilotConfig pilot{pt.m, cfg.effective_cp(), pt.scale.num_tx, pt.n_batch, cfg.cir_length, cfg.sample_rate};
    std::vector<Estimator> estimators;
    for (const auto& b : cfg.backends) {
        estimators.emplace_back(seq, pilot, b);
    }
    const std::size_t nsnr = cfg.snr_db.size();
    const std::size_t nb = cfg.backends.size();
    std::vector<IterationCells> cells(cfg.iterations);

    parallel_for(cfg.iterations, worker_count(cfg.threads), [&](std::size_t it) {
        // The channel depends only on (M, L_nz, scale, iteration), so batch
        // sizes and backends are compared on identical channels.
        const ChannelSpec chan{cfg.cir_length, pt.l_nz, pt.scale.num_tx, pt.scale.num_rx,
                               derive_seed(cfg.seed, {1, pt.m, pt.l_nz, pt.scale.num_tx, pt.scale.num_rx, it})};
        const SimulatedFrame clean = propagate(pilot, draw_channel(chan), seq);
        IterationCells& out = cells[it];
        out.mae.assign(nsnr * nb, 0.0);
        out.seconds.assign(nsnr * nb, 0.0);
        out.saturated.assign(nsnr * nb, 0);
        for (std::size_t si = 0; si < nsnr; ++si) {
            SimulatedFrame noisy = clean;
            add_noise(noisy, SnrSpec{cfg.snr_db[si], derive_seed(cfg.seed, {2, pt.m, pt.l_nz, pt.scale.num_tx,
                                                                            pt.scale.num_rx, pt.n_batch, it, si})},
                      pilot.pilot_length());
            for (std::size_t b = 0; b < nb; ++b) {
                WorkCounters work;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const CirEstimate est = estimators[b].estimate(noisy.batches, &work);
                    const auto t1 = std::chrono::steady_clock::now();
                    out.seconds[si * nb + b] = std::chrono::duration<double>(t1 - t0).count();
                    out.mae[si * nb + b] = mae(noisy.truth, est);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::SaturationDetected) {
                        throw;
                    }
                    const auto t1 = std::chrono::steady_clock::now();
                    out.seconds[si * nb + b] = std::chrono::duration<double>(t1 - t0).count();
                    out.mae[si * nb + b] = std::nan("");
                    out.saturated[si * nb + b] = 1;
                }
                if (si == 0 && b == 0) {
                    out.work = work;
                }
            }
        }
    });

    std::vector<SweepResult> rows;
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t si = 0; si < nsnr; ++si) {
            SweepResult row;
            row.experiment = std::string(name);
            row.backend = std::string(to_string(cfg.backends[b].kind));
            row.nt = pt.scale.num_tx;
            row.nr = pt.scale.num_rx;
            row.m = pt.m;
            row.c = pilot.cp_length;
            row.l = cfg.cir_length;
            row.l_nz = pt.l_nz;
            row.n_batch = pt.n_batch;
            row.snr_db = cfg.snr_db[si];
            row.iterations = cfg.iterations;
            row.seed = cfg.seed;
            CompensatedSum secs;
            for (const auto& c : cells) {
                row.iteration_mae.push_back(c.mae[si * nb + b]);
                secs.add(c.seconds[si * nb + b]);
                row.saturations += c.saturated[si * nb + b];
            }
            const auto stats = mean_and_stderr(row.iteration_mae);
            row.mae = stats.mean;
            row.mae_stderr = stats.stderr_;
            // Clamp keeps the latency strictly positive on coarse clocks.
            row.latency_s = std::max(secs.value() / static_cast<double>(cfg.iterations), 1e-9);
            row.samples_moved = cells.front().work.samples_moved;
            row.macs = cells.front().work.macs;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace detail

/// One row per (backend, scale, M, N_batch, SNR); L_nz is the first entry
/// of cfg.nonzero_taps.
inline std::vector<SweepResult> run_snr_sweep(const ExperimentConfig& cfg)
{
    validate(cfg);
    std::vector<SweepResult> rows;
    for (const auto& scale : cfg.scales) {
        for (auto m : cfg.pn_lengths) {
            for (auto nb : cfg.batch_sizes) {
                auto part = detail::run_point(cfg, {scale, m, cfg.nonzero_taps.front(), nb}, "snr");
                rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
            }
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepResult& a, const SweepResult& b) {
        return std::tie(a.backend, a.nt, a.m, a.n_batch, a.snr_db) < std::tie(b.backend, b.nt, b.m, b.n_batch, b.snr_db);
    });
    return rows;
}

/// L_nz varied over cfg.nonzero_taps with M and N_batch fixed to the first
/// entries of their lists. Rows are ordered by (L_nz, SNR).
inline std::vector<SweepResult> run_tap_sweep(const ExperimentConfig& cfg)
{
    validate(cfg);
    std::vector<SweepResult> rows;
    for (auto lnz : cfg.nonzero_taps) {
        auto part = detail::run_point(cfg, {cfg.scales.front(), cfg.pn_lengths.front(), lnz,
                                            cfg.batch_sizes.front()}, "taps");
        rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepResult& a, const SweepResult& b) {
        return std::tie(a.l_nz, a.snr_db) < std::tie(b.l_nz, b.snr_db);
    });
    return rows;
}

struct LatencyPoint
{
    std::string backend;
    std::size_t nt = 0, nr = 0, m = 0, c = 0, l = 0, l_nz = 0, n_batch = 0;
    std::size_t repetitions = 0;
    double mean_s = 0.0;
    double stddev_s = 0.0;
    double median_s = 0.0;
    std::size_t samples_moved = 0;
    std::size_t macs = 0;
    double propagation_s = 0.0; // pilot airtime of the same frame
};

struct LatencyReport
{
    std::vector<LatencyPoint> points;
    std::uint64_t seed = 0;
};

/// Times the staging + correlation + assembly path for one full frame
/// (all N_t pilots, ceil(N_t / N_batch) batches) on a single thread.
/// Repetitions are interleaved round-robin across configurations so that
/// slow drift in machine load is shared by every point.
inline LatencyReport run_latency_bench(const ExperimentConfig& cfg)
{
    ExperimentConfig c = cfg;
    c.kind = ExperimentKind::latency;
    validate(c);
    LatencyReport report;
    report.seed = cfg.seed;
    const double snr = cfg.snr_db.empty() ? 20.0 : cfg.snr_db.front();

    struct Setup
    {
        SimulatedFrame frame;
        Estimator est;
        LatencyPoint pt;
        std::vector<double> times;
    };
    std::deque<Setup> setups;
    for (const auto& scale : cfg.scales) {
        for (auto m : cfg.pn_lengths) {
            const PnSequence seq = generate_mseq(mseq_degree(m));
            for (auto nb : cfg.batch_sizes) {
                const PilotConfig pilot{m, cfg.effective_cp(), scale.num_tx, nb, cfg.cir_length, cfg.sample_rate};
                const ChannelSpec chan{cfg.cir_length, cfg.nonzero_taps.front(), scale.num_tx, scale.num_rx,
                                       derive_seed(cfg.seed, {3, m, scale.num_tx, scale.num_rx})};
                const SimulatedFrame frame =
                    simulate_frame(pilot, chan, SnrSpec{snr, derive_seed(cfg.seed, {4, m, nb})}, seq);
                for (const auto& backend : cfg.backends) {
                    LatencyPoint pt;
                    pt.backend = std::string(to_string(backend.kind));
                    pt.nt = scale.num_tx;
                    pt.nr = scale.num_rx;
                    pt.m = m;
                    pt.c = pilot.cp_length;
                    pt.l = cfg.cir_length;
                    pt.l_nz = cfg.nonzero_taps.front();
                    pt.n_batch = nb;
                    pt.propagation_s = propagation_time(pilot);
                    setups.push_back(Setup{frame, Estimator(seq, pilot, backend), pt, {}});
                }
            }
        }
    }

    for (auto& s : setups) {
        for (std::size_t w = 0; w < cfg.warmup; ++w) {
            (void)s.est.estimate(s.frame.batches);
        }
    }
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        for (auto& s : setups) {
            WorkCounters work;
            const auto t0 = std::chrono::steady_clock::now();
            const CirEstimate out = s.est.estimate(s.frame.batches, &work);
            const auto t1 = std::chrono::steady_clock::now();
            s.times.push_back(std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9));
            if (rep == 0) {
                s.pt.samples_moved = work.samples_moved;
                s.pt.macs = work.macs;
            }
        }
    }

    for (auto& s : setups) {
        auto& times = s.times;
        LatencyPoint& pt = s.pt;
        pt.repetitions = times.size();
        const auto stats = mean_and_stderr(times);
        pt.mean_s = stats.mean;
        pt.stddev_s = stats.stderr_ * std::sqrt(static_cast<double>(times.size()));
        std::sort(times.begin(), times.end());
        const std::size_t n = times.size();
        pt.median_s = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
        report.points.push_back(pt);
    }
    return report;
}

} // namespace pnce
