#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
// validation error.

#include "pnce/pnce.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace pnce::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

inline void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f) {
        fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    }
    f << text;
    if (!f) {
        fail(ErrorCode::IoError, "write to '" + path + "' failed");
    }
}

inline std::string read_text(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        fail(ErrorCode::IoError, "cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline double parse_snr(const std::string& s)
{
    if (s == "inf" || s == "noiseless") {
        return std::numeric_limits<double>::infinity();
    }
    return parse_double(s);
}

inline BackendConfig backend_from(const std::string& name, std::size_t chunk, const std::string& acc)
{
    const auto kind = parse_backend(name);
    if (kind != BackendKind::tensor16) {
        return BackendConfig::of(kind);
    }
    if (acc != "binary32" && acc != "binary16") {
        fail(ErrorCode::InvalidConfig, "accumulator must be binary32 or binary16");
    }
    return BackendConfig::tensor16(chunk, acc == "binary16" ? Accumulator::binary16 : Accumulator::binary32);
}

} // namespace detail

/// Runs one command line. Normal output goes to `out`, diagnostics to `err`.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"PN-sequence correlation channel estimation for massive MIMO", "pnce"};
    app.require_subcommand(1);

    // gen-pn
    auto* gen = app.add_subcommand("gen-pn", "Emit one period of a maximal-length PN sequence");
    int gen_degree = 9;
    std::vector<int> gen_taps;
    std::uint32_t gen_state = 1;
    std::string gen_format = "text";
    gen->add_option("--degree", gen_degree, "LFSR degree k; the sequence has 2^k - 1 chips")->required();
    gen->add_option("--taps", gen_taps, "Feedback taps (default: built-in primitive polynomial)")->delimiter(',');
    gen->add_option("--state", gen_state, "Nonzero initial register state");
    gen->add_option("--format", gen_format, "text (one chip per line) or json")
        ->check(CLI::IsMember({"text", "json"}));

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate one frame of pilots to an IQ file plus ground truth");
    int sim_degree = 11;
    std::size_t sim_cp = 0, sim_l = 64, sim_lnz = 64, sim_nt = 16, sim_nr = 16, sim_nb = 1;
    std::string sim_snr = "inf", sim_out, sim_truth;
    std::uint64_t sim_seed = 1;
    double sim_fs = 10e6;
    sim->add_option("--degree", sim_degree, "PN degree (M = 2^k - 1)");
    sim->add_option("--cp", sim_cp, "Cyclic prefix length C (default: L)");
    sim->add_option("--cir-length", sim_l, "Maximum CIR length L");
    sim->add_option("--nonzero-taps", sim_lnz, "Nonzero taps per CIR, L_nz");
    sim->add_option("--nt", sim_nt, "Transmit antennas");
    sim->add_option("--nr", sim_nr, "Receive antennas");
    sim->add_option("--n-batch", sim_nb, "Transmitters multiplexed per batch");
    sim->add_option("--snr", sim_snr, "SNR in dB, or inf for noiseless");
    sim->add_option("--seed", sim_seed, "Random seed");
    sim->add_option("--sample-rate", sim_fs, "Sampling rate in samples/s");
    sim->add_option("--out", sim_out, "IQ output path")->required();
    sim->add_option("--truth", sim_truth, "Ground-truth CIR CSV output path");

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate CIRs from an IQ file");
    std::string est_in, est_out, est_backend = "reference64", est_acc = "binary32", est_truth;
    std::size_t est_chunk = 256;
    est->add_option("--in", est_in, "IQ input path")->required();
    est->add_option("--out", est_out, "CIR CSV output path (default: standard output)");
    est->add_option("--backend", est_backend, "reference64, reference32 or tensor16");
    est->add_option("--chunk", est_chunk, "tensor16 normalization chunk length (0: none)");
    est->add_option("--accumulator", est_acc, "tensor16 accumulator: binary32 or binary16");
    est->add_option("--truth", est_truth, "Ground-truth CSV; prints the MAE when given");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run an MAE sweep (experiment snr or taps) from a JSON config");
    std::string sweep_cfg, sweep_out;
    std::optional<std::uint64_t> sweep_seed;
    sweep->add_option("--config", sweep_cfg, "JSON run configuration")->required();
    sweep->add_option("--out", sweep_out, "CSV output path (overrides the config)");
    sweep->add_option("--seed", sweep_seed, "Override the configured master seed");

    // bench
    auto* bench = app.add_subcommand("bench", "Run the per-frame latency benchmark from a JSON config");
    std::string bench_cfg, bench_out;
    std::optional<std::uint64_t> bench_seed;
    bench->add_option("--config", bench_cfg, "JSON run configuration")->required();
    bench->add_option("--out", bench_out, "CSV output path (overrides the config)");
    bench->add_option("--seed", bench_seed, "Override the configured master seed");

    // plot
    auto* plot = app.add_subcommand("plot", "Emit a gnuplot script from a result CSV");
    std::string plot_csv, plot_fig = "fig3", plot_out, plot_image;
    plot->add_option("--csv", plot_csv, "Result CSV")->required();
    plot->add_option("--figure", plot_fig, "fig3, fig4, fig5 or fig6");
    plot->add_option("--out", plot_out, "Script output path (default: standard output)");
    plot->add_option("--image", plot_image, "Image file the script renders to");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "pnce: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            LfsrSpec spec = gen_taps.empty() ? default_lfsr(gen_degree) : LfsrSpec{gen_degree, gen_taps, gen_state};
            spec.initial_state = gen_state;
            const PnSequence seq = generate_mseq(spec);
            std::ostringstream ss;
            if (gen_format == "json") {
                nlohmann::json j;
                j["degree"] = spec.degree;
                j["taps"] = spec.taps;
                j["state"] = spec.initial_state;
                j["length"] = seq.size();
                std::vector<int> chips;
                for (double c : seq.chips()) {
                    chips.push_back(static_cast<int>(c));
                }
                j["chips"] = chips;
                ss << j.dump() << '\n';
            } else {
                for (double c : seq.chips()) {
                    ss << static_cast<int>(c) << '\n';
                }
            }
            out << ss.str();
        } else if (sim->parsed()) {
            const PnSequence seq = generate_mseq(sim_degree);
            const PilotConfig cfg{seq.size(), sim_cp ? sim_cp : sim_l, sim_nt, sim_nb, sim_l, sim_fs};
            const ChannelSpec chan{sim_l, sim_lnz, sim_nt, sim_nr, derive_seed(sim_seed, {1})};
            const SnrSpec snr{detail::parse_snr(sim_snr), derive_seed(sim_seed, {2})};
            const SimulatedFrame frame = simulate_frame(cfg, chan, snr, seq);
            write_iq(sim_out, to_iq(cfg, frame, sim_seed));
            if (!sim_truth.empty()) {
                detail::write_text(sim_truth, render_cir_csv(frame.truth), out);
            }
            err << "wrote " << frame.batches.size() << " batch frame(s) of " << sim_nr << " x " << cfg.pilot_length()
                << " samples to " << sim_out << '\n';
        } else if (est->parsed()) {
            const IqFile file = read_iq(est_in);
            const int degree = mseq_degree(file.header.m);
            if (degree == 0) {
                fail(ErrorCode::InvalidConfig, "header M is not of the form 2^k - 1");
            }
            const Estimator estimator(generate_mseq(degree), pilot_config(file.header),
                                      detail::backend_from(est_backend, est_chunk, est_acc));
            const auto frames = received_frames(file);
            const CirEstimate cir = estimator.estimate(frames);
            detail::write_text(est_out, render_cir_csv(cir), out);
            if (!est_truth.empty()) {
                const ChannelRealization truth = parse_cir_csv(detail::read_text(est_truth));
                err << "mae " << format_double(mae(truth, cir)) << '\n';
            }
        } else if (sweep->parsed()) {
            RunConfig rc = load_run_config(sweep_cfg);
            if (sweep_seed) {
                rc.experiment.seed = *sweep_seed;
            }
            std::vector<SweepResult> rows;
            switch (rc.experiment.kind) {
            case ExperimentKind::snr: rows = run_snr_sweep(rc.experiment); break;
            case ExperimentKind::taps: rows = run_tap_sweep(rc.experiment); break;
            case ExperimentKind::latency:
                fail(ErrorCode::InvalidConfig, "latency configurations are run with the bench subcommand");
            }
            std::vector<CsvRow> csv;
            for (const auto& r : rows) {
                csv.push_back(to_csv_row(r));
            }
            detail::write_text(sweep_out.empty() ? rc.output : sweep_out, render_csv(csv), out);
            if (!rc.plot_output.empty()) {
                const auto fig = rc.experiment.kind == ExperimentKind::taps ? FigureKind::fig4 : FigureKind::fig3;
                detail::write_text(rc.plot_output, emit_plot_script(csv, fig), out);
            }
        } else if (bench->parsed()) {
            RunConfig rc = load_run_config(bench_cfg);
            if (bench_seed) {
                rc.experiment.seed = *bench_seed;
            }
            const LatencyReport report = run_latency_bench(rc.experiment);
            std::vector<CsvRow> csv;
            for (const auto& p : report.points) {
                csv.push_back(to_csv_row(p, report.seed));
                err << std::left << std::setw(12) << p.backend << " " << p.nt << "x" << p.nr << " M=" << p.m
                    << " N_batch=" << p.n_batch << "  median " << format_double(p.median_s * 1e3, 4) << " ms"
                    << "  mean " << format_double(p.mean_s * 1e3, 4) << " ms"
                    << "  sd " << format_double(p.stddev_s * 1e3, 3) << " ms"
                    << "  airtime " << format_double(p.propagation_s * 1e3, 4) << " ms"
                    << "  samples " << p.samples_moved << '\n';
            }
            detail::write_text(bench_out.empty() ? rc.output : bench_out, render_csv(csv), out);
            if (!rc.plot_output.empty()) {
                const auto fig = rc.experiment.scales.size() > 1 ? FigureKind::fig6 : FigureKind::fig5;
                detail::write_text(rc.plot_output, emit_plot_script(csv, fig), out);
            }
        } else if (plot->parsed()) {
            const auto rows = parse_csv(detail::read_text(plot_csv));
            detail::write_text(plot_out, emit_plot_script(rows, parse_figure(plot_fig), plot_image), out);
        }
    } catch (const Error& e) {
        err << "pnce: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "pnce: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

} // namespace pnce::cli
