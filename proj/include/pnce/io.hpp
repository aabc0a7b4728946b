#pragma once

/// File formats: the binary IQ container for received frames, CSV result
/// rows, CIR tap tables, JSON run configurations and gnuplot scripts.

#include "pnce/channel_sim.hpp"
#include "pnce/error.hpp"
#include "pnce/estimator.hpp"
#include "pnce/experiments.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <vector>

namespace pnce {

// ---------------------------------------------------------------------------
// Binary IQ container
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kIqMagic = {'P', 'N', 'C', 'E'};
inline constexpr std::uint16_t kIqVersion = 1;
inline constexpr std::size_t kIqHeaderBytes = 4 + 2 + 8 * 4 + 8;

/// All integers little-endian, no padding, 46 bytes on disk.
struct IqFileHeader
{
    std::array<char, 4> magic = kIqMagic;
    std::uint16_t version = kIqVersion;
    std::uint32_t nt = 0, nr = 0, p = 0, l = 0, m = 0, c = 0, n_batch = 0;
    std::uint32_t frame_count = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const IqFileHeader&, const IqFileHeader&) = default;
};

/// One batch transmission: N_r receivers of P samples each, receiver-major.
struct IqFrame
{
    std::vector<std::complex<float>> samples;

    friend bool operator==(const IqFrame& a, const IqFrame& b)
    {
        // Bitwise comparison so that NaN payloads and signed zeros count.
        return a.samples.size() == b.samples.size()
               && std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(a.samples[0])) == 0;
    }
};

struct IqFile
{
    IqFileHeader header;
    std::vector<IqFrame> frames;
};

inline void check_header(const IqFileHeader& h)
{
    if (h.magic != kIqMagic) {
        fail(ErrorCode::BadMagic, "expected magic PNCE");
    }
    if (h.version != kIqVersion) {
        fail(ErrorCode::VersionMismatch, "unsupported IQ format version " + std::to_string(h.version));
    }
    if (h.p != h.c + h.m) {
        fail(ErrorCode::InvalidConfig, "header P != C + M");
    }
    if (h.nr == 0 || h.p == 0) {
        fail(ErrorCode::InvalidConfig, "header has an empty receiver or sample dimension");
    }
}

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
    }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos)
{
    if (pos + sizeof(T) > in.size()) {
        fail(ErrorCode::TruncatedFile, "file ends at byte " + std::to_string(in.size()) + " inside a field at offset "
                                           + std::to_string(pos));
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
    }
    pos += sizeof(T);
    return static_cast<T>(v);
}

inline void put_f32(std::vector<std::uint8_t>& out, float f)
{
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_le(out, bits);
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t& pos)
{
    const auto bits = get_le<std::uint32_t>(in, pos);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

} // namespace detail

inline std::vector<std::uint8_t> encode_iq(const IqFile& file)
{
    check_header(file.header);
    const auto& h = file.header;
    if (file.frames.size() != h.frame_count) {
        fail(ErrorCode::InvalidConfig, "frame count in header does not match frames supplied");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kIqHeaderBytes + std::size_t{h.frame_count} * h.nr * h.p * 8);
    out.insert(out.end(), h.magic.begin(), h.magic.end());
    detail::put_le(out, h.version);
    for (auto v : {h.nt, h.nr, h.p, h.l, h.m, h.c, h.n_batch, h.frame_count}) {
        detail::put_le(out, v);
    }
    detail::put_le(out, h.seed);
    for (const auto& f : file.frames) {
        if (f.samples.size() != std::size_t{h.nr} * h.p) {
            fail(ErrorCode::InvalidConfig, "frame holds " + std::to_string(f.samples.size()) + " samples, expected N_r*P");
        }
        for (const auto& s : f.samples) {
            detail::put_f32(out, s.real());
            detail::put_f32(out, s.imag());
        }
    }
    return out;
}

inline IqFile decode_iq(std::span<const std::uint8_t> bytes)
{
    IqFile file;
    auto& h = file.header;
    if (bytes.size() < 4) {
        fail(ErrorCode::TruncatedFile, "file ends at byte " + std::to_string(bytes.size()) + " inside the magic");
    }
    std::copy_n(bytes.begin(), 4, h.magic.begin());
    if (h.magic != kIqMagic) {
        fail(ErrorCode::BadMagic, "expected magic PNCE");
    }
    std::size_t pos = 4;
    h.version = detail::get_le<std::uint16_t>(bytes, pos);
    if (h.version != kIqVersion) {
        fail(ErrorCode::VersionMismatch, "unsupported IQ format version " + std::to_string(h.version));
    }
    for (auto* field : {&h.nt, &h.nr, &h.p, &h.l, &h.m, &h.c, &h.n_batch, &h.frame_count}) {
        *field = detail::get_le<std::uint32_t>(bytes, pos);
    }
    h.seed = detail::get_le<std::uint64_t>(bytes, pos);
    check_header(h);
    const std::size_t per_frame = std::size_t{h.nr} * h.p;
    const std::size_t expected = kIqHeaderBytes + std::size_t{h.frame_count} * per_frame * 8;
    if (bytes.size() < expected) {
        const std::size_t sample_bytes = bytes.size() - kIqHeaderBytes;
        fail(ErrorCode::TruncatedFile, "file is " + std::to_string(bytes.size()) + " bytes, expected "
                                           + std::to_string(expected) + "; sample data stops at byte offset "
                                           + std::to_string(kIqHeaderBytes + sample_bytes / 8 * 8)
                                           + (sample_bytes % 8 ? " mid-sample" : ""));
    }
    if (bytes.size() > expected) {
        fail(ErrorCode::InvalidConfig, "trailing bytes after the last frame");
    }
    file.frames.resize(h.frame_count);
    for (auto& f : file.frames) {
        f.samples.resize(per_frame);
        for (auto& s : f.samples) {
            const float re = detail::get_f32(bytes, pos);
            const float im = detail::get_f32(bytes, pos);
            s = {re, im};
        }
    }
    return file;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoError, "write to '" + path.string() + "' failed");
    }
}

inline void write_iq(const std::filesystem::path& path, const IqFile& file) { write_bytes(path, encode_iq(file)); }
inline IqFile read_iq(const std::filesystem::path& path) { return decode_iq(read_bytes(path)); }

/// Packs the first P samples of every received frame (the convolution tail
/// is dropped) into the IQ container, one IqFrame per batch.
inline IqFile to_iq(const PilotConfig& cfg, const SimulatedFrame& sim, std::uint64_t seed)
{
    IqFile file;
    auto& h = file.header;
    h.nt = static_cast<std::uint32_t>(cfg.num_tx);
    h.nr = static_cast<std::uint32_t>(sim.truth.num_rx());
    h.p = static_cast<std::uint32_t>(cfg.pilot_length());
    h.l = static_cast<std::uint32_t>(cfg.cir_length);
    h.m = static_cast<std::uint32_t>(cfg.pn_length);
    h.c = static_cast<std::uint32_t>(cfg.cp_length);
    h.n_batch = static_cast<std::uint32_t>(cfg.batch_size);
    h.frame_count = static_cast<std::uint32_t>(sim.batches.size());
    h.seed = seed;
    for (const auto& batch : sim.batches) {
        IqFrame f;
        f.samples.reserve(std::size_t{h.nr} * h.p);
        for (const auto& rx : batch) {
            for (std::size_t n = 0; n < h.p; ++n) {
                f.samples.emplace_back(static_cast<float>(rx.samples[n].real()),
                                       static_cast<float>(rx.samples[n].imag()));
            }
        }
        file.frames.push_back(std::move(f));
    }
    return file;
}

inline PilotConfig pilot_config(const IqFileHeader& h, double sample_rate = 1.0)
{
    return PilotConfig{h.m, h.c, h.nt, h.n_batch, h.l, sample_rate};
}

/// Received frames in the layout Estimator::estimate expects.
inline std::vector<std::vector<ReceivedFrame>> received_frames(const IqFile& file)
{
    const auto& h = file.header;
    std::vector<std::vector<ReceivedFrame>> out(file.frames.size());
    for (std::size_t b = 0; b < file.frames.size(); ++b) {
        out[b].resize(h.nr);
        for (std::size_t r = 0; r < h.nr; ++r) {
            auto& rf = out[b][r];
            rf.batch_index = b;
            rf.receiver = r;
            rf.samples.resize(h.p);
            for (std::size_t n = 0; n < h.p; ++n) {
                const auto s = file.frames[b].samples[r * h.p + n];
                rf.samples[n] = {s.real(), s.imag()};
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string format_double(double v, int precision = 9)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = precision > 0 ? std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general,
                                                   precision)
                                   : std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s)
{
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        fail(ErrorCode::SchemaMismatch, "not a number: '" + std::string(s) + "'");
    }
    return v;
}

template <typename T>
T parse_uint(std::string_view s)
{
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        fail(ErrorCode::SchemaMismatch, "not an unsigned integer: '" + std::string(s) + "'");
    }
    return v;
}

inline constexpr std::string_view kCsvHeader =
    "experiment,backend,nt,nr,m,c,l,l_nz,n_batch,snr_db,iterations,seed,mae,latency_s,samples_moved,macs,saturations";

struct CsvRow
{
    std::string experiment;
    std::string backend;
    std::uint64_t nt = 0, nr = 0, m = 0, c = 0, l = 0, l_nz = 0, n_batch = 0;
    double snr_db = 0.0;
    std::uint64_t iterations = 0;
    std::uint64_t seed = 0;
    double mae = 0.0;
    double latency_s = 0.0;
    std::uint64_t samples_moved = 0, macs = 0, saturations = 0;

    friend bool operator==(const CsvRow& a, const CsvRow& b)
    {
        auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
        return std::tie(a.experiment, a.backend, a.nt, a.nr, a.m, a.c, a.l, a.l_nz, a.n_batch, a.iterations, a.seed,
                        a.samples_moved, a.macs, a.saturations)
                   == std::tie(b.experiment, b.backend, b.nt, b.nr, b.m, b.c, b.l, b.l_nz, b.n_batch, b.iterations,
                               b.seed, b.samples_moved, b.macs, b.saturations)
               && same(a.snr_db, b.snr_db) && same(a.mae, b.mae) && same(a.latency_s, b.latency_s);
    }
};

/// The value a 9-digit rendering parses back to. Rows hold canonical
/// values so that parse(render(row)) == row.
inline double canonical(double v) { return parse_double(format_double(v)); }

inline CsvRow to_csv_row(const SweepResult& r)
{
    return {r.experiment, r.backend, r.nt, r.nr, r.m, r.c, r.l, r.l_nz, r.n_batch, canonical(r.snr_db),
            r.iterations, r.seed, canonical(r.mae), canonical(r.latency_s), r.samples_moved, r.macs, r.saturations};
}

inline CsvRow to_csv_row(const LatencyPoint& p, std::uint64_t seed)
{
    return {"latency", p.backend, p.nt, p.nr, p.m, p.c, p.l, p.l_nz, p.n_batch,
            std::numeric_limits<double>::quiet_NaN(), p.repetitions, seed, std::numeric_limits<double>::quiet_NaN(),
            canonical(p.mean_s), p.samples_moved, p.macs, 0};
}

inline std::string render_csv_row(const CsvRow& r)
{
    std::string s;
    s += r.experiment + ',' + r.backend;
    for (auto v : {r.nt, r.nr, r.m, r.c, r.l, r.l_nz, r.n_batch}) {
        s += ',' + std::to_string(v);
    }
    s += ',' + format_double(r.snr_db);
    s += ',' + std::to_string(r.iterations) + ',' + std::to_string(r.seed);
    s += ',' + format_double(r.mae) + ',' + format_double(r.latency_s);
    for (auto v : {r.samples_moved, r.macs, r.saturations}) {
        s += ',' + std::to_string(v);
    }
    return s;
}

inline std::string render_csv(std::span<const CsvRow> rows)
{
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += render_csv_row(r);
        out += '\n';
    }
    return out;
}

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

inline std::vector<std::string_view> lines_of(std::string_view text)
{
    std::vector<std::string_view> out;
    for (auto line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (!line.empty()) {
            out.push_back(line);
        }
    }
    return out;
}

inline CsvRow parse_csv_row(std::string_view line)
{
    const auto f = split(line, ',');
    if (f.size() != 17) {
        fail(ErrorCode::SchemaMismatch, "expected 17 columns, got " + std::to_string(f.size()));
    }
    CsvRow r;
    r.experiment = std::string(f[0]);
    r.backend = std::string(f[1]);
    r.nt = parse_uint<std::uint64_t>(f[2]);
    r.nr = parse_uint<std::uint64_t>(f[3]);
    r.m = parse_uint<std::uint64_t>(f[4]);
    r.c = parse_uint<std::uint64_t>(f[5]);
    r.l = parse_uint<std::uint64_t>(f[6]);
    r.l_nz = parse_uint<std::uint64_t>(f[7]);
    r.n_batch = parse_uint<std::uint64_t>(f[8]);
    r.snr_db = parse_double(f[9]);
    r.iterations = parse_uint<std::uint64_t>(f[10]);
    r.seed = parse_uint<std::uint64_t>(f[11]);
    r.mae = parse_double(f[12]);
    r.latency_s = parse_double(f[13]);
    r.samples_moved = parse_uint<std::uint64_t>(f[14]);
    r.macs = parse_uint<std::uint64_t>(f[15]);
    r.saturations = parse_uint<std::uint64_t>(f[16]);
    return r;
}

inline std::vector<CsvRow> parse_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kCsvHeader) {
        fail(ErrorCode::SchemaMismatch, "missing or unexpected CSV header");
    }
    std::vector<CsvRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        rows.push_back(parse_csv_row(lines[i]));
    }
    return rows;
}

// CIR tables: one row per (rx, tx, lag), shortest round-trip decimal.
inline constexpr std::string_view kCirHeader = "rx,tx,lag,re,im";

template <typename Cirs>
std::string render_cir_csv(const Cirs& cirs)
{
    std::string out(kCirHeader);
    out += '\n';
    for (std::size_t r = 0; r < cirs.num_rx(); ++r) {
        for (std::size_t t = 0; t < cirs.num_tx(); ++t) {
            const auto h = cirs.cir(r, t);
            for (std::size_t l = 0; l < h.size(); ++l) {
                out += std::to_string(r) + ',' + std::to_string(t) + ',' + std::to_string(l) + ','
                       + format_double(h[l].real(), 0) + ',' + format_double(h[l].imag(), 0) + '\n';
            }
        }
    }
    return out;
}

inline ChannelRealization parse_cir_csv(std::string_view text)
{
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kCirHeader) {
        fail(ErrorCode::SchemaMismatch, "missing or unexpected CIR table header");
    }
    struct Entry
    {
        std::size_t r, t, l;
        cplx v;
    };
    std::vector<Entry> entries;
    std::size_t nr = 0, nt = 0, nl = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        if (f.size() != 5) {
            fail(ErrorCode::SchemaMismatch, "CIR row " + std::to_string(i) + " does not have 5 columns");
        }
        Entry e{parse_uint<std::size_t>(f[0]), parse_uint<std::size_t>(f[1]), parse_uint<std::size_t>(f[2]),
                {parse_double(f[3]), parse_double(f[4])}};
        nr = std::max(nr, e.r + 1);
        nt = std::max(nt, e.t + 1);
        nl = std::max(nl, e.l + 1);
        entries.push_back(e);
    }
    if (entries.size() != nr * nt * nl) {
        fail(ErrorCode::SchemaMismatch, "CIR table is not a complete rx x tx x lag grid");
    }
    ChannelRealization h(nr, nt, nl);
    for (const auto& e : entries) {
        h.cir(e.r, e.t)[e.l] = e.v;
    }
    return h;
}

// ---------------------------------------------------------------------------
// JSON run configuration
// ---------------------------------------------------------------------------

struct RunConfig
{
    ExperimentConfig experiment;
    std::string output;      // CSV destination, empty for standard output
    std::string plot_output; // optional gnuplot script destination
};

inline RunConfig parse_run_config(std::string_view text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        fail(ErrorCode::InvalidConfig, "configuration must be a JSON object");
    }
    static const std::set<std::string> known = {
        "experiment", "nt",         "nr",          "scales",     "pn_lengths",  "cp_length", "cir_length",
        "l_nz",       "n_batch",    "snr_db",      "iterations", "seed",        "backends",  "chunk_length",
        "accumulator", "sample_rate", "threads",   "repetitions", "warmup",     "output",    "plot_output"};
    for (const auto& [key, _] : doc.items()) {
        if (!known.contains(key)) {
            fail(ErrorCode::InvalidConfig, "unknown configuration key '" + key + "'");
        }
    }
    RunConfig rc;
    auto& e = rc.experiment;
    try {
        if (doc.contains("experiment")) {
            const auto kind = doc.at("experiment").get<std::string>();
            if (kind == "snr") e.kind = ExperimentKind::snr;
            else if (kind == "taps") e.kind = ExperimentKind::taps;
            else if (kind == "latency") e.kind = ExperimentKind::latency;
            else fail(ErrorCode::InvalidConfig, "experiment must be snr, taps or latency");
        }
        if (doc.contains("scales")) {
            if (doc.contains("nt") || doc.contains("nr")) {
                fail(ErrorCode::InvalidConfig, "give either scales or nt/nr, not both");
            }
            e.scales.clear();
            for (const auto& s : doc.at("scales")) {
                const auto pair = s.get<std::vector<std::size_t>>();
                if (pair.size() != 2) {
                    fail(ErrorCode::InvalidConfig, "each scale is [nt, nr]");
                }
                e.scales.push_back({pair[0], pair[1]});
            }
        } else if (doc.contains("nt") || doc.contains("nr")) {
            e.scales = {{doc.value("nt", std::size_t{16}), doc.value("nr", std::size_t{16})}};
        }
        auto read_list = [&](const char* key, auto& dst) {
            if (doc.contains(key)) {
                dst = doc.at(key).get<std::decay_t<decltype(dst)>>();
            }
        };
        read_list("pn_lengths", e.pn_lengths);
        read_list("l_nz", e.nonzero_taps);
        read_list("n_batch", e.batch_sizes);
        read_list("snr_db", e.snr_db);
        e.cp_length = doc.value("cp_length", e.cp_length);
        e.cir_length = doc.value("cir_length", e.cir_length);
        e.iterations = doc.value("iterations", e.iterations);
        e.seed = doc.value("seed", e.seed);
        e.sample_rate = doc.value("sample_rate", e.sample_rate);
        e.threads = doc.value("threads", e.threads);
        e.repetitions = doc.value("repetitions", e.repetitions);
        e.warmup = doc.value("warmup", e.warmup);
        const std::size_t chunk = doc.value("chunk_length", std::size_t{256});
        Accumulator acc = Accumulator::binary32;
        if (doc.contains("accumulator")) {
            const auto a = doc.at("accumulator").get<std::string>();
            if (a == "binary16") acc = Accumulator::binary16;
            else if (a != "binary32") fail(ErrorCode::InvalidConfig, "accumulator must be binary32 or binary16");
        }
        if (doc.contains("backends")) {
            e.backends.clear();
            for (const auto& name : doc.at("backends").get<std::vector<std::string>>()) {
                const auto kind = parse_backend(name);
                e.backends.push_back(kind == BackendKind::tensor16 ? BackendConfig::tensor16(chunk, acc)
                                                                   : BackendConfig::of(kind));
            }
        } else {
            e.backends = {BackendConfig::tensor16(chunk, acc)};
        }
        rc.output = doc.value("output", std::string{});
        rc.plot_output = doc.value("plot_output", std::string{});
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::InvalidConfig, std::string("bad configuration value: ") + ex.what());
    }
    validate(e);
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open configuration '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

// ---------------------------------------------------------------------------
// gnuplot scripts
// ---------------------------------------------------------------------------

enum class FigureKind { fig3, fig4, fig5, fig6 };

inline FigureKind parse_figure(std::string_view s)
{
    if (s == "fig3") return FigureKind::fig3;
    if (s == "fig4") return FigureKind::fig4;
    if (s == "fig5") return FigureKind::fig5;
    if (s == "fig6") return FigureKind::fig6;
    fail(ErrorCode::InvalidConfig, "figure kind must be fig3, fig4, fig5 or fig6");
}

/// Self-contained gnuplot script with inline data blocks.
/// fig3: MAE vs SNR per (M, N_batch); fig4: MAE vs SNR per L_nz;
/// fig5: latency vs N_batch per M; fig6: latency vs N_batch per array size.
inline std::string emit_plot_script(std::span<const CsvRow> rows, FigureKind kind, std::string_view image = "")
{
    const bool mae_plot = kind == FigureKind::fig3 || kind == FigureKind::fig4;
    std::set<std::string> backends;
    for (const auto& r : rows) {
        backends.insert(r.backend);
    }
    const bool tag_backend = backends.size() > 1;

    // Ordered curve key -> (x, y) points.
    std::map<std::tuple<std::string, std::uint64_t, std::uint64_t>, std::vector<std::pair<double, double>>> curves;
    for (const auto& r : rows) {
        const bool latency_row = r.experiment == "latency";
        if (mae_plot == latency_row) {
            continue;
        }
        std::tuple<std::string, std::uint64_t, std::uint64_t> key;
        switch (kind) {
        case FigureKind::fig3: key = {r.backend, r.m, r.n_batch}; break;
        case FigureKind::fig4: key = {r.backend, r.l_nz, 0}; break;
        case FigureKind::fig5: key = {r.backend, r.m, 0}; break;
        case FigureKind::fig6: key = {r.backend, r.nt, r.nr}; break;
        }
        const double x = mae_plot ? r.snr_db : static_cast<double>(r.n_batch);
        const double y = mae_plot ? r.mae : r.latency_s;
        curves[key].emplace_back(x, y);
    }

    std::string s = "# gnuplot script\n";
    s += "set terminal pngcairo size 800,600\n";
    s += "set output '" + std::string(image.empty() ? "figure.png" : image) + "'\n";
    s += "set grid\nset key outside right\n";
    if (mae_plot) {
        s += "set logscale y\nset xlabel 'SNR (dB)'\nset ylabel 'MAE'\n";
    } else {
        s += "set xlabel 'N_batch'\nset ylabel 'Processing latency per frame (s)'\n";
    }
    std::vector<std::string> plots;
    std::size_t idx = 0;
    for (auto& [key, pts] : curves) {
        std::sort(pts.begin(), pts.end());
        const auto& [backend, a, b] = key;
        std::string title;
        switch (kind) {
        case FigureKind::fig3: title = "M=" + std::to_string(a) + ", N_batch=" + std::to_string(b); break;
        case FigureKind::fig4: title = "L_nz=" + std::to_string(a); break;
        case FigureKind::fig5: title = "M=" + std::to_string(a); break;
        case FigureKind::fig6: title = std::to_string(a) + "x" + std::to_string(b); break;
        }
        if (tag_backend) {
            title += " (" + backend + ")";
        }
        const std::string block = "$curve" + std::to_string(idx++);
        s += block + " << EOD\n";
        for (const auto& [x, y] : pts) {
            s += format_double(x) + ' ' + format_double(y) + '\n';
        }
        s += "EOD\n";
        plots.push_back(block + " using 1:2 with linespoints title '" + title + "'");
    }
    if (!plots.empty()) {
        s += "plot ";
        for (std::size_t i = 0; i < plots.size(); ++i) {
            s += (i ? ", \\\n     " : "") + plots[i];
        }
        s += '\n';
    }
    return s;
}

} // namespace pnce
