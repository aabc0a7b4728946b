#pragma once

/// Correlation-based CIR estimation. The received PN body is multiplied by a
/// partial circulant matrix of the pilot sequence and normalized by 1/M.
/// Three arithmetic backends are provided: double and single precision
/// references, and an emulation of half-precision 4x4 tensor-core MMA with
/// chunk-wise normalization.

#include "pnce/binary16.hpp"
#include "pnce/channel_sim.hpp"
#include "pnce/error.hpp"
#include "pnce/pilot_design.hpp"
#include "pnce/pn_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pnce {

enum class BackendKind { reference64, reference32, tensor16 };
enum class Accumulator { binary32, binary16 };

inline constexpr std::size_t kMmaTile = 4;

constexpr std::string_view to_string(BackendKind kind) noexcept
{
    switch (kind) {
    case BackendKind::reference64: return "reference64";
    case BackendKind::reference32: return "reference32";
    case BackendKind::tensor16: return "tensor16";
    }
    return "unknown";
}

inline BackendKind parse_backend(std::string_view name)
{
    for (auto k : {BackendKind::reference64, BackendKind::reference32, BackendKind::tensor16}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    fail(ErrorCode::InvalidConfig, "unknown backend '" + std::string(name) + "'");
}

struct BackendConfig
{
    BackendKind kind = BackendKind::reference64;
    std::size_t tile = kMmaTile;
    /// Columns per partial-normalization chunk; 0 normalizes once after the
    /// complete product. A chunk at least as long as the row behaves like 0.
    std::size_t chunk_length = 256;
    Accumulator accumulator = Accumulator::binary32;

    static BackendConfig reference64() { return {BackendKind::reference64, kMmaTile, 0, Accumulator::binary32}; }
    static BackendConfig reference32() { return {BackendKind::reference32, kMmaTile, 0, Accumulator::binary32}; }
    static BackendConfig tensor16(std::size_t chunk = 256, Accumulator acc = Accumulator::binary32)
    {
        return {BackendKind::tensor16, kMmaTile, chunk, acc};
    }
    static BackendConfig of(BackendKind kind)
    {
        switch (kind) {
        case BackendKind::reference64: return reference64();
        case BackendKind::reference32: return reference32();
        case BackendKind::tensor16: return tensor16();
        }
        return reference64();
    }
};

inline void validate(const BackendConfig& b)
{
    if (b.kind != BackendKind::tensor16) {
        return;
    }
    if (b.tile != kMmaTile) {
        fail(ErrorCode::InvalidConfig, "tensor16 tiles are fixed at 4x4");
    }
    if (b.chunk_length % b.tile != 0) {
        fail(ErrorCode::InvalidConfig, "chunk length " + std::to_string(b.chunk_length)
                                           + " is not a multiple of the tile size");
    }
}

/// Dense real matrix kept in two layouts: row-major, and 4-row panels with
/// the column dimension zero-padded to a multiple of 4. Panel element
/// (panel p, column k, row r) sits at panel(p)[k * 4 + r], which is the
/// operand order of one 4x4 MMA fragment.
class RealMatrix
{
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
        : rows_(rows), cols_(cols), data_(std::move(row_major))
    {
        if (rows_ == 0 || cols_ == 0 || data_.size() != rows_ * cols_) {
            fail(ErrorCode::DimensionMismatch, "matrix data does not match its shape");
        }
        padded_cols_ = round_up(cols_);
        const std::size_t prows = round_up(rows_);
        panel64_.assign(prows * padded_cols_, 0.0);
        panel32_.assign(prows * padded_cols_, 0.0f);
        panel16_.assign(prows * padded_cols_, 0.0f);
        for (std::size_t r = 0; r < rows_; ++r) {
            const std::size_t base = (r / kMmaTile) * padded_cols_ * kMmaTile + r % kMmaTile;
            for (std::size_t k = 0; k < cols_; ++k) {
                const double v = data_[r * cols_ + k];
                panel64_[base + k * kMmaTile] = v;
                panel32_[base + k * kMmaTile] = static_cast<float>(v);
                panel16_[base + k * kMmaTile] = static_cast<float>(quantize_binary16(v));
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t padded_cols() const noexcept { return padded_cols_; }
    std::size_t num_panels() const noexcept { return round_up(rows_) / kMmaTile; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const
    {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    const double* panel64(std::size_t p) const { return panel64_.data() + p * padded_cols_ * kMmaTile; }
    const float* panel32(std::size_t p) const { return panel32_.data() + p * padded_cols_ * kMmaTile; }
    const float* panel16(std::size_t p) const { return panel16_.data() + p * padded_cols_ * kMmaTile; }

    static constexpr std::size_t round_up(std::size_t n) noexcept { return (n + kMmaTile - 1) / kMmaTile * kMmaTile; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t padded_cols_ = 0;
    std::vector<double> data_;
    std::vector<double> panel64_;
    std::vector<float> panel32_;
    std::vector<float> panel16_; // binary16-rounded entries stored as float
};

/// Rows of the circulant form of a PN sequence. The row for lag tau holds
/// s[(i - tau) mod M], so its product with a received body delayed by d
/// peaks at tau = d.
struct CorrelationMatrix
{
    std::size_t pn_length = 0;
    std::vector<std::size_t> lags;
    RealMatrix matrix;
};

inline CorrelationMatrix build_correlation_rows(const PnSequence& seq, std::vector<std::size_t> lags)
{
    const std::size_t m = seq.size();
    if (lags.empty()) {
        fail(ErrorCode::RowsOutOfRange, "at least one correlation row is required");
    }
    std::vector<double> data(lags.size() * m);
    for (std::size_t r = 0; r < lags.size(); ++r) {
        if (lags[r] >= m) {
            fail(ErrorCode::RowsOutOfRange, "lag " + std::to_string(lags[r]) + " outside [0, M)");
        }
        const std::size_t tau = lags[r];
        for (std::size_t i = 0; i < m; ++i) {
            data[r * m + i] = seq[(i + m - tau) % m];
        }
    }
    CorrelationMatrix out;
    out.pn_length = m;
    out.matrix = RealMatrix(lags.size(), m, std::move(data));
    out.lags = std::move(lags);
    return out;
}

/// First `rows` lags (0 .. rows-1) of the circulant.
inline CorrelationMatrix build_partial_circulant(const PnSequence& seq, std::size_t rows)
{
    if (rows < 1 || rows > seq.size()) {
        fail(ErrorCode::RowsOutOfRange, "rows " + std::to_string(rows) + " not in [1, " + std::to_string(seq.size())
                                            + "]");
    }
    std::vector<std::size_t> lags(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        lags[i] = i;
    }
    return build_correlation_rows(seq, std::move(lags));
}

/// Instrumentation from one tensor16 product.
struct MmaStats
{
    double max_abs_intermediate = 0.0; // largest stored chunk partial or running total
    std::size_t chunks = 0;
    bool saturated = false;

    void merge(const MmaStats& o)
    {
        max_abs_intermediate = std::max(max_abs_intermediate, o.max_abs_intermediate);
        chunks += o.chunks;
        saturated = saturated || o.saturated;
    }
};

namespace detail {

inline void reference64_panel(const double* a, std::size_t kpad, const double* yr, const double* yi,
                              double norm, std::array<cplx, kMmaTile>& out)
{
    double re[kMmaTile] = {};
    double im[kMmaTile] = {};
    for (std::size_t k = 0; k < kpad; ++k) {
        const double* col = a + k * kMmaTile;
        for (std::size_t r = 0; r < kMmaTile; ++r) {
            re[r] += col[r] * yr[k];
            im[r] += col[r] * yi[k];
        }
    }
    for (std::size_t r = 0; r < kMmaTile; ++r) {
        out[r] = cplx(re[r] / norm, im[r] / norm);
    }
}

inline void reference32_panel(const float* a, std::size_t kpad, const float* yr, const float* yi, float norm,
                              std::array<cplx, kMmaTile>& out)
{
    float re[kMmaTile] = {};
    float im[kMmaTile] = {};
    for (std::size_t k = 0; k < kpad; ++k) {
        const float* col = a + k * kMmaTile;
        for (std::size_t r = 0; r < kMmaTile; ++r) {
            re[r] += col[r] * yr[k];
            im[r] += col[r] * yi[k];
        }
    }
    for (std::size_t r = 0; r < kMmaTile; ++r) {
        out[r] = cplx(re[r] / norm, im[r] / norm);
    }
}

// One 4-row panel through 4x4 MMA steps. Operands are already binary16
// values held in float, so every product is exact in binary32. Within a
// chunk the two real GEMMs (real and imaginary columns) accumulate at the
// configured precision; each chunk is divided by M and folded into a
// binary32 running total.
template <Accumulator Acc>
void tensor16_panel(const float* a, std::size_t kpad, const float* yr, const float* yi, std::size_t chunk,
                    float norm, std::array<cplx, kMmaTile>& out, MmaStats& stats)
{
    float total_re[kMmaTile] = {};
    float total_im[kMmaTile] = {};
    float max_abs = 0.0f;
    bool finite = true;
    const std::size_t step = (chunk == 0 || chunk > kpad) ? kpad : chunk;
    for (std::size_t k0 = 0; k0 < kpad; k0 += step) {
        const std::size_t k1 = std::min(kpad, k0 + step);
        if constexpr (Acc == Accumulator::binary32) {
            float re[kMmaTile] = {};
            float im[kMmaTile] = {};
            for (std::size_t kt = k0; kt < k1; kt += kMmaTile) {
                for (std::size_t k = kt; k < kt + kMmaTile; ++k) {
                    const float* col = a + k * kMmaTile;
                    for (std::size_t r = 0; r < kMmaTile; ++r) {
                        re[r] += col[r] * yr[k];
                        im[r] += col[r] * yi[k];
                    }
                }
            }
            // binary32 partials stay in the MMA accumulator until the chunk
            // ends; the chunk result is the stored intermediate.
            for (std::size_t r = 0; r < kMmaTile; ++r) {
                max_abs = std::max({max_abs, std::fabs(re[r]), std::fabs(im[r])});
                finite = finite && std::isfinite(re[r]) && std::isfinite(im[r]);
                total_re[r] += re[r] / norm;
                total_im[r] += im[r] / norm;
            }
        } else {
            // binary16 accumulator: every addition is re-rounded to half.
            double re[kMmaTile] = {};
            double im[kMmaTile] = {};
            for (std::size_t kt = k0; kt < k1; kt += kMmaTile) {
                for (std::size_t k = kt; k < kt + kMmaTile; ++k) {
                    const float* col = a + k * kMmaTile;
                    for (std::size_t r = 0; r < kMmaTile; ++r) {
                        re[r] = quantize_binary16(re[r] + double(col[r]) * double(yr[k]));
                        im[r] = quantize_binary16(im[r] + double(col[r]) * double(yi[k]));
                    }
                }
                for (std::size_t r = 0; r < kMmaTile; ++r) {
                    max_abs = std::max({max_abs, float(std::fabs(re[r])), float(std::fabs(im[r]))});
                }
            }
            for (std::size_t r = 0; r < kMmaTile; ++r) {
                finite = finite && std::isfinite(re[r]) && std::isfinite(im[r]);
                total_re[r] += static_cast<float>(re[r]) / norm;
                total_im[r] += static_cast<float>(im[r]) / norm;
            }
        }
        ++stats.chunks;
    }
    for (std::size_t r = 0; r < kMmaTile; ++r) {
        finite = finite && std::isfinite(total_re[r]) && std::isfinite(total_im[r]);
        max_abs = std::max({max_abs, std::fabs(total_re[r]), std::fabs(total_im[r])});
        out[r] = cplx(total_re[r], total_im[r]);
    }
    stats.max_abs_intermediate = std::max(stats.max_abs_intermediate, static_cast<double>(max_abs));
    stats.saturated = stats.saturated || !finite || !std::isfinite(max_abs);
}

} // namespace detail

/// Received samples converted to the operand format of a backend: split
/// real/imaginary planes, zero-padded to the panel column count.
struct StagedInput
{
    std::vector<double> re64, im64;
    std::vector<float> re32, im32;
};

inline void stage_input(std::span<const cplx> y, std::size_t padded, BackendKind kind, StagedInput& s)
{
    if (kind == BackendKind::reference64) {
        s.re64.assign(padded, 0.0);
        s.im64.assign(padded, 0.0);
        for (std::size_t i = 0; i < y.size(); ++i) {
            s.re64[i] = y[i].real();
            s.im64[i] = y[i].imag();
        }
        return;
    }
    s.re32.assign(padded, 0.0f);
    s.im32.assign(padded, 0.0f);
    if (kind == BackendKind::reference32) {
        for (std::size_t i = 0; i < y.size(); ++i) {
            s.re32[i] = static_cast<float>(y[i].real());
            s.im32[i] = static_cast<float>(y[i].imag());
        }
    } else {
        for (std::size_t i = 0; i < y.size(); ++i) {
            s.re32[i] = static_cast<float>(quantize_binary16(y[i].real()));
            s.im32[i] = static_cast<float>(quantize_binary16(y[i].imag()));
        }
    }
}

/// (1 / norm_length) * A * [y_0 .. y_{n-1}] through the selected backend.
/// Each 4-row panel is applied to every column before the next panel is
/// read, so A streams through memory once per call. norm_length defaults to
/// the column count. tensor16 throws SaturationDetected when a stored
/// intermediate is not finite.
inline std::vector<std::vector<cplx>> gemm(const RealMatrix& a, std::span<const std::vector<cplx>> ys,
                                           const BackendConfig& backend, std::size_t norm_length = 0,
                                           MmaStats* stats = nullptr)
{
    validate(backend);
    const std::size_t kpad = a.padded_cols();
    std::vector<StagedInput> staged(ys.size());
    for (std::size_t j = 0; j < ys.size(); ++j) {
        if (ys[j].size() != a.cols()) {
            fail(ErrorCode::DimensionMismatch, "vector length " + std::to_string(ys[j].size())
                                                   + " != matrix columns " + std::to_string(a.cols()));
        }
        stage_input(ys[j], kpad, backend.kind, staged[j]);
    }
    const std::size_t norm = norm_length ? norm_length : a.cols();

    std::vector<std::vector<cplx>> out(ys.size(), std::vector<cplx>(a.rows()));
    std::array<cplx, kMmaTile> tile{};
    MmaStats local;
    for (std::size_t p = 0; p < a.num_panels(); ++p) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
            const StagedInput& s = staged[j];
            switch (backend.kind) {
            case BackendKind::reference64:
                detail::reference64_panel(a.panel64(p), kpad, s.re64.data(), s.im64.data(), double(norm), tile);
                break;
            case BackendKind::reference32:
                detail::reference32_panel(a.panel32(p), kpad, s.re32.data(), s.im32.data(), float(norm), tile);
                break;
            case BackendKind::tensor16:
                if (backend.accumulator == Accumulator::binary32) {
                    detail::tensor16_panel<Accumulator::binary32>(a.panel16(p), kpad, s.re32.data(), s.im32.data(),
                                                                  backend.chunk_length, float(norm), tile, local);
                } else {
                    detail::tensor16_panel<Accumulator::binary16>(a.panel16(p), kpad, s.re32.data(), s.im32.data(),
                                                                  backend.chunk_length, float(norm), tile, local);
                }
                break;
            }
            for (std::size_t r = 0; r < kMmaTile && p * kMmaTile + r < a.rows(); ++r) {
                out[j][p * kMmaTile + r] = tile[r];
            }
        }
    }
    if (stats) {
        stats->merge(local);
    }
    if (local.saturated) {
        fail(ErrorCode::SaturationDetected, "tensor16 intermediate left the binary16/binary32 finite range");
    }
    return out;
}

inline std::vector<cplx> gemv(const RealMatrix& a, std::span<const cplx> y, const BackendConfig& backend,
                              std::size_t norm_length = 0, MmaStats* stats = nullptr)
{
    const std::vector<std::vector<cplx>> column{std::vector<cplx>(y.begin(), y.end())};
    return std::move(gemm(a, column, backend, norm_length, stats).front());
}

/// The emulated tensor-core path specifically; rejects other backends.
inline std::vector<cplx> tiled_mma_gemm(const RealMatrix& a, std::span<const cplx> y, const BackendConfig& backend,
                                        std::size_t norm_length = 0, MmaStats* stats = nullptr)
{
    if (backend.kind != BackendKind::tensor16) {
        fail(ErrorCode::InvalidConfig, "tiled_mma_gemm requires the tensor16 backend");
    }
    return gemv(a, y, backend, norm_length, stats);
}

inline std::vector<cplx> correlate(const CorrelationMatrix& s, std::span<const cplx> y, const BackendConfig& backend,
                                   MmaStats* stats = nullptr)
{
    return gemv(s.matrix, y, backend, s.pn_length, stats);
}

/// Samples C .. C+M-1 of a received frame.
inline std::vector<cplx> remove_cp(std::span<const cplx> frame, std::size_t cp_length, std::size_t pn_length)
{
    if (frame.size() < cp_length + pn_length) {
        fail(ErrorCode::FrameTooShort, "frame has " + std::to_string(frame.size()) + " samples, need C+M="
                                           + std::to_string(cp_length + pn_length));
    }
    return {frame.begin() + static_cast<std::ptrdiff_t>(cp_length),
            frame.begin() + static_cast<std::ptrdiff_t>(cp_length + pn_length)};
}

inline std::vector<cplx> estimate_sequential(std::span<const cplx> y, const PnSequence& seq, std::size_t cir_length,
                                             const BackendConfig& backend, MmaStats* stats = nullptr)
{
    if (y.size() != seq.size()) {
        fail(ErrorCode::DimensionMismatch, "received body length " + std::to_string(y.size()) + " != M");
    }
    return correlate(build_partial_circulant(seq, cir_length), y, backend, stats);
}

/// A pilot advanced by `shift` lands at correlation lag (M - shift) mod M.
inline std::size_t window_start(std::size_t shift, std::size_t pn_length) noexcept
{
    return (pn_length - shift % pn_length) % pn_length;
}

/// Correlation lags covering every member's L-lag window, in member order.
inline std::vector<std::size_t> batch_lags(const BatchEntry& entry, std::size_t pn_length, std::size_t cir_length)
{
    std::vector<std::size_t> lags;
    lags.reserve(entry.members.size() * cir_length);
    for (const auto& m : entry.members) {
        const std::size_t start = window_start(m.shift, pn_length);
        for (std::size_t l = 0; l < cir_length; ++l) {
            lags.push_back((start + l) % pn_length);
        }
    }
    return lags;
}

inline std::map<std::size_t, std::vector<cplx>> estimate_batched(std::span<const cplx> y, const PnSequence& seq,
                                                                 const BatchEntry& entry, std::size_t cir_length,
                                                                 const BackendConfig& backend,
                                                                 MmaStats* stats = nullptr)
{
    if (y.size() != seq.size()) {
        fail(ErrorCode::DimensionMismatch, "received body length " + std::to_string(y.size()) + " != M");
    }
    if (cir_length < 1 || cir_length > seq.size()) {
        fail(ErrorCode::RowsOutOfRange, "CIR length must be in [1, M]");
    }
    check_separation(entry, seq.size(), cir_length);
    const auto corr = correlate(build_correlation_rows(seq, batch_lags(entry, seq.size(), cir_length)), y, backend,
                                stats);
    std::map<std::size_t, std::vector<cplx>> out;
    for (std::size_t i = 0; i < entry.members.size(); ++i) {
        const auto first = corr.begin() + static_cast<std::ptrdiff_t>(i * cir_length);
        out[entry.members[i].transmitter] = std::vector<cplx>(first, first + static_cast<std::ptrdiff_t>(cir_length));
    }
    return out;
}

/// Estimated CIRs for all (receiver, transmitter) pairs of one frame.
class CirEstimate
{
public:
    CirEstimate() = default;
    CirEstimate(std::size_t num_rx, std::size_t num_tx, std::size_t cir_length, BackendKind backend,
                double normalization)
        : num_rx_(num_rx), num_tx_(num_tx), cir_length_(cir_length), backend_(backend),
          normalization_(normalization), taps_(num_rx * num_tx * cir_length)
    {
    }

    std::size_t num_rx() const noexcept { return num_rx_; }
    std::size_t num_tx() const noexcept { return num_tx_; }
    std::size_t cir_length() const noexcept { return cir_length_; }
    BackendKind backend() const noexcept { return backend_; }
    double normalization() const noexcept { return normalization_; }

    std::span<cplx> cir(std::size_t rx, std::size_t tx)
    {
        return std::span<cplx>(taps_).subspan((rx * num_tx_ + tx) * cir_length_, cir_length_);
    }
    std::span<const cplx> cir(std::size_t rx, std::size_t tx) const
    {
        return std::span<const cplx>(taps_).subspan((rx * num_tx_ + tx) * cir_length_, cir_length_);
    }

    friend bool operator==(const CirEstimate&, const CirEstimate&) = default;

private:
    std::size_t num_rx_ = 0;
    std::size_t num_tx_ = 0;
    std::size_t cir_length_ = 0;
    BackendKind backend_ = BackendKind::reference64;
    double normalization_ = 0.0;
    std::vector<cplx> taps_;
};

/// Data volume and arithmetic performed by one frame estimate.
struct WorkCounters
{
    std::size_t samples_moved = 0; // received samples staged for correlation
    std::size_t macs = 0;          // real multiply-accumulates, unpadded

    WorkCounters& operator+=(const WorkCounters& o)
    {
        samples_moved += o.samples_moved;
        macs += o.macs;
        return *this;
    }
};

/// Frame-level estimator. Correlation matrices are built once per distinct
/// batch layout and reused for every receiver and every frame.
class Estimator
{
public:
    Estimator(PnSequence seq, const PilotConfig& cfg, BackendConfig backend)
        : seq_(std::move(seq)), cfg_(cfg), backend_(backend), plan_(build_batch_plan(cfg))
    {
        validate(backend_);
        if (seq_.size() != cfg_.pn_length) {
            fail(ErrorCode::DimensionMismatch, "PN sequence length does not match the pilot configuration");
        }
        for (const auto& entry : plan_.batches) {
            auto lags = batch_lags(entry, cfg_.pn_length, cfg_.cir_length);
            auto it = std::find_if(matrices_.begin(), matrices_.end(),
                                   [&](const CorrelationMatrix& c) { return c.lags == lags; });
            if (it == matrices_.end()) {
                matrices_.push_back(build_correlation_rows(seq_, std::move(lags)));
                it = matrices_.end() - 1;
            }
            matrix_for_batch_.push_back(static_cast<std::size_t>(it - matrices_.begin()));
        }
    }

    const BatchPlan& plan() const noexcept { return plan_; }
    const PilotConfig& config() const noexcept { return cfg_; }
    const BackendConfig& backend() const noexcept { return backend_; }

    /// batches[b][r] is receiver r's frame for batch b of the plan.
    CirEstimate estimate(std::span<const std::vector<ReceivedFrame>> batches, WorkCounters* work = nullptr,
                         MmaStats* stats = nullptr) const
    {
        if (batches.size() != plan_.batches.size()) {
            fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(plan_.batches.size()) + " batches, got "
                                                   + std::to_string(batches.size()));
        }
        const std::size_t num_rx = batches.empty() ? 0 : batches.front().size();
        const std::size_t p = cfg_.pilot_length();
        const std::size_t len = cfg_.cir_length;
        CirEstimate est(num_rx, cfg_.num_tx, len, backend_.kind, 1.0 / static_cast<double>(cfg_.pn_length));
        WorkCounters counted;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            if (batches[b].size() != num_rx) {
                fail(ErrorCode::DimensionMismatch, "batch " + std::to_string(b) + " has a different receiver count");
            }
            const auto& entry = plan_.batches[b];
            const auto& corr = matrices_[matrix_for_batch_[b]];
            std::vector<std::vector<cplx>> bodies(num_rx);
            for (std::size_t r = 0; r < num_rx; ++r) {
                const auto& samples = batches[b][r].samples;
                if (samples.size() < p) {
                    fail(ErrorCode::FrameTooShort, "received frame shorter than the pilot");
                }
                bodies[r] = remove_cp(std::span<const cplx>(samples).first(p), cfg_.cp_length, cfg_.pn_length);
                counted.samples_moved += p;
                counted.macs += 2 * corr.lags.size() * cfg_.pn_length;
            }
            const auto values = gemm(corr.matrix, bodies, backend_, corr.pn_length, stats);
            for (std::size_t r = 0; r < num_rx; ++r) {
                for (std::size_t i = 0; i < entry.members.size(); ++i) {
                    auto dst = est.cir(r, entry.members[i].transmitter);
                    std::copy_n(values[r].begin() + static_cast<std::ptrdiff_t>(i * len), len, dst.begin());
                }
            }
        }
        if (work) {
            *work += counted;
        }
        return est;
    }

private:
    PnSequence seq_;
    PilotConfig cfg_;
    BackendConfig backend_;
    BatchPlan plan_;
    std::vector<CorrelationMatrix> matrices_;
    std::vector<std::size_t> matrix_for_batch_;
};

} // namespace pnce
