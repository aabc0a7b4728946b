#pragma once

// Frequency-domain circular correlation, kept independent of the circulant
// matrix path so the two can check each other. Requires linking FFTW3.

#include "pnce/error.hpp"
#include "pnce/pn_core.hpp"

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pnce {

namespace detail {

struct FftwFree
{
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct FftwPlanDestroy
{
    void operator()(fftw_plan p) const noexcept { fftw_destroy_plan(p); }
};

using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

inline FftwBuffer fftw_buffer(std::size_t n)
{
    return FftwBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

inline void dft(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign)
{
    const std::size_t n = in.size();
    auto a = fftw_buffer(n);
    auto b = fftw_buffer(n);
    // FFTW_ESTIMATE planning does not touch the buffers, so fill after planning.
    FftwPlan plan(fftw_plan_dft_1d(static_cast<int>(n), a.get(), b.get(), sign, FFTW_ESTIMATE));
    for (std::size_t i = 0; i < n; ++i) {
        a[i][0] = in[i].real();
        a[i][1] = in[i].imag();
    }
    fftw_execute(plan.get());
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {b[i][0], b[i][1]};
    }
}

} // namespace detail

/// c[tau] = (1/M) sum_i s[(i - tau) mod M] y[i], computed as
/// (1/M) IDFT(conj(DFT(s)) * DFT(y)).
inline std::vector<std::complex<double>> oracle_circular_correlate(std::span<const std::complex<double>> y,
                                                                   const PnSequence& seq)
{
    const std::size_t m = seq.size();
    if (y.size() != m) {
        fail(ErrorCode::LengthMismatch, "received length " + std::to_string(y.size()) + " != sequence length "
                                            + std::to_string(m));
    }
    std::vector<std::complex<double>> s(m), sf(m), yf(m), c(m);
    for (std::size_t i = 0; i < m; ++i) {
        s[i] = seq[i];
    }
    detail::dft(s, sf, FFTW_FORWARD);
    detail::dft(y, yf, FFTW_FORWARD);
    for (std::size_t k = 0; k < m; ++k) {
        yf[k] *= std::conj(sf[k]);
    }
    detail::dft(yf, c, FFTW_BACKWARD);
    // One 1/M undoes the unnormalized inverse transform, the other is the
    // correlation normalization.
    const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(m));
    for (auto& v : c) {
        v *= scale;
    }
    return c;
}

} // namespace pnce
