#pragma once

#include "pnce/channel_sim.hpp"
#include "pnce/error.hpp"
#include "pnce/estimator.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace pnce {

/// Neumaier-compensated running sum.
class CompensatedSum
{
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Mean absolute error over all lags and antenna pairs, complex modulus.
inline double mae(const ChannelRealization& truth, const CirEstimate& est)
{
    if (truth.num_rx() != est.num_rx() || truth.num_tx() != est.num_tx() || truth.cir_length() != est.cir_length()) {
        fail(ErrorCode::DimensionMismatch, "estimate and ground truth shapes differ");
    }
    CompensatedSum acc;
    for (std::size_t r = 0; r < truth.num_rx(); ++r) {
        for (std::size_t t = 0; t < truth.num_tx(); ++t) {
            const auto h = truth.cir(r, t);
            const auto g = est.cir(r, t);
            for (std::size_t l = 0; l < h.size(); ++l) {
                acc.add(std::abs(g[l] - h[l]));
            }
        }
    }
    const auto n = static_cast<double>(truth.num_rx() * truth.num_tx() * truth.cir_length());
    return n > 0 ? acc.value() / n : 0.0;
}

/// (1/M) sum_l |h[l]|: the largest deviation the -1/M sidelobes of a PN
/// autocorrelation can add to any lag of a noiseless estimate.
inline double sidelobe_bound(std::span<const cplx> cir, std::size_t pn_length)
{
    double s = 0.0;
    for (const auto& v : cir) {
        s += std::abs(v);
    }
    return s / static_cast<double>(pn_length);
}

struct MeanAndError
{
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

inline MeanAndError mean_and_stderr(std::span<const double> xs)
{
    MeanAndError out;
    CompensatedSum s;
    for (double x : xs) {
        if (std::isfinite(x)) {
            s.add(x);
            ++out.count;
        }
    }
    if (out.count == 0) {
        out.mean = std::nan("");
        return out;
    }
    out.mean = s.value() / static_cast<double>(out.count);
    if (out.count > 1) {
        CompensatedSum v;
        for (double x : xs) {
            if (std::isfinite(x)) {
                v.add((x - out.mean) * (x - out.mean));
            }
        }
        const double var = v.value() / static_cast<double>(out.count - 1);
        out.stderr_ = std::sqrt(var / static_cast<double>(out.count));
    }
    return out;
}

} // namespace pnce
