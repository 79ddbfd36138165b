#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dcio/config.hpp"
#include "dcio/mathutil.hpp"
#include "dcio/transform.hpp"

namespace dcio {

/// DC-biased OFDM reference system: independent QAM on a set of data bins,
/// Hermitian frame, fixed bias.
struct DcoConfig {
    int N = 8;
    std::vector<int> active_bins{1, 2, 3};  // subset of 1..N/2-1
    std::vector<cd> qam_points{cd(1, 1), cd(1, -1), cd(-1, 1), cd(-1, -1)};

    int bits_per_bin() const {
        int m = static_cast<int>(qam_points.size());
        int b = 0;
        while ((1 << b) < m) ++b;
        return b;
    }
    int bits_per_frame() const { return bits_per_bin() * static_cast<int>(active_bins.size()); }

    /// Frequency-domain signal power including mirrors: sum over active
    /// bins of 2 * E|s|^2 (exact for the finite symbol set).
    double signal_power() const {
        double es = 0.0;
        for (const auto& s : qam_points) es += std::norm(s);
        es /= static_cast<double>(qam_points.size());
        return 2.0 * es * static_cast<double>(active_bins.size());
    }

    void check() const {
        if (N <= 0 || N % 2 != 0) throw std::invalid_argument("DcoConfig: N must be positive even");
        if (qam_points.empty()) throw std::invalid_argument("DcoConfig: empty QAM set");
        if ((1u << bits_per_bin()) != qam_points.size())
            throw std::invalid_argument("DcoConfig: QAM size must be a power of two");
        cd mean(0, 0);
        for (const auto& s : qam_points) mean += s;
        if (std::abs(mean) > 1e-9 * qam_points.size())
            throw std::invalid_argument("DcoConfig: QAM set must be zero-mean");
        std::vector<bool> seen(N, false);
        for (int b : active_bins) {
            if (b < 1 || b > N / 2 - 1)
                throw std::invalid_argument("DcoConfig: active bin outside 1..N/2-1");
            if (seen[b]) throw std::invalid_argument("DcoConfig: duplicate active bin");
            seen[b] = true;
        }
    }
};

/// Bias amplitude of a z-dB bias: k*sqrt(mean_power) with z = 10log10(k^2+1).
inline double bias_from_db(double z_db, double mean_power) {
    if (!(z_db > 0.0)) throw std::invalid_argument("bias_from_db: z must be positive");
    if (!(mean_power > 0.0)) throw std::invalid_argument("bias_from_db: mean power must be positive");
    const double k = std::sqrt(std::pow(10.0, z_db / 10.0) - 1.0);
    return k * std::sqrt(mean_power);
}

/// Mean time-domain sample power E{x_n^2} of the unbiased DCO signal,
/// computed analytically from the per-bin symbol powers (unitary transform:
/// frequency sum power / N).
inline double dco_mean_sample_power(const DcoConfig& cfg) {
    return cfg.signal_power() / static_cast<double>(cfg.N);
}

/// Word -> QAM symbol for one bin. The list order defines the labeling;
/// the default list [1+j, 1-j, -1+j, -1-j] indexed by (re_bit, im_bit)
/// is the per-axis Gray map (axis neighbors differ in exactly one bit).
inline cd qam_symbol(const DcoConfig& cfg, std::uint32_t word) {
    return cfg.qam_points[word % cfg.qam_points.size()];
}

/// Spectrum (Eq.-2 layout: DC and Nyquist zero) for one bit pattern.
inline Eigen::VectorXcd dco_spectrum(const std::vector<int>& bits, const DcoConfig& cfg) {
    const int bpb = cfg.bits_per_bin();
    if (static_cast<int>(bits.size()) != cfg.bits_per_frame())
        throw std::invalid_argument("dco_spectrum: bit count mismatch");
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(cfg.N);
    for (std::size_t i = 0; i < cfg.active_bins.size(); ++i) {
        std::uint32_t w = 0;
        for (int b = 0; b < bpb; ++b) w = (w << 1) | static_cast<std::uint32_t>(bits[i * bpb + b]);
        const cd s = qam_symbol(cfg, w);
        x(cfg.active_bins[i]) = s;
        x(cfg.N - cfg.active_bins[i]) = std::conj(s);
    }
    return x;
}

/// DCO frame: Hermitian spectrum plus time-domain bias.
struct DcoFrame {
    Eigen::VectorXcd spectrum;  // without the bias
    Eigen::VectorXd time;       // IDFT + bias
};

inline DcoFrame dco_frame(const std::vector<int>& bits, const DcoConfig& cfg, double bias) {
    DcoFrame f;
    f.spectrum = dco_spectrum(bits, cfg);
    f.time = idft(f.spectrum).real();
    f.time.array() += bias;
    return f;
}

/// Smallest bias making every frame non-negative: max over all symbol
/// combinations of the negative time-domain peak. Enumerates the full
/// |QAM|^bins product (capped at 2^20 combinations).
inline double min_bias_exhaustive(const DcoConfig& cfg) {
    cfg.check();
    const int nbins = static_cast<int>(cfg.active_bins.size());
    if (nbins == 0) return 0.0;
    const std::size_t q = cfg.qam_points.size();
    double combos = 1.0;
    for (int i = 0; i < nbins; ++i) combos *= static_cast<double>(q);
    if (combos > static_cast<double>(1 << 20))
        throw std::invalid_argument("min_bias_exhaustive: combination count over 2^20");

    // per-bin time profiles for each symbol choice
    std::vector<Eigen::MatrixXd> profiles(nbins);  // N x q
    for (int i = 0; i < nbins; ++i) {
        profiles[i].resize(cfg.N, q);
        for (std::size_t s = 0; s < q; ++s)
            for (int n = 1; n <= cfg.N; ++n)
                profiles[i](n - 1, s) = 2.0 * (dft_coeff(n, cfg.active_bins[i], cfg.N) *
                                               cfg.qam_points[s]).real();
    }
    double worst = 0.0;
    std::vector<std::size_t> idx(nbins, 0);
    Eigen::VectorXd acc(cfg.N);
    const auto total = static_cast<std::size_t>(combos);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        acc.setZero();
        for (int i = 0; i < nbins; ++i) {
            acc += profiles[i].col(rem % q);
            rem /= q;
        }
        worst = std::min(worst, acc.minCoeff());
    }
    return -worst;
}

/// Baseline average electrical power: signal power plus the DC term under
/// the active convention (bias^2 for PaperSec4, N*bias^2 for FdSum).
inline double dco_power(const DcoConfig& cfg, double bias,
                        PowerConvention conv = PowerConvention::PaperSec4) {
    const double dc = conv == PowerConvention::PaperSec4
                          ? bias * bias
                          : static_cast<double>(cfg.N) * bias * bias;
    return cfg.signal_power() + dc;
}

}  // namespace dcio
