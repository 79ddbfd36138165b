#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "dcio/config.hpp"

namespace dcio {

using cd = std::complex<double>;

/// Unitary synthesis coefficient w(n,k) = exp(2*pi*j*n*k/N)/sqrt(N).
inline cd dft_coeff(int n, int k, int N) {
    double ang = 2.0 * M_PI * static_cast<double>(n) * static_cast<double>(k) / N;
    return cd(std::cos(ang), std::sin(ang)) / std::sqrt(static_cast<double>(N));
}

/// Linear functional mapping a joint point to time sample n (1-based):
/// sample_row(n)^T c = n-th IFFT output of the joint component.
/// Layout: [1/sqrt(N), 2*Re w(n,1), -2*Im w(n,1), ..., 2*Re w(n,NJ), -2*Im w(n,NJ)].
inline Eigen::VectorXd sample_row(int n, const SystemConfig& cfg) {
    if (n < 1 || n > cfg.N) throw std::invalid_argument("sample_row: n out of range");
    Eigen::VectorXd row(cfg.dims());
    row(0) = 1.0 / std::sqrt(static_cast<double>(cfg.N));
    for (int k = 1; k <= cfg.n_joint; ++k) {
        cd w = dft_coeff(n, k, cfg.N);
        row(2 * k - 1) = 2.0 * w.real();
        row(2 * k) = -2.0 * w.imag();
    }
    return row;
}

/// All N sample rows as a matrix (row n-1 = sample_row(n)).
inline Eigen::MatrixXd sample_rows(const SystemConfig& cfg) {
    Eigen::MatrixXd rows(cfg.N, cfg.dims());
    for (int n = 1; n <= cfg.N; ++n) rows.row(n - 1) = sample_row(n, cfg).transpose();
    return rows;
}

/// Hermitian-symmetric length-N spectrum of a joint point: bin 0 real from
/// c(0), bins 1..NJ from coordinate pairs, mirrors conjugated, rest zero.
inline Eigen::VectorXcd assemble_frequency(const Eigen::VectorXd& c, const SystemConfig& cfg) {
    if (c.size() != cfg.dims()) throw std::invalid_argument("assemble_frequency: bad point size");
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(cfg.N);
    x(0) = cd(c(0), 0.0);
    for (int k = 1; k <= cfg.n_joint; ++k) {
        cd v(c(2 * k - 1), c(2 * k));
        x(k) = v;
        x(cfg.N - k) = std::conj(v);
    }
    return x;
}

/// Unitary inverse DFT, x_n = sum_k w(n,k) X_k for n = 1..N.
/// Direct O(N^2) evaluation; N <= 64 everywhere in this project.
inline Eigen::VectorXcd idft(const Eigen::VectorXcd& spectrum) {
    const int N = static_cast<int>(spectrum.size());
    Eigen::VectorXcd out(N);
    for (int n = 1; n <= N; ++n) {
        cd acc(0.0, 0.0);
        for (int k = 0; k < N; ++k) acc += dft_coeff(n, k, N) * spectrum(k);
        out(n - 1) = acc;
    }
    return out;
}

/// Forward unitary DFT (adjoint of idft).
inline Eigen::VectorXcd dft(const Eigen::VectorXcd& time) {
    const int N = static_cast<int>(time.size());
    Eigen::VectorXcd out(N);
    for (int k = 0; k < N; ++k) {
        cd acc(0.0, 0.0);
        for (int n = 1; n <= N; ++n) acc += std::conj(dft_coeff(n, k, N)) * time(n - 1);
        out(k) = acc;
    }
    return out;
}

/// Real time-domain samples of the joint component of a point.
inline Eigen::VectorXd time_samples(const Eigen::VectorXd& c, const SystemConfig& cfg) {
    Eigen::VectorXcd x = idft(assemble_frequency(c, cfg));
    return x.real();
}

/// One independent (non-joint) subcarrier assignment.
struct IndepSymbol {
    int bin = 0;  // in (NJ, N/2); the mirror is implied
    cd value;
};

/// Spectrum of the independent component alone (joint bins untouched).
/// Throws if a symbol lands on a joint/DC/Nyquist bin or repeats a bin.
inline Eigen::VectorXcd indep_spectrum(const std::vector<IndepSymbol>& symbols,
                                       const SystemConfig& cfg) {
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(cfg.N);
    std::vector<bool> used(cfg.N, false);
    for (const auto& s : symbols) {
        if (s.bin <= cfg.n_joint || s.bin >= cfg.N / 2)
            throw std::invalid_argument("indep_spectrum: bin overlaps joint/DC/Nyquist set");
        if (used[s.bin]) throw std::invalid_argument("indep_spectrum: bin assigned twice");
        used[s.bin] = true;
        x(s.bin) = s.value;
        x(cfg.N - s.bin) = std::conj(s.value);
    }
    return x;
}

/// Time samples of joint point + independent symbols + residual bias B'.
inline Eigen::VectorXd combined_samples(const Eigen::VectorXd& c,
                                        const std::vector<IndepSymbol>& symbols,
                                        double residual_bias, const SystemConfig& cfg) {
    Eigen::VectorXcd spec = assemble_frequency(c, cfg) + indep_spectrum(symbols, cfg);
    Eigen::VectorXd x = idft(spec).real();
    x.array() += residual_bias;
    return x;
}

/// Independent data bins in partial mode: (NJ, N/2) exclusive.
inline std::vector<int> indep_bins(const SystemConfig& cfg) {
    std::vector<int> bins;
    for (int b = cfg.n_joint + 1; b < cfg.N / 2; ++b) bins.push_back(b);
    return bins;
}

/// 4-QAM symbol set scaled to per-bin power p (the default independent
/// constellation in partial mode).
inline std::vector<cd> scaled_qam4(double p) {
    const double a = std::sqrt(p / 2.0);
    return {cd(a, a), cd(a, -a), cd(-a, a), cd(-a, -a)};
}

/// Per-sample worst-case dip of the independent component, minimized over
/// every symbol combination. Exact: for a fixed sample index the per-bin
/// contributions minimize independently.
inline Eigen::VectorXd indep_dip_profile(const SystemConfig& cfg) {
    Eigen::VectorXd dip = Eigen::VectorXd::Zero(cfg.N);
    if (cfg.mode != DesignMode::Partial || cfg.p_indep <= 0.0) return dip;
    const auto qam = scaled_qam4(cfg.p_indep);
    for (int n = 1; n <= cfg.N; ++n) {
        double acc = 0.0;
        for (int b : indep_bins(cfg)) {
            cd w = dft_coeff(n, b, cfg.N);
            double worst = 0.0;
            for (const auto& s : qam) worst = std::min(worst, 2.0 * (w * s).real());
            acc += worst;
        }
        dip(n - 1) = acc;
    }
    return dip;
}

/// Smallest residual bias B' that keeps every combined frame non-negative
/// given a non-negative joint component.
inline double min_residual_bias(const SystemConfig& cfg) {
    const Eigen::VectorXd dip = indep_dip_profile(cfg);
    return std::max(0.0, -dip.minCoeff());
}

}  // namespace dcio
