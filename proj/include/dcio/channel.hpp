#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcio/config.hpp"
#include "dcio/transform.hpp"

namespace dcio {

/// Multipath channel as (gain, integer sample delay) taps. An empty tap
/// list or the single tap (1,0) is the flat channel.
struct ChannelSpec {
    struct Path {
        double gain = 1.0;
        int delay = 0;  // samples, >= 0
    };
    std::vector<Path> paths{{1.0, 0}};

    bool is_flat() const {
        return paths.size() == 1 && paths[0].delay == 0;
    }
    static ChannelSpec flat() { return ChannelSpec{}; }
};

/// Frequency response on bin k: z_k = sum_i beta_i exp(-2*pi*j*k*tau_i/N).
inline cd bin_response(const ChannelSpec& spec, int k, int N) {
    if (spec.paths.empty()) throw std::invalid_argument("bin_response: channel has no paths");
    cd z(0.0, 0.0);
    for (const auto& p : spec.paths) {
        double ang = -2.0 * M_PI * static_cast<double>(k) * p.delay / N;
        z += p.gain * cd(std::cos(ang), std::sin(ang));
    }
    return z;
}

/// Per-bin channel multiplication, y_k = z_k * x_k (unit conversion factors).
inline Eigen::VectorXcd apply_channel(const ChannelSpec& spec, const Eigen::VectorXcd& x) {
    const int N = static_cast<int>(x.size());
    Eigen::VectorXcd y(N);
    for (int k = 0; k < N; ++k) y(k) = bin_response(spec, k, N) * x(k);
    return y;
}

/// Block-diagonal pre-equalizer: scalar DC gain f0 = alpha/z_0 and one 2x2
/// real block per joint subcarrier implementing multiplication by alpha/z_k
/// under the (Re, Im) coordinate pairing, so channel o equalizer = alpha
/// on every used bin.
struct Preequalizer {
    double f0 = 1.0;
    std::vector<Eigen::Matrix2d> blocks;  // blocks[k-1] acts on bin k's pair
    double alpha = 1.0;

    /// Full (2*NJ+1)-dimensional block-diagonal matrix.
    Eigen::MatrixXd block_matrix() const {
        const int dims = 1 + 2 * static_cast<int>(blocks.size());
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dims, dims);
        f(0, 0) = f0;
        for (std::size_t k = 0; k < blocks.size(); ++k)
            f.block<2, 2>(1 + 2 * static_cast<int>(k), 1 + 2 * static_cast<int>(k)) = blocks[k];
        return f;
    }

    static Preequalizer identity(int n_joint) {
        Preequalizer p;
        p.blocks.assign(n_joint, Eigen::Matrix2d::Identity());
        return p;
    }
};

/// 2x2 real representation of multiplication by a complex scalar w.
inline Eigen::Matrix2d complex_as_matrix(cd w) {
    Eigen::Matrix2d m;
    m << w.real(), -w.imag(), w.imag(), w.real();
    return m;
}

/// Builds the pre-equalizer for the joint bins 0..NJ. Throws if any used
/// bin has zero response.
inline Preequalizer build_preequalizer(const ChannelSpec& spec, const SystemConfig& cfg,
                                       double alpha = 1.0) {
    Preequalizer p;
    p.alpha = alpha;
    cd z0 = bin_response(spec, 0, cfg.N);
    if (std::abs(z0) < 1e-14)
        throw std::runtime_error("build_preequalizer: channel null on bin 0");
    if (std::abs(z0.imag()) > 1e-12 * std::abs(z0))
        throw std::runtime_error("build_preequalizer: DC response not real");
    p.f0 = alpha / z0.real();
    p.blocks.reserve(cfg.n_joint);
    for (int k = 1; k <= cfg.n_joint; ++k) {
        cd zk = bin_response(spec, k, cfg.N);
        if (std::abs(zk) < 1e-14)
            throw std::runtime_error("build_preequalizer: channel null on bin " + std::to_string(k));
        p.blocks.push_back(complex_as_matrix(alpha / zk));
    }
    return p;
}

}  // namespace dcio
