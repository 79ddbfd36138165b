#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcio/channel.hpp"
#include "dcio/config.hpp"
#include "dcio/dco.hpp"
#include "dcio/labeling.hpp"
#include "dcio/mathutil.hpp"
#include "dcio/optimizer.hpp"
#include "dcio/transform.hpp"

namespace dcio {

/// Additive complex Gaussian noise, variance N0 per bin (N0/2 per part).
struct NoiseSpec {
    double n0 = 1.0;
};

struct BerPoint {
    double snr_db = 0.0;
    double ser = 0.0;
    double ber = 0.0;
    long long trials = 0;
    double ci95 = 0.0;  // binomial half-width on the BER estimate
};

/// Everything the receiver needs: the noiseless frequency-domain candidate
/// on the information-carrying bins for each symbol, its bit word, and the
/// transmit-side accounting power that defines the SNR axis.
///
/// Detection runs on the one-sided bin set (DC and k = 1..N/2-1 as used);
/// the conjugate mirrors replicate these bins and are dropped, which keeps
/// the candidate geometry identical to the design-space geometry.
struct DetectionSet {
    Eigen::MatrixXcd candidates;        // bins x M
    std::vector<int> used_bins;         // bin indices, for reference
    std::vector<std::uint32_t> words;   // words[m] = bit word of candidate m
    int n_bits = 0;
    double power = 0.0;                 // average electrical power (active convention)
    std::string scheme;

    int size() const { return static_cast<int>(candidates.cols()); }
};

/// Candidates for a designed joint constellation. With a pre-equalized
/// selective channel the composed per-bin response is alpha, so received
/// candidates are alpha times the flat-channel spectrum of each point.
inline DetectionSet make_joint_detection_set(const JointConstellation& cons,
                                             const BitLabeling& labels, const SystemConfig& cfg,
                                             double alpha = 1.0, double accounting_power = -1.0) {
    DetectionSet set;
    set.scheme = "dcio";
    set.n_bits = cfg.n_bits;
    set.power = accounting_power >= 0.0 ? accounting_power : average_power(cons.points, cfg);
    set.words = labels.word_of;
    for (int k = 0; k <= cfg.n_joint; ++k) set.used_bins.push_back(k);
    set.candidates.resize(cfg.n_joint + 1, cons.size());
    for (int m = 0; m < cons.size(); ++m) {
        Eigen::VectorXcd x = assemble_frequency(cons.points.col(m), cfg);
        set.candidates.col(m) = alpha * x.head(cfg.n_joint + 1);
    }
    return set;
}

/// Candidates for the DCO baseline: the product constellation over its
/// active bins with concatenated per-bin words. power is the accounting
/// power for the SNR axis (signal + bias under the chosen convention).
inline DetectionSet make_dco_detection_set(const DcoConfig& dco, double bias,
                                           PowerConvention conv = PowerConvention::PaperSec4) {
    dco.check();
    const int nbins = static_cast<int>(dco.active_bins.size());
    const int bpb = dco.bits_per_bin();
    const std::size_t q = dco.qam_points.size();
    std::size_t total = 1;
    for (int i = 0; i < nbins; ++i) {
        total *= q;
        if (total > (1u << 20)) throw std::invalid_argument("make_dco_detection_set: too large");
    }
    DetectionSet set;
    set.scheme = "dco";
    set.n_bits = dco.bits_per_frame();
    set.power = dco_power(dco, bias, conv);
    set.used_bins = dco.active_bins;
    set.candidates.resize(nbins, total);
    set.words.resize(total);
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        std::uint32_t word = 0;
        for (int i = 0; i < nbins; ++i) {
            const auto s = static_cast<std::uint32_t>(rem % q);
            rem /= q;
            set.candidates(i, c) = qam_symbol(dco, s);
            word |= s << (i * bpb);
        }
        set.words[c] = word;
    }
    return set;
}

/// Nearest candidate in the frequency-domain metric over the used bins;
/// ties resolve to the lowest index.
inline int ml_detect(const Eigen::VectorXcd& received, const Eigen::MatrixXcd& candidates) {
    int best = 0;
    double best_metric = std::numeric_limits<double>::infinity();
    for (int m = 0; m < candidates.cols(); ++m) {
        const double metric = (received - candidates.col(m)).squaredNorm();
        if (metric < best_metric) {
            best_metric = metric;
            best = m;
        }
    }
    return best;
}

/// Monte-Carlo error rates across an SNR grid (snr_db = 10log10(power/N0)).
/// Trials are split into fixed chunks with per-chunk substreams, so results
/// are reproducible and independent of the worker count.
inline std::vector<BerPoint> run_ber(const DetectionSet& set, const std::vector<double>& snr_db,
                                     long long trials, std::uint64_t seed,
                                     bool parallel = true) {
    if (set.size() < 2) throw std::invalid_argument("run_ber: need at least two candidates");
    const int m_cand = set.size();
    const int bins = static_cast<int>(set.candidates.rows());
    std::vector<BerPoint> out(snr_db.size());

    constexpr int kChunks = 64;
    for (std::size_t pt = 0; pt < snr_db.size(); ++pt) {
        const double n0 = set.power * std::pow(10.0, -snr_db[pt] / 10.0);
        const double sigma = std::sqrt(n0 / 2.0);
        std::vector<long long> sym_err(kChunks, 0), bit_err(kChunks, 0), done(kChunks, 0);

        auto chunk_work = [&](std::size_t ch) {
            const long long lo = trials * static_cast<long long>(ch) / kChunks;
            const long long hi = trials * static_cast<long long>(ch + 1) / kChunks;
            GaussianSource gauss(derive_seed(seed, (pt << 8) | ch));
            Eigen::VectorXcd y(bins);
            for (long long t = lo; t < hi; ++t) {
                const int tx = static_cast<int>(gauss.engine()() % static_cast<std::uint64_t>(m_cand));
                for (int b = 0; b < bins; ++b)
                    y(b) = set.candidates(b, tx) + cd(sigma * gauss(), sigma * gauss());
                const int rx = ml_detect(y, set.candidates);
                if (rx != tx) {
                    ++sym_err[ch];
                    bit_err[ch] += hamming_distance(set.words[rx], set.words[tx]);
                }
                ++done[ch];
            }
        };
        if (parallel)
            parallel_for(kChunks, chunk_work);
        else
            for (int ch = 0; ch < kChunks; ++ch) chunk_work(ch);

        long long se = 0, be = 0, n = 0;
        for (int ch = 0; ch < kChunks; ++ch) {
            se += sym_err[ch];
            be += bit_err[ch];
            n += done[ch];
        }
        BerPoint& bp = out[pt];
        bp.snr_db = snr_db[pt];
        bp.trials = n;
        bp.ser = n > 0 ? static_cast<double>(se) / n : 0.0;
        const auto nbits = static_cast<double>(n) * set.n_bits;
        bp.ber = nbits > 0 ? static_cast<double>(be) / nbits : 0.0;
        bp.ci95 = nbits > 0 ? 1.96 * std::sqrt(std::max(bp.ber * (1.0 - bp.ber), 0.0) / nbits) : 0.0;
    }
    return out;
}

struct SerEstimate {
    double nn_approx = 0.0;     // alpha_nn * Q(sqrt(d_min^2 / 2 N0))
    double union_bound = 0.0;   // (1/M) sum_p sum_{q!=p} Q(d_pq / sqrt(2 N0))
    double alpha_nn = 0.0;      // average number of nearest neighbors
    double d_min = 0.0;
};

/// Pairwise distances of the candidate vectors (physical receiver metric).
inline Eigen::MatrixXd candidate_distances(const Eigen::MatrixXcd& candidates) {
    const int m = static_cast<int>(candidates.cols());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
    for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q)
            d(p, q) = d(q, p) = (candidates.col(p) - candidates.col(q)).norm();
    return d;
}

/// Nearest-neighbor approximation and union bound on the symbol error rate.
inline SerEstimate analytic_ser(const Eigen::MatrixXd& distances, double n0) {
    const int m = static_cast<int>(distances.rows());
    SerEstimate est;
    est.d_min = std::numeric_limits<double>::infinity();
    for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q) est.d_min = std::min(est.d_min, distances(p, q));
    long long nn_pairs = 0;
    double ub = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) {
            if (p == q) continue;
            ub += qfunc(distances(p, q) / std::sqrt(2.0 * n0));
            if (distances(p, q) <= est.d_min * (1.0 + 1e-6)) ++nn_pairs;
        }
    est.union_bound = ub / m;
    est.alpha_nn = static_cast<double>(nn_pairs) / m;
    est.nn_approx = est.alpha_nn * qfunc(est.d_min / std::sqrt(2.0 * n0));
    return est;
}

inline SerEstimate analytic_ser(const DetectionSet& set, double n0) {
    return analytic_ser(candidate_distances(set.candidates), n0);
}

/// Union bound on the bit error rate, with the labeling's Hamming weights:
/// (1/(M Nb)) sum_p sum_{q!=p} H(b_p,b_q) Q(d_pq / sqrt(2 N0)).
inline double analytic_ber_union(const DetectionSet& set, const Eigen::MatrixXd& distances,
                                 double n0) {
    const int m = set.size();
    double acc = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q)
            acc += 2.0 * hamming_distance(set.words[p], set.words[q]) *
                   qfunc(distances(p, q) / std::sqrt(2.0 * n0));
    return acc / (static_cast<double>(m) * set.n_bits);
}

inline double analytic_ber_union(const DetectionSet& set, double n0) {
    return analytic_ber_union(set, candidate_distances(set.candidates), n0);
}

/// N0 at which the analytic BER union bound crosses the target (bisection;
/// the bound is monotone increasing in N0).
inline double n0_at_analytic_ber(const DetectionSet& set, double target_ber) {
    const Eigen::MatrixXd d = candidate_distances(set.candidates);
    double lo = 1e-12, hi = 1e12;
    if (analytic_ber_union(set, d, hi) < target_ber)
        throw std::runtime_error("n0_at_analytic_ber: target above curve range");
    for (int i = 0; i < 400; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (analytic_ber_union(set, d, mid) < target_ber)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

/// SNR (dB) where a measured curve crosses target_ber, by log-linear
/// interpolation. Points must bracket the target.
inline double snr_at_ber(const std::vector<BerPoint>& curve, double target_ber) {
    std::vector<std::pair<double, double>> pts;  // (snr, ber>0)
    for (const auto& p : curve)
        if (p.ber > 0.0) pts.emplace_back(p.snr_db, p.ber);
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double b0 = pts[i].second, b1 = pts[i + 1].second;
        if ((b0 - target_ber) * (b1 - target_ber) <= 0.0 && b0 != b1) {
            const double t = (std::log(target_ber) - std::log(b0)) / (std::log(b1) - std::log(b0));
            return pts[i].first + t * (pts[i + 1].first - pts[i].first);
        }
    }
    throw std::runtime_error("snr_at_ber: target BER not bracketed by the curve");
}

/// SNR gap curve_a - curve_b (dB) at the target error rate.
inline double power_gain_at_ber(const std::vector<BerPoint>& curve_a,
                                const std::vector<BerPoint>& curve_b, double target_ber) {
    return snr_at_ber(curve_a, target_ber) - snr_at_ber(curve_b, target_ber);
}

/// Analytic power gain of set_b over set_a at the target BER, at equal
/// accounting power: 10log10(N0_b / N0_a).
inline double analytic_gain_db(const DetectionSet& set_a, const DetectionSet& set_b,
                               double target_ber) {
    return 10.0 * std::log10(n0_at_analytic_ber(set_b, target_ber) /
                             n0_at_analytic_ber(set_a, target_ber));
}

}  // namespace dcio
