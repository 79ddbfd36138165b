#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "dcio/config.hpp"
#include "dcio/mathutil.hpp"

namespace dcio {

/// Pairwise error weights w_pq = Q(d_pq / sqrt(2 N0)) for a point set
/// given as columns (any real dimension).
inline Eigen::MatrixXd pairwise_error_weights(const Eigen::MatrixXd& points, double n0) {
    const int m = static_cast<int>(points.cols());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
    for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q) {
            const double d = (points.col(p) - points.col(q)).norm();
            w(p, q) = w(q, p) = qfunc(d / std::sqrt(2.0 * n0));
        }
    return w;
}

/// Expected weighted bit-error sum over ordered pairs:
/// sum_{p != q} H(b_p, b_q) * Q(d_pq / sqrt(2 N0)).
inline double labeling_cost(const BitLabeling& labels, const Eigen::MatrixXd& weights) {
    const int m = static_cast<int>(weights.rows());
    double cost = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q)
            cost += 2.0 * hamming_distance(labels.word_of[p], labels.word_of[q]) * weights(p, q);
    return cost;
}

inline double labeling_cost(const BitLabeling& labels, const Eigen::MatrixXd& points,
                            double n0_ref) {
    return labeling_cost(labels, pairwise_error_weights(points, n0_ref));
}

/// Reference noise level anchoring the mapper weights where the dominant
/// pairwise error probability is ~1e-3.
inline double labeling_reference_n0(const Eigen::MatrixXd& points) {
    double d_min = std::numeric_limits<double>::infinity();
    for (int p = 0; p < points.cols(); ++p)
        for (int q = p + 1; q < points.cols(); ++q)
            d_min = std::min(d_min, (points.col(p) - points.col(q)).norm());
    const double x = qfunc_inv(1e-3);
    return d_min * d_min / (2.0 * x * x);
}

/// Average bits in error per symbol error under the weight profile at
/// noise level n0: sum H*w / sum w over ordered pairs.
inline double bits_per_symbol_error(const BitLabeling& labels, const Eigen::MatrixXd& points,
                                    double n0) {
    const Eigen::MatrixXd w = pairwise_error_weights(points, n0);
    const int m = static_cast<int>(w.rows());
    double num = 0.0, den = 0.0;
    for (int p = 0; p < m; ++p)
        for (int q = p + 1; q < m; ++q) {
            num += 2.0 * hamming_distance(labels.word_of[p], labels.word_of[q]) * w(p, q);
            den += 2.0 * w(p, q);
        }
    return den > 0.0 ? num / den : 0.0;
}

struct BsaResult {
    BitLabeling labeling;
    double cost = 0.0;
    std::vector<double> cost_trace;  // after each accepted swap, best restart
    int restarts = 0;
};

namespace detail {

// Cost change from swapping the words of columns i and j (ordered-pair sum).
inline double swap_delta(const std::vector<std::uint32_t>& words, const Eigen::MatrixXd& w, int i,
                         int j) {
    const int m = static_cast<int>(words.size());
    double delta = 0.0;
    for (int k = 0; k < m; ++k) {
        if (k == i || k == j) continue;
        const double dh = hamming_distance(words[j], words[k]) -
                          hamming_distance(words[i], words[k]);
        delta += dh * (w(i, k) - w(j, k));
    }
    return 2.0 * delta;
}

struct DescentOutcome {
    std::vector<std::uint32_t> words;
    double cost = 0.0;
    std::vector<double> trace;
};

// Pairwise-swap descent: accept only strictly improving transpositions,
// scanning until a full sweep finds none.
inline DescentOutcome swap_descent(std::vector<std::uint32_t> words, const Eigen::MatrixXd& w) {
    const int m = static_cast<int>(words.size());
    BitLabeling l;
    l.word_of = words;
    DescentOutcome out;
    out.cost = labeling_cost(l, w);
    out.trace.push_back(out.cost);
    bool improved = true;
    while (improved) {
        improved = false;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                const double delta = swap_delta(words, w, i, j);
                if (delta < -1e-15 * std::max(1.0, std::abs(out.cost))) {
                    std::swap(words[i], words[j]);
                    out.cost += delta;
                    out.trace.push_back(out.cost);
                    improved = true;
                }
            }
    }
    out.words = std::move(words);
    // recompute to shed accumulated increments
    BitLabeling fin;
    fin.word_of = out.words;
    out.cost = labeling_cost(fin, w);
    return out;
}

}  // namespace detail

/// Binary switching: pairwise-swap descent on the Q-weighted Hamming cost,
/// from the natural order plus random restarts; returns the best labeling
/// found. The result is swap-local-optimal.
inline BsaResult bsa_optimize(const Eigen::MatrixXd& points, double n0_ref, std::uint64_t seed,
                              int restarts = 5) {
    const int m = static_cast<int>(points.cols());
    const Eigen::MatrixXd w = pairwise_error_weights(points, n0_ref);

    BsaResult best;
    best.restarts = restarts;
    for (int r = 0; r < restarts; ++r) {
        std::vector<std::uint32_t> words(m);
        std::iota(words.begin(), words.end(), 0);
        if (r > 0) {
            std::mt19937_64 rng(derive_seed(seed, r));
            for (int i = m - 1; i > 0; --i) {
                const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
                std::swap(words[i], words[j]);
            }
        }
        auto oc = detail::swap_descent(std::move(words), w);
        if (r == 0 || oc.cost < best.cost) {
            best.cost = oc.cost;
            best.labeling.word_of = oc.words;
            best.cost_trace = oc.trace;
        }
    }
    return best;
}

inline BsaResult bsa_optimize(const JointConstellation& c, double n0_ref, std::uint64_t seed,
                              int restarts = 5) {
    return bsa_optimize(c.points, n0_ref, seed, restarts);
}

}  // namespace dcio
