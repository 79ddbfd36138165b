#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcio {

enum class DesignMode { Full, Partial };

/// Accounting rule for the DC contribution to average electrical power.
/// PaperSec4 charges a time-domain bias B as B^2; FdSum charges its
/// frequency-domain equivalent N*B^2. Joint-designed constellations are
/// charged identically under both rules.
enum class PowerConvention { PaperSec4, FdSum };

/// Scenario parameters shared by every module. Immutable once validated.
struct SystemConfig {
    int N = 8;                       // IFFT length, positive even
    int n_joint = 3;                 // subcarriers joint-designed with the DC bin (N_J)
    int M = 64;                      // joint constellation size, 2^n_bits
    int n_bits = 6;                  // bits per joint symbol
    double p_total = 0.0;            // average electrical power budget
    double p_indep = 0.0;            // per-independent-subcarrier power (partial mode)
    DesignMode mode = DesignMode::Full;
    double dynamic_range_max = 0.0;  // optional upper bound on time samples; <=0 means unset
    PowerConvention power_convention = PowerConvention::PaperSec4;

    int dims() const { return 2 * n_joint + 1; }
    /// Number of independent (non-joint) data subcarriers, M_f = N - 2*N_J - 2.
    int n_indep() const { return N - 2 * n_joint - 2; }
    bool has_dynamic_range() const { return dynamic_range_max > 0.0; }
};

/// Checks every config invariant; returns one message per violation.
inline std::vector<std::string> validate(const SystemConfig& c) {
    std::vector<std::string> errs;
    if (c.N <= 0 || c.N % 2 != 0) errs.push_back("N: must be a positive even integer");
    if (c.n_joint < 0) errs.push_back("N_J: must be non-negative");
    if (c.N > 0 && c.n_joint > c.N / 2 - 1) errs.push_back("N_J: exceeds N/2-1");
    if (c.n_bits < 0) errs.push_back("N_b: must be non-negative");
    if (c.M < 1 || (c.M & (c.M - 1)) != 0)
        errs.push_back("M: must be a power of two");
    else if (c.n_bits >= 0 && c.M != (1 << c.n_bits))
        errs.push_back("M: M != 2^N_b");
    if (!(c.p_total > 0.0)) errs.push_back("P_total: must be positive");
    if (c.p_indep < 0.0) errs.push_back("P_indep: must be non-negative");
    const bool full_nj = (c.N > 0) && (c.n_joint == c.N / 2 - 1);
    if (c.mode == DesignMode::Full) {
        if (!full_nj) errs.push_back("mode: full requires N_J = N/2-1");
        if (c.p_indep != 0.0) errs.push_back("P_indep: must be 0 in full mode");
    } else {
        if (full_nj) errs.push_back("mode: partial requires N_J < N/2-1");
        if (c.p_indep == 0.0) errs.push_back("P_indep: must be positive in partial mode");
    }
    return errs;
}

inline bool is_valid(const SystemConfig& c) { return validate(c).empty(); }

/// Joint constellation: column m is one point in R^(2*N_J+1); row 0 holds
/// the adaptive DC values.
struct JointConstellation {
    Eigen::MatrixXd points;      // dims x M
    double achieved_d_min = 0.0;
    double avg_power = 0.0;

    int dims() const { return static_cast<int>(points.rows()); }
    int size() const { return static_cast<int>(points.cols()); }
};

/// Stacks the columns c^(1)..c^(M) into one vector (block per point).
inline Eigen::VectorXd stack(const Eigen::MatrixXd& points) {
    return Eigen::Map<const Eigen::VectorXd>(points.data(), points.size());
}

/// Inverse of stack. Throws on inconsistent sizes.
inline Eigen::MatrixXd unstack(const Eigen::VectorXd& v, int m_points, int dims) {
    if (m_points <= 0 || dims <= 0 || v.size() != static_cast<Eigen::Index>(m_points) * dims)
        throw std::invalid_argument("unstack: size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), dims, m_points);
}

/// Block m (0-based) of a stacked vector; the selection J^(m) as a view.
inline Eigen::VectorXd stacked_block(const Eigen::VectorXd& v, int m, int dims) {
    if (m < 0 || dims <= 0 || static_cast<Eigen::Index>(m + 1) * dims > v.size())
        throw std::invalid_argument("stacked_block: index out of range");
    return v.segment(static_cast<Eigen::Index>(m) * dims, dims);
}

/// Bijection between bit words and constellation columns.
struct BitLabeling {
    std::vector<std::uint32_t> word_of;  // word_of[col] = bit word of column col

    int size() const { return static_cast<int>(word_of.size()); }

    bool is_bijection() const {
        std::vector<bool> seen(word_of.size(), false);
        for (auto w : word_of) {
            if (w >= word_of.size() || seen[w]) return false;
            seen[w] = true;
        }
        return true;
    }

    /// col_of[word] = column carrying that word.
    std::vector<int> inverse() const {
        std::vector<int> col(word_of.size(), -1);
        for (int i = 0; i < size(); ++i) col[word_of[i]] = i;
        return col;
    }

    static BitLabeling natural(int m_points) {
        BitLabeling l;
        l.word_of.resize(m_points);
        std::iota(l.word_of.begin(), l.word_of.end(), 0);
        return l;
    }
};

}  // namespace dcio
