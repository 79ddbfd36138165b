#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dcio/channel.hpp"
#include "dcio/config.hpp"
#include "dcio/mathutil.hpp"
#include "dcio/solver.hpp"
#include "dcio/transform.hpp"

namespace dcio {

/// ||c^(p) - c^(q)||^2 read directly off the stacked vector (0-based p < q).
inline double pairwise_distance(const Eigen::VectorXd& v, int m_points, int dims, int p, int q) {
    if (p < 0 || q <= p || q >= m_points) throw std::invalid_argument("pairwise_distance: bad pair");
    return (stacked_block(v, p, dims) - stacked_block(v, q, dims)).squaredNorm();
}

/// Supporting hyperplane of the pairwise squared distance at v0, as a
/// subproblem row: a^T c - s >= rhs with a = 2 E_pq v0 (sparse over blocks
/// p and q) and rhs = v0^T E_pq v0. eval_affine(row, c) equals the
/// linearization L(c) = 2 v0^T E_pq c - v0^T E_pq v0.
inline AffineRow linearize_distance(const Eigen::VectorXd& v0, int m_points, int dims, int p,
                                    int q) {
    if (p < 0 || q <= p || q >= m_points) throw std::invalid_argument("linearize_distance: bad pair");
    Eigen::VectorXd diff = stacked_block(v0, p, dims) - stacked_block(v0, q, dims);
    AffineRow row;
    row.involves_s = true;
    row.rhs = diff.squaredNorm();
    row.coeffs.reserve(2 * dims);
    for (int i = 0; i < dims; ++i) row.coeffs.emplace_back(p * dims + i, 2.0 * diff(i));
    for (int i = 0; i < dims; ++i) row.coeffs.emplace_back(q * dims + i, -2.0 * diff(i));
    return row;
}

/// a^T c - rhs for a sparse row (ignores the s term).
inline double eval_affine(const AffineRow& row, const Eigen::VectorXd& c) {
    double v = -row.rhs;
    for (const auto& [j, coef] : row.coeffs) v += coef * c(j);
    return v;
}

/// Per-coordinate power weights of one joint point: the DC coordinate
/// counts once, every subcarrier coordinate twice (conjugate mirror bin).
inline Eigen::VectorXd power_weights(int dims) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(dims, 2.0);
    w(0) = 1.0;
    return w;
}

/// Average electrical power of a joint constellation plus the independent
/// subcarrier budget: (1/M) sum_m [c1^2 + 2 sum_k (c_2k^2 + c_2k+1^2)]
/// + M_f * P_indep. Joint points are charged identically under both
/// power conventions.
inline double average_power(const Eigen::MatrixXd& points, const SystemConfig& cfg) {
    const Eigen::VectorXd w = power_weights(static_cast<int>(points.rows()));
    double acc = 0.0;
    for (Eigen::Index m = 0; m < points.cols(); ++m)
        acc += points.col(m).cwiseProduct(w).dot(points.col(m));
    acc /= static_cast<double>(points.cols());
    return acc + cfg.n_indep() * cfg.p_indep;
}

inline double average_power(const Eigen::VectorXd& stacked, int m_points, int dims,
                            const SystemConfig& cfg) {
    return average_power(unstack(stacked, m_points, dims), cfg);
}

/// Dense PSD matrix of the joint-power quadratic form on the stacked vector,
/// with the pre-equalizer folded in: blkdiag of M copies of F^T diag(w) F / M.
inline Eigen::MatrixXd power_quad_matrix(int m_points, const Eigen::MatrixXd& f_block) {
    const int dims = static_cast<int>(f_block.rows());
    const Eigen::VectorXd w = power_weights(dims);
    Eigen::MatrixXd block =
        f_block.transpose() * w.asDiagonal() * f_block / static_cast<double>(m_points);
    block = 0.5 * (block + block.transpose());  // kill asymmetry from roundoff
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m_points * dims, m_points * dims);
    for (int m = 0; m < m_points; ++m) q.block(m * dims, m * dims, dims, dims) = block;
    return q;
}

/// Minimum pairwise Euclidean distance between constellation columns.
inline double min_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < points.cols(); ++p)
        for (Eigen::Index q = p + 1; q < points.cols(); ++q)
            best = std::min(best, (points.col(p) - points.col(q)).norm());
    return best;
}

struct DesignOptions {
    int restarts = 1;
    std::uint64_t seed = 0;
    int max_iters = 50;          // SCP iterations per restart
    double tol_rel = 1e-5;       // relative d_min improvement stop
    double solver_tol = 1e-7;    // subproblem optimality gap
    int solver_max_iter = 60;    // interior-point iteration budget per subproblem
    double alpha = 1.0;          // pre-equalizer output gain
    bool parallel = true;
};

struct DesignResult {
    JointConstellation constellation;
    double d_min = 0.0;
    int iterations = 0;
    int restarts_used = 0;
    bool feasible = false;
    bool degenerate = false;
    int best_restart = -1;
    std::vector<double> d_min_trace;                 // best restart, per SCP iteration
    std::vector<std::vector<double>> restart_traces; // one trace per restart
    std::string message;
};

constexpr double kFeasEps = 1e-7;

namespace detail {

struct FixedConstraints {
    Eigen::MatrixXd sample_rows_eq;  // N x dims, rows phi_n^T F
    std::vector<AffineRow> rows;     // non-negativity (+ dynamic range)
    Eigen::MatrixXd quad;            // power form with F folded in
    double budget = 0.0;             // joint power budget
    double dc_gain = 0.0;            // effect of a unit DC shift on every sample row
};

inline FixedConstraints build_fixed(const SystemConfig& cfg, const Eigen::MatrixXd& f_block,
                                    double p_joint) {
    FixedConstraints fc;
    const int dims = cfg.dims();
    fc.sample_rows_eq = sample_rows(cfg) * f_block;
    fc.quad = power_quad_matrix(cfg.M, f_block);
    fc.budget = p_joint;
    fc.dc_gain = fc.sample_rows_eq(0, 0);  // same for every n: f0 / sqrt(N)
    fc.rows.reserve(static_cast<std::size_t>(cfg.N) * cfg.M *
                    (cfg.has_dynamic_range() ? 2 : 1));
    for (int m = 0; m < cfg.M; ++m) {
        for (int n = 0; n < cfg.N; ++n) {
            AffineRow row;
            row.coeffs.reserve(dims);
            for (int i = 0; i < dims; ++i)
                row.coeffs.emplace_back(m * dims + i, fc.sample_rows_eq(n, i));
            row.rhs = 0.0;
            fc.rows.push_back(std::move(row));
        }
        if (cfg.has_dynamic_range()) {
            for (int n = 0; n < cfg.N; ++n) {
                AffineRow row;
                row.coeffs.reserve(dims);
                for (int i = 0; i < dims; ++i)
                    row.coeffs.emplace_back(m * dims + i, -fc.sample_rows_eq(n, i));
                row.rhs = -cfg.dynamic_range_max;
                fc.rows.push_back(std::move(row));
            }
        }
    }
    return fc;
}

inline double min_sample_value(const FixedConstraints& fc, const Eigen::MatrixXd& points) {
    return (fc.sample_rows_eq * points).minCoeff();
}

// Random start per the restart policy: uniform DC / subcarrier coordinates,
// DC-shifted into the non-negative cone, rescaled onto the power budget.
inline Eigen::MatrixXd random_start(const SystemConfig& cfg, const FixedConstraints& fc,
                                    std::uint64_t seed) {
    const int dims = cfg.dims();
    std::mt19937_64 rng(seed);
    const double dc_hi = std::sqrt(fc.budget / cfg.M);
    const double ac_hi =
        cfg.n_joint > 0 ? std::sqrt(fc.budget / (4.0 * cfg.M * cfg.n_joint)) : 0.0;
    Eigen::MatrixXd pts(dims, cfg.M);
    for (int m = 0; m < cfg.M; ++m) {
        pts(0, m) = uniform_range(rng, 0.0, dc_hi);
        for (int i = 1; i < dims; ++i) pts(i, m) = uniform_range(rng, -ac_hi, ac_hi);
    }
    // smallest DC shift making every sample non-negative, plus a strict margin
    const double margin = 1e-4 * std::max(1.0, dc_hi);
    const double min_s = min_sample_value(fc, pts);
    if (min_s < margin) pts.row(0).array() += (margin - min_s) / fc.dc_gain;
    const double pw = average_power(pts, cfg) - cfg.n_indep() * cfg.p_indep;
    if (pw > 0.0) pts *= std::sqrt(fc.budget / pw);
    if (cfg.has_dynamic_range()) {
        const double mx = (fc.sample_rows_eq * pts).maxCoeff();
        if (mx > cfg.dynamic_range_max * (1.0 - 1e-3))
            pts *= cfg.dynamic_range_max * (1.0 - 1e-3) / mx;
    }
    return pts;
}

struct RestartOutcome {
    Eigen::MatrixXd points;
    double d_min = -1.0;
    int iterations = 0;
    bool solver_ok = true;
    std::vector<double> trace;
};

// Pulls a feasible iterate strictly inside every constraint: a DC shift
// lifts the sample rows clear of zero, then a uniform shrink restores the
// power (and dynamic-range) margins. Healthy margins keep the barrier
// Hessian well conditioned at the next warm start.
inline Eigen::MatrixXd interiorize(const SystemConfig& cfg, const FixedConstraints& fc,
                                   Eigen::MatrixXd pts) {
    const Eigen::MatrixXd samples = fc.sample_rows_eq * pts;
    const double target = 1e-3 * std::max(samples.maxCoeff(), 1e-9);
    const double min_s = samples.minCoeff();
    if (min_s < target) pts.row(0).array() += (target - min_s) / fc.dc_gain;
    const Eigen::VectorXd v = stack(pts);
    const double q = v.dot(fc.quad * v);
    const double cap = fc.budget * (1.0 - 1e-2);
    if (q > cap && q > 0.0) pts *= std::sqrt(cap / q);
    if (cfg.has_dynamic_range()) {
        const double mx = (fc.sample_rows_eq * pts).maxCoeff();
        const double dcap = cfg.dynamic_range_max * (1.0 - 1e-3);
        if (mx > dcap) pts *= dcap / mx;
    }
    return pts;
}

inline RestartOutcome run_restart(const SystemConfig& cfg, const FixedConstraints& fc,
                                  const DesignOptions& opt, std::uint64_t seed) {
    const int dims = cfg.dims();
    const int n_vars = dims * cfg.M;
    RestartOutcome out;
    out.points = random_start(cfg, fc, seed);

    ConvexSubproblem pb;
    pb.n_vars = n_vars;
    pb.quad = fc.quad;
    pb.quad_budget = fc.budget;

    double d_prev = min_distance(out.points);
    DualWarmStart duals;  // the row layout is identical across iterations
    bool have_duals = false;
    for (int iter = 0; iter < opt.max_iters; ++iter) {
        Eigen::VectorXd v0 = stack(interiorize(cfg, fc, out.points));
        pb.rows.clear();
        pb.rows.reserve(fc.rows.size() + static_cast<std::size_t>(cfg.M) * (cfg.M - 1) / 2);
        for (int p = 0; p < cfg.M; ++p)
            for (int q = p + 1; q < cfg.M; ++q)
                pb.rows.push_back(linearize_distance(v0, cfg.M, dims, p, q));
        pb.rows.insert(pb.rows.end(), fc.rows.begin(), fc.rows.end());

        SolveResult sol = solve(pb, v0, opt.solver_tol, opt.solver_max_iter,
                                have_duals ? &duals : nullptr);
        if (sol.status != SolveStatus::Optimal && sol.status != SolveStatus::IterationLimit) {
            out.solver_ok = false;
            break;
        }
        if (sol.row_duals.size() > 0) {
            duals.row_duals = std::move(sol.row_duals);
            duals.quad_dual = sol.quad_dual;
            have_duals = true;
        }
        Eigen::MatrixXd cand = unstack(sol.c, cfg.M, dims);
        const double d_new = min_distance(cand);
        if (d_new < d_prev) break;  // keep the incumbent; no further progress
        out.points = std::move(cand);
        out.iterations = iter + 1;
        out.trace.push_back(d_new);
        if (d_new - d_prev < opt.tol_rel * std::max(d_prev, 1e-12)) break;
        d_prev = d_new;
    }
    out.d_min = min_distance(out.points);
    return out;
}

}  // namespace detail

/// Sequential-convex-programming design of the joint constellation:
/// maximize the minimum pairwise distance subject to non-negative time
/// samples, the average power budget, and (optionally) a dynamic-range
/// cap, linearizing the distance constraints at the incumbent. Runs
/// `restarts` independent random initializations and keeps the best.
inline DesignResult scp_design(const SystemConfig& cfg, const ChannelSpec& channel,
                               const DesignOptions& opt) {
    DesignResult res;
    auto errs = validate(cfg);
    if (!errs.empty()) {
        res.message = "invalid config: " + errs.front();
        return res;
    }
    const int dims = cfg.dims();

    if (cfg.M == 1) {
        res.constellation.points = Eigen::MatrixXd::Zero(dims, 1);
        res.constellation.achieved_d_min = std::numeric_limits<double>::infinity();
        res.constellation.avg_power = average_power(res.constellation.points, cfg);
        res.d_min = res.constellation.achieved_d_min;
        res.feasible = true;
        res.degenerate = true;
        return res;
    }

    const double p_joint = cfg.p_total - cfg.n_indep() * cfg.p_indep;
    if (!(p_joint > 0.0)) {
        res.message = "infeasible: independent subcarriers exhaust the power budget";
        return res;
    }

    Eigen::MatrixXd f_block = Eigen::MatrixXd::Identity(dims, dims);
    if (!channel.is_flat())
        f_block = build_preequalizer(channel, cfg, opt.alpha).block_matrix();
    const auto fc = detail::build_fixed(cfg, f_block, p_joint);
    if (!(std::abs(fc.dc_gain) > 0.0)) {
        res.message = "infeasible: pre-equalized DC gain is zero";
        return res;
    }

    const int n_restarts = std::max(1, opt.restarts);
    std::vector<detail::RestartOutcome> outcomes(n_restarts);
    auto work = [&](std::size_t r) {
        outcomes[r] = detail::run_restart(cfg, fc, opt, derive_seed(opt.seed, r));
    };
    if (opt.parallel)
        parallel_for(n_restarts, work);
    else
        for (int r = 0; r < n_restarts; ++r) work(r);

    // accounted (transmitted) power: pre-equalizer folded in, plus the
    // independent-subcarrier budget
    auto accounted_power = [&](const Eigen::MatrixXd& pts) {
        const Eigen::VectorXd v = stack(pts);
        return v.dot(fc.quad * v) + cfg.n_indep() * cfg.p_indep;
    };

    int best = -1;
    double best_d = -1.0, best_pw = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_restarts; ++r) {
        const auto& oc = outcomes[r];
        const double pw = accounted_power(oc.points);
        const bool better = oc.d_min > best_d + 1e-12 ||
                            (std::abs(oc.d_min - best_d) <= 1e-12 && pw < best_pw);
        if (better) {
            best = r;
            best_d = oc.d_min;
            best_pw = pw;
        }
        res.restart_traces.push_back(oc.trace);
    }

    const auto& win = outcomes[best];
    res.constellation.points = win.points;
    res.constellation.achieved_d_min = win.d_min;
    res.constellation.avg_power = accounted_power(win.points);
    res.d_min = win.d_min;
    res.iterations = win.iterations;
    res.restarts_used = n_restarts;
    res.best_restart = best;
    res.d_min_trace = win.trace;
    res.feasible = true;
    return res;
}

/// Independent re-check of a finished design: true pairwise minimum
/// distance, power, worst time sample (over every independent-symbol
/// combination in partial mode), dynamic range. Report-only.
struct VerifyReport {
    double d_min = 0.0;
    double avg_power = 0.0;
    double min_sample = 0.0;       // joint component only
    double max_sample = 0.0;
    double min_combined = 0.0;     // with worst-case independent symbols + B'
    double residual_bias = 0.0;
    std::vector<std::string> flags;

    bool clean() const { return flags.empty(); }
};

inline VerifyReport verify_design(const DesignResult& design, const SystemConfig& cfg,
                                  const ChannelSpec& channel, double alpha = 1.0) {
    VerifyReport rep;
    const auto& pts = design.constellation.points;
    rep.d_min = min_distance(pts);

    Eigen::MatrixXd f_block = Eigen::MatrixXd::Identity(cfg.dims(), cfg.dims());
    if (!channel.is_flat()) f_block = build_preequalizer(channel, cfg, alpha).block_matrix();
    rep.avg_power = average_power(f_block * pts, cfg);  // transmitted power

    // worst sample over every independent-symbol combination: for a fixed
    // sample index the joint minimum and the per-bin independent minima add
    Eigen::VectorXd joint_min = Eigen::VectorXd::Constant(cfg.N, 1e300);
    rep.max_sample = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < pts.cols(); ++m) {
        Eigen::VectorXd x = time_samples(f_block * pts.col(m), cfg);
        joint_min = joint_min.cwiseMin(x);
        rep.max_sample = std::max(rep.max_sample, x.maxCoeff());
    }
    rep.min_sample = joint_min.minCoeff();
    rep.residual_bias = min_residual_bias(cfg);
    rep.min_combined =
        (joint_min + indep_dip_profile(cfg)).minCoeff() + rep.residual_bias;

    if (!design.degenerate && std::isfinite(design.d_min) &&
        std::abs(rep.d_min - design.d_min) > 1e-6 * std::max(1.0, design.d_min))
        rep.flags.push_back("reported d_min differs from recomputed value");
    if (rep.min_sample < -kFeasEps) rep.flags.push_back("negative time sample beyond tolerance");
    if (cfg.mode == DesignMode::Partial && rep.min_combined < -kFeasEps)
        rep.flags.push_back("combined frame can go negative beyond tolerance");
    if (rep.avg_power > cfg.p_total * (1.0 + kFeasEps))
        rep.flags.push_back("average power exceeds budget");
    if (cfg.has_dynamic_range() && rep.max_sample > cfg.dynamic_range_max * (1.0 + kFeasEps))
        rep.flags.push_back("time sample exceeds dynamic range cap");
    return rep;
}

}  // namespace dcio
