#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dcio {

/// One inequality a^T c (- s) >= rhs. Coefficients are sparse (index, value)
/// pairs into the c variables.
struct AffineRow {
    std::vector<std::pair<int, double>> coeffs;
    bool involves_s = false;
    double rhs = 0.0;
};

/// maximize s  subject to  affine rows, and optionally c^T Q c <= budget.
/// Q must be symmetric PSD. An empty Q (size 0) disables the quadratic.
struct ConvexSubproblem {
    int n_vars = 0;
    std::vector<AffineRow> rows;
    Eigen::MatrixXd quad;
    double quad_budget = 0.0;

    bool has_quad() const { return quad.size() > 0; }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

struct SolveResult {
    Eigen::VectorXd c;
    double s = 0.0;
    SolveStatus status = SolveStatus::NumericalFailure;
    int newton_steps = 0;
    double gap = std::numeric_limits<double>::infinity();  // certified optimality gap bound
    std::vector<double> outer_objectives;  // objective after each interior-point iteration
    Eigen::VectorXd row_duals;             // multipliers, reusable as a warm start
    double quad_dual = 0.0;
};

/// Dual warm start for solve(); row order must match the subproblem rows.
struct DualWarmStart {
    Eigen::VectorXd row_duals;
    double quad_dual = 0.0;
};

namespace detail {

// Row in solver-internal form: sparse coefficients over the extended
// variable vector z, already 2-norm normalized.
struct CoreRow {
    std::vector<std::pair<int, double>> a;
    double rhs = 0.0;
};

struct CoreProblem {
    int nz = 0;            // total variables
    int nq = 0;            // quadratic acts on z[0..nq)
    std::vector<CoreRow> rows;
    const Eigen::MatrixXd* quad = nullptr;
    double budget = 0.0;
    Eigen::VectorXd obj;   // maximize obj^T z

    bool has_quad() const { return quad != nullptr && quad->size() > 0; }
};

struct CoreOutcome {
    Eigen::VectorXd z;
    bool converged = false;
    bool numerical_failure = false;
    int newton_steps = 0;
    double gap = std::numeric_limits<double>::infinity();
    std::vector<double> outer_objectives;
    Eigen::VectorXd lam;
    double lam_q = 0.0;
};

inline double core_residual(const CoreRow& row, const Eigen::VectorXd& z) {
    double r = -row.rhs;
    for (const auto& [j, v] : row.a) r += v * z(j);
    return r;
}

// Primal log-barrier path following. The caller supplies a strictly
// feasible start. early_stop, when set, ends the solve as soon as the
// objective reaches that value (used by phase-1).
inline CoreOutcome barrier_solve(const CoreProblem& pb, const Eigen::VectorXd& z0, double tol,
                                 std::optional<double> early_stop = std::nullopt) {
    constexpr int kMaxOuter = 60;
    constexpr int kMaxInner = 50;
    constexpr double kMuShrink = 0.2;
    constexpr double kStepTol = 1e-10;

    const int nz = pb.nz;
    const int m = static_cast<int>(pb.rows.size());
    const double nu = m + (pb.has_quad() ? 2.0 : 0.0);  // barrier complexity bound

    CoreOutcome out;
    out.z = z0;
    Eigen::VectorXd z = z0;

    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) {
        r(i) = core_residual(pb.rows[i], z);
        if (!(r(i) > 0.0)) {
            out.numerical_failure = true;
            return out;
        }
    }
    auto quad_val = [&](const Eigen::VectorXd& zz) {
        if (!pb.has_quad()) return 0.0;
        return zz.head(pb.nq).dot(*pb.quad * zz.head(pb.nq));
    };
    double rq = pb.has_quad() ? pb.budget - quad_val(z) : 1.0;
    if (pb.has_quad() && !(rq > 0.0)) {
        out.numerical_failure = true;
        return out;
    }

    Eigen::MatrixXd h(nz, nz);
    Eigen::VectorXd g(nz), qz(pb.nq), dz(nz);

    // Start the barrier weight so the warm point is first-order centered
    // along the objective; a cold mu of 1 with thousands of rows would put
    // the first center hopelessly far from any good warm start.
    double mu = 1.0;
    {
        double slope = 0.0;  // d/dt sum log r_i along the objective direction
        for (int i = 0; i < m; ++i) {
            double ao = 0.0;
            for (const auto& [j, v] : pb.rows[i].a) ao += v * pb.obj(j);
            slope += ao / r(i);
        }
        if (pb.has_quad()) {
            qz.noalias() = *pb.quad * z.head(pb.nq);
            slope -= 2.0 * qz.dot(pb.obj.head(pb.nq)) / rq;
        }
        if (slope < 0.0) mu = std::clamp(-1.0 / slope, 1e-10, 1.0);
    }
    for (int outer = 0; outer < kMaxOuter; ++outer) {
        for (int inner = 0; inner < kMaxInner; ++inner) {
            // gradient and Hessian of -obj^T z - mu*sum log r_i - mu*log rq
            g = -pb.obj;
            h.setZero();
            for (int i = 0; i < m; ++i) {
                const double inv_r = 1.0 / r(i);
                const double w = mu * inv_r * inv_r;
                const double gi = -mu * inv_r;
                for (const auto& [j, vj] : pb.rows[i].a) {
                    g(j) += gi * vj;
                    const double wv = w * vj;
                    for (const auto& [k, vk] : pb.rows[i].a) h(j, k) += wv * vk;
                }
            }
            if (pb.has_quad()) {
                qz.noalias() = *pb.quad * z.head(pb.nq);
                const double inv_rq = 1.0 / rq;
                g.head(pb.nq) += (2.0 * mu * inv_rq) * qz;
                h.topLeftCorner(pb.nq, pb.nq) +=
                    (4.0 * mu * inv_rq * inv_rq) * (qz * qz.transpose()) +
                    (2.0 * mu * inv_rq) * (*pb.quad);
            }

            // Newton direction, with escalating ridge if the factorization
            // stalls (rows may not span all of z)
            double ridge = 0.0;
            bool solved = false;
            for (int attempt = 0; attempt < 6 && !solved; ++attempt) {
                Eigen::MatrixXd hr = h;
                if (ridge > 0.0) hr.diagonal().array() += ridge;
                Eigen::LLT<Eigen::MatrixXd> llt(hr);
                if (llt.info() == Eigen::Success) {
                    dz = llt.solve(-g);
                    if (dz.allFinite()) {
                        solved = true;
                        break;
                    }
                }
                ridge = (ridge == 0.0) ? 1e-10 * (1.0 + h.diagonal().maxCoeff()) : ridge * 1e3;
            }
            if (!solved) {
                out.numerical_failure = true;
                out.z = z;
                return out;
            }

            const double step_norm = dz.norm();
            if (step_norm <= kStepTol * (1.0 + z.norm())) break;
            // quadratic-convergence region: the Newton decrement bounds the
            // remaining centering error
            if (-g.dot(dz) * 0.5 <= 1e-14 * std::max(1.0, std::abs(pb.obj.dot(z)))) break;

            // fraction-to-boundary on affine rows
            double tmax = 1.0;
            std::vector<double> dr(m);
            for (int i = 0; i < m; ++i) {
                double d = 0.0;
                for (const auto& [j, v] : pb.rows[i].a) d += v * dz(j);
                dr[i] = d;
                if (d < 0.0) tmax = std::min(tmax, 0.995 * r(i) / (-d));
            }
            // boundary crossing of the quadratic
            double a1 = 0.0, a2 = 0.0;
            if (pb.has_quad()) {
                Eigen::VectorXd qd = *pb.quad * dz.head(pb.nq);
                a1 = 2.0 * z.head(pb.nq).dot(qd);
                a2 = dz.head(pb.nq).dot(qd);
                double cross = std::numeric_limits<double>::infinity();
                if (a2 > 0.0) {
                    const double disc = a1 * a1 + 4.0 * a2 * rq;
                    cross = (-a1 + std::sqrt(std::max(disc, 0.0))) / (2.0 * a2);
                } else if (a1 > 0.0) {
                    cross = rq / a1;
                }
                if (cross < tmax / 0.995) tmax = std::min(tmax, 0.995 * cross);
            }

            auto eval_barrier = [&](double t, bool& ok) {
                double f = -pb.obj.dot(z) - t * pb.obj.dot(dz);
                for (int i = 0; i < m; ++i) {
                    const double ri = r(i) + t * dr[i];
                    if (!(ri > 0.0)) { ok = false; return 0.0; }
                    f -= mu * std::log(ri);
                }
                if (pb.has_quad()) {
                    const double rqt = rq - t * a1 - t * t * a2;
                    if (!(rqt > 0.0)) { ok = false; return 0.0; }
                    f -= mu * std::log(rqt);
                }
                ok = true;
                return f;
            };

            bool ok0 = true;
            const double f0 = eval_barrier(0.0, ok0);
            const double slope = g.dot(dz);  // < 0 for a descent direction
            double t = std::min(1.0, tmax);
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                bool ok = true;
                const double ft = eval_barrier(t, ok);
                if (ok && ft <= f0 + 0.25 * t * slope) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted || !(t > 0.0)) break;  // no progress at this mu; recenter at smaller mu

            z += t * dz;
            for (int i = 0; i < m; ++i) r(i) = core_residual(pb.rows[i], z);
            if (pb.has_quad()) rq = pb.budget - quad_val(z);
            ++out.newton_steps;
        }

        out.outer_objectives.push_back(pb.obj.dot(z));
        out.gap = mu * nu;
        if (early_stop && pb.obj.dot(z) >= *early_stop) {
            out.z = z;
            out.converged = true;
            return out;
        }
        if (out.gap <= tol * std::max(1.0, std::abs(pb.obj.dot(z)))) {
            out.z = z;
            out.converged = true;
            return out;
        }
        mu *= kMuShrink;
    }
    out.z = z;
    return out;
}

// Primal-dual interior point for phase 2: maximize obj^T z over the rows
// and the quadratic budget, from a strictly feasible start. Mehrotra
// predictor-corrector on the perturbed KKT system with separate primal and
// dual step lengths; one dense symmetric factorization per iteration.
inline CoreOutcome primal_dual_solve(const CoreProblem& pb, const Eigen::VectorXd& z0,
                                     double tol, int max_iter = 150,
                                     const Eigen::VectorXd* warm_lam = nullptr,
                                     double warm_lam_q = 0.0) {
    const int kMaxIter = max_iter;
    constexpr double kBoundaryFrac = 0.995;
    const int nz = pb.nz;
    const int m = static_cast<int>(pb.rows.size());
    const bool hq = pb.has_quad();
    const double ncomp = m + (hq ? 1.0 : 0.0);

    CoreOutcome out;
    out.z = z0;
    Eigen::VectorXd z = z0;

    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) {
        r(i) = core_residual(pb.rows[i], z);
        if (!(r(i) > 0.0)) {
            out.numerical_failure = true;
            return out;
        }
    }
    auto quad_res = [&](const Eigen::VectorXd& zz) {
        return hq ? pb.budget - zz.head(pb.nq).dot(*pb.quad * zz.head(pb.nq)) : 1.0;
    };
    double rq = quad_res(z);
    if (hq && !(rq > 0.0)) {
        out.numerical_failure = true;
        return out;
    }

    // duals balanced so the objective component of the dual residual starts
    // consistent: sum over rows of max(0, -a_i.obj) * lam_i ~ 1
    double balance = 0.0;
    for (int i = 0; i < m; ++i) {
        double ao = 0.0;
        for (const auto& [j, v] : pb.rows[i].a) ao += v * pb.obj(j);
        balance += std::max(0.0, -ao) / r(i);
    }
    const double mu0 = balance > 0.0 ? 1.0 / balance : 1.0;
    Eigen::VectorXd lam = (mu0 / r.array()).matrix();
    double lam_q = hq ? mu0 / rq : 0.0;
    if (warm_lam && warm_lam->size() == m && warm_lam->minCoeff() > 0.0) {
        lam = warm_lam->cwiseMax(1e-10 * mu0);
        if (hq && warm_lam_q > 0.0) lam_q = warm_lam_q;
    }

    Eigen::MatrixXd h(nz, nz);
    Eigen::VectorXd qz = Eigen::VectorXd::Zero(pb.nq);
    Eigen::VectorXd g_d(nz), rhs(nz), dz_aff(nz), dz(nz);
    Eigen::VectorXd dr_aff(m), dlam_aff(m), dr(m), dlam(m);
    double drq_aff = 0.0, dlq_aff = 0.0;
    double gap = std::numeric_limits<double>::infinity();

    auto row_dot = [&](int i, const Eigen::VectorXd& dir) {
        double acc = 0.0;
        for (const auto& [j, v] : pb.rows[i].a) acc += v * dir(j);
        return acc;
    };

    for (int iter = 0; iter < kMaxIter; ++iter) {
        if (hq) qz.noalias() = *pb.quad * z.head(pb.nq);
        gap = lam.dot(r) + lam_q * rq;
        const double mu = gap / ncomp;

        // dual residual of  -obj - sum lam_i a_i + 2 lam_q Q z = 0
        g_d = -pb.obj;
        for (int i = 0; i < m; ++i)
            for (const auto& [j, v] : pb.rows[i].a) g_d(j) -= lam(i) * v;
        if (hq) g_d.head(pb.nq) += 2.0 * lam_q * qz;

        out.outer_objectives.push_back(pb.obj.dot(z));
        const double scale = std::max(1.0, std::abs(pb.obj.dot(z)));
        if (gap <= tol * scale && g_d.norm() <= std::sqrt(tol) * scale) {
            out.converged = true;
            out.gap = gap;
            out.z = z;
            out.lam = lam;
            out.lam_q = lam_q;
            return out;
        }

        // reduced Newton matrix, shared by predictor and corrector
        h.setZero();
        for (int i = 0; i < m; ++i) {
            const double w = lam(i) / r(i);
            for (const auto& [j, vj] : pb.rows[i].a) {
                const double wv = w * vj;
                for (const auto& [k, vk] : pb.rows[i].a) h(j, k) += wv * vk;
            }
        }
        if (hq) {
            h.topLeftCorner(pb.nq, pb.nq) += (2.0 * lam_q) * (*pb.quad);
            h.topLeftCorner(pb.nq, pb.nq) += (4.0 * lam_q / rq) * (qz * qz.transpose());
        }

        Eigen::LLT<Eigen::MatrixXd> llt(h);
        Eigen::LDLT<Eigen::MatrixXd> ldlt;
        bool use_llt = llt.info() == Eigen::Success;
        if (!use_llt) {
            double ridge = 0.0;
            for (int attempt = 0; attempt < 8; ++attempt) {
                if (ridge > 0.0) {
                    Eigen::MatrixXd hr = h;
                    hr.diagonal().array() += ridge;
                    ldlt.compute(hr);
                } else {
                    ldlt.compute(h);
                }
                if (ldlt.info() == Eigen::Success) break;
                ridge = ridge == 0.0 ? 1e-12 * (1.0 + h.diagonal().maxCoeff()) : ridge * 1e3;
            }
            if (ldlt.info() != Eigen::Success) {
                out.numerical_failure = true;
                out.z = z;
                out.gap = gap;
                return out;
            }
        }

        // comp_target_i: desired lam_i r_i after the step
        auto solve_dir = [&](const Eigen::VectorXd& comp_target, double comp_target_q,
                             Eigen::VectorXd& dir) {
            rhs = -g_d;
            for (int i = 0; i < m; ++i) {
                const double t = (comp_target(i) - lam(i) * r(i)) / r(i);
                for (const auto& [j, v] : pb.rows[i].a) rhs(j) += v * t;
            }
            if (hq) rhs.head(pb.nq) -= qz * (2.0 * (comp_target_q - lam_q * rq) / rq);
            if (use_llt)
                dir = llt.solve(rhs);
            else
                dir = ldlt.solve(rhs);
            return dir.allFinite();
        };
        auto fill_deltas = [&](const Eigen::VectorXd& dir, const Eigen::VectorXd& comp_target,
                               double comp_target_q, Eigen::VectorXd& dr_out,
                               Eigen::VectorXd& dlam_out, double& drq_out, double& dlq_out) {
            for (int i = 0; i < m; ++i) {
                dr_out(i) = row_dot(i, dir);
                dlam_out(i) =
                    (comp_target(i) - lam(i) * r(i)) / r(i) - (lam(i) / r(i)) * dr_out(i);
            }
            if (hq) {
                Eigen::VectorXd qd = *pb.quad * dir.head(pb.nq);
                drq_out = -2.0 * z.head(pb.nq).dot(qd);
                dlq_out = (comp_target_q - lam_q * rq) / rq - (lam_q / rq) * drq_out;
            } else {
                drq_out = 0.0;
                dlq_out = 0.0;
            }
        };
        auto primal_step = [&](const Eigen::VectorXd& dir, const Eigen::VectorXd& dr_in) {
            double a = 1.0;
            for (int i = 0; i < m; ++i)
                if (dr_in(i) < 0.0) a = std::min(a, -r(i) / dr_in(i));
            if (hq) {
                Eigen::VectorXd qd = *pb.quad * dir.head(pb.nq);
                const double a1 = 2.0 * z.head(pb.nq).dot(qd);
                const double a2 = dir.head(pb.nq).dot(qd);
                if (a2 > 0.0) {
                    const double disc = a1 * a1 + 4.0 * a2 * rq;
                    a = std::min(a, (-a1 + std::sqrt(std::max(disc, 0.0))) / (2.0 * a2));
                } else if (a1 > 0.0) {
                    a = std::min(a, rq / a1);
                }
            }
            return a;
        };
        auto dual_step = [&](const Eigen::VectorXd& dlam_in, double dlq_in) {
            double a = 1.0;
            for (int i = 0; i < m; ++i)
                if (dlam_in(i) < 0.0) a = std::min(a, -lam(i) / dlam_in(i));
            if (hq && dlq_in < 0.0) a = std::min(a, -lam_q / dlq_in);
            return a;
        };

        // predictor: pure affine step fixes the centering weight
        Eigen::VectorXd zero_target = Eigen::VectorXd::Zero(m);
        if (!solve_dir(zero_target, 0.0, dz_aff)) {
            out.numerical_failure = true;
            out.z = z;
            out.gap = gap;
            return out;
        }
        fill_deltas(dz_aff, zero_target, 0.0, dr_aff, dlam_aff, drq_aff, dlq_aff);
        const double ap_aff = std::min(1.0, kBoundaryFrac * primal_step(dz_aff, dr_aff));
        const double ad_aff = std::min(1.0, kBoundaryFrac * dual_step(dlam_aff, dlq_aff));
        double gap_aff = 0.0;
        for (int i = 0; i < m; ++i)
            gap_aff += (lam(i) + ad_aff * dlam_aff(i)) *
                       std::max(r(i) + ap_aff * dr_aff(i), 0.0);
        if (hq)
            gap_aff += (lam_q + ad_aff * dlq_aff) * std::max(rq + ap_aff * drq_aff, 0.0);
        gap_aff = std::max(gap_aff, 0.0);
        double sigma = std::pow(gap_aff / std::max(gap, 1e-300), 3.0);
        sigma = std::clamp(sigma, 1e-6, 0.9);

        // corrector with Mehrotra second-order terms
        Eigen::VectorXd comp_target(m);
        for (int i = 0; i < m; ++i)
            comp_target(i) = sigma * mu - dlam_aff(i) * dr_aff(i);
        const double comp_target_q = sigma * mu - dlq_aff * drq_aff;
        if (!solve_dir(comp_target, comp_target_q, dz)) {
            out.numerical_failure = true;
            out.z = z;
            out.gap = gap;
            return out;
        }
        double drq_cor = 0.0, dlq_cor = 0.0;
        fill_deltas(dz, comp_target, comp_target_q, dr, dlam, drq_cor, dlq_cor);
        double ap = std::min(1.0, kBoundaryFrac * primal_step(dz, dr));
        double ad = std::min(1.0, kBoundaryFrac * dual_step(dlam, dlq_cor));
        // the Newton contraction of the dual residual needs a coupled step
        if (g_d.norm() > 1e-4 * scale) ap = ad = std::min(ap, ad);
        if (!(ap > 1e-14) || !(ad > 1e-14)) {
            out.z = z;
            out.gap = gap;
            out.lam = lam;
            out.lam_q = lam_q;
            return out;  // stalled; caller inspects the gap
        }

#ifdef DCIO_SOLVER_TRACE
        {
            int bp = -1, bd = -1;
            double best_p = 1e300, best_d = 1e300;
            for (int i = 0; i < m; ++i) {
                if (dr(i) < 0.0 && -r(i) / dr(i) < best_p) { best_p = -r(i) / dr(i); bp = i; }
                if (dlam(i) < 0.0 && -lam(i) / dlam(i) < best_d) { best_d = -lam(i) / dlam(i); bd = i; }
            }
            std::fprintf(stderr,
                         "it %3d s=%.6f gap=%.3e sigma=%.3f ap=%.3e ad=%.3e gd=%.3e bp=%d(r=%.2e) bd=%d(l=%.2e)\n",
                         iter, pb.obj.dot(z), gap, sigma, ap, ad, g_d.norm(), bp,
                         bp >= 0 ? r(bp) : 0.0, bd, bd >= 0 ? lam(bd) : 0.0);
        }
#endif
        z += ap * dz;
        for (int i = 0; i < m; ++i) {
            lam(i) = std::max(lam(i) + ad * dlam(i), 1e-300);
            r(i) = core_residual(pb.rows[i], z);
        }
        if (hq) lam_q = std::max(lam_q + ad * dlq_cor, 1e-300);
        rq = quad_res(z);
        ++out.newton_steps;
    }
    out.z = z;
    out.gap = gap;
    out.lam = lam;
    out.lam_q = lam_q;
    return out;
}

// Builds normalized core rows for phase 2 (z = [c; s]) or phase 1
// (z = [c; s, t], every row slacked by +t).
inline std::vector<CoreRow> make_core_rows(const ConvexSubproblem& pb, bool phase1) {
    const int n = pb.n_vars;
    std::vector<CoreRow> rows;
    rows.reserve(pb.rows.size());
    for (const auto& row : pb.rows) {
        CoreRow cr;
        cr.a.reserve(row.coeffs.size() + 2);
        double norm2 = 0.0;
        for (const auto& [j, v] : row.coeffs) {
            if (j < 0 || j >= n) throw std::invalid_argument("solve: row index out of range");
            cr.a.emplace_back(j, v);
            norm2 += v * v;
        }
        if (row.involves_s) {
            cr.a.emplace_back(n, -1.0);
            norm2 += 1.0;
        }
        if (phase1) {
            cr.a.emplace_back(n + 1, 1.0);
            norm2 += 1.0;
        }
        cr.rhs = row.rhs;
        const double scale = 1.0 / std::sqrt(std::max(norm2, 1e-300));
        for (auto& [j, v] : cr.a) v *= scale;
        cr.rhs *= scale;
        rows.push_back(std::move(cr));
    }
    return rows;
}

}  // namespace detail

/// Interior-point solve of one convex subproblem: maximize s subject to the
/// affine rows and the quadratic budget. A warm start (values for c) is
/// used when it is strictly feasible; otherwise a phase-1 search runs
/// first. tol is the certified relative optimality gap, in (0, 1e-2].
inline SolveResult solve(const ConvexSubproblem& pb,
                         std::optional<Eigen::VectorXd> warm_start = std::nullopt,
                         double tol = 1e-7, int max_iter = 150,
                         const DualWarmStart* warm_duals = nullptr) {
    if (!(tol > 0.0) || tol > 1e-2) throw std::invalid_argument("solve: tol out of range");
    const int n = pb.n_vars;
    if (n <= 0) throw std::invalid_argument("solve: n_vars must be positive");
    if (pb.has_quad()) {
        if (pb.quad.rows() != n || pb.quad.cols() != n)
            throw std::invalid_argument("solve: quad size mismatch");
        if (!pb.quad.isApprox(pb.quad.transpose(), 1e-10))
            throw std::invalid_argument("solve: quad not symmetric");
        // small instances get a full PSD check; large ones are built
        // block-diagonal PSD by construction upstream
        if (n <= 200) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pb.quad, Eigen::EigenvaluesOnly);
            const double scale = std::max(1.0, pb.quad.cwiseAbs().maxCoeff());
            if (es.eigenvalues().minCoeff() < -1e-10 * scale)
                throw std::invalid_argument("solve: quad not PSD");
        }
    }
    bool any_s_row = false;
    for (const auto& row : pb.rows) any_s_row |= row.involves_s;

    SolveResult res;
    if (!any_s_row) {
        res.status = SolveStatus::Unbounded;
        return res;
    }

    // strictly feasible (c, s) start, via phase-1 when needed. A warm point
    // sitting on the ellipsoid is pulled inside first; starting the barrier
    // glued to the quadratic boundary is numerically hopeless.
    Eigen::VectorXd c_start;
    bool have_start = false;
    if (warm_start && warm_start->size() == n) {
        Eigen::VectorXd c_try = *warm_start;
        if (pb.has_quad()) {
            const double q = c_try.dot(pb.quad * c_try);
            const double cap = pb.quad_budget * (1.0 - 1e-2);
            if (q > cap && q > 0.0) c_try *= std::sqrt(cap / q);
        }
        bool strict = true;
        for (const auto& row : pb.rows) {
            if (row.involves_s) continue;
            double r = -row.rhs;
            double norm2 = 0.0;
            for (const auto& [j, v] : row.coeffs) {
                r += v * c_try(j);
                norm2 += v * v;
            }
            if (r <= 1e-12 * std::sqrt(std::max(norm2, 1.0))) { strict = false; break; }
        }
        if (strict) {
            c_start = c_try;
            have_start = true;
        }
    }

    if (!have_start) {
        // phase 1: minimize t with every row slacked by +t; any point with
        // t < 0 is strictly feasible for the original rows
        if (pb.has_quad() && !(pb.quad_budget > 0.0)) {
            res.status = SolveStatus::Infeasible;
            return res;
        }
        detail::CoreProblem p1;
        p1.nz = n + 2;
        p1.nq = n;
        p1.rows = detail::make_core_rows(pb, true);
        if (pb.has_quad()) {
            p1.quad = &pb.quad;
            p1.budget = pb.quad_budget;
        }
        p1.obj = Eigen::VectorXd::Zero(n + 2);
        p1.obj(n + 1) = -1.0;  // maximize -t

        Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + 2);
        double worst = 0.0;  // residual at (c,s) = 0 is t - rhs
        for (const auto& row : pb.rows) worst = std::max(worst, row.rhs);
        z0(n + 1) = worst + 1.0;

        auto p1_out = detail::barrier_solve(p1, z0, std::min(tol, 1e-6), 1e-4);
        res.newton_steps += p1_out.newton_steps;
        if (p1_out.numerical_failure) {
            res.status = SolveStatus::NumericalFailure;
            return res;
        }
        const double t_final = p1_out.z(n + 1);
        if (!(t_final < 0.0)) {
            res.status = p1_out.converged ? SolveStatus::Infeasible : SolveStatus::NumericalFailure;
            res.c = p1_out.z.head(n);
            res.s = p1_out.z(n);
            return res;
        }
        c_start = p1_out.z.head(n);
        have_start = true;
    }

    // pick s strictly below every s-row: a margin proportional to the
    // spread of the row values keeps the near-minimal rows off the boundary
    // at the start, where the duals are still unsorted
    double s_cap = std::numeric_limits<double>::infinity();
    double s_mean = 0.0;
    int s_rows = 0;
    for (const auto& row : pb.rows) {
        if (!row.involves_s) continue;
        double v = -row.rhs;
        for (const auto& [j, coef] : row.coeffs) v += coef * c_start(j);
        s_cap = std::min(s_cap, v);
        s_mean += v;
        ++s_rows;
    }
    s_mean /= std::max(s_rows, 1);
    const double spread = std::max(s_mean - s_cap, 0.0);
    const double s_start =
        s_cap - std::max({1e-2 * std::max(1.0, std::abs(s_cap)), 0.5 * spread});

    detail::CoreProblem p2;
    p2.nz = n + 1;
    p2.nq = n;
    p2.rows = detail::make_core_rows(pb, false);
    if (pb.has_quad()) {
        p2.quad = &pb.quad;
        p2.budget = pb.quad_budget;
    }
    p2.obj = Eigen::VectorXd::Zero(n + 1);
    p2.obj(n) = 1.0;

    Eigen::VectorXd z0(n + 1);
    z0.head(n) = c_start;
    z0(n) = s_start;

    const Eigen::VectorXd* wl = nullptr;
    double wlq = 0.0;
    if (warm_duals && warm_duals->row_duals.size() == static_cast<Eigen::Index>(pb.rows.size())) {
        wl = &warm_duals->row_duals;
        wlq = warm_duals->quad_dual;
    }
    auto out = detail::primal_dual_solve(p2, z0, tol, max_iter, wl, wlq);
    res.newton_steps += out.newton_steps;
    res.c = out.z.head(n);
    res.s = out.z(n);
    res.gap = out.gap;
    res.outer_objectives = std::move(out.outer_objectives);
    res.row_duals = std::move(out.lam);
    res.quad_dual = out.lam_q;
    if (out.converged)
        res.status = SolveStatus::Optimal;
    else if (out.numerical_failure)
        res.status = SolveStatus::NumericalFailure;
    else
        res.status = SolveStatus::IterationLimit;  // feasible iterate, gap not certified
    return res;
}

}  // namespace dcio
