#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dcio/optimizer.hpp"

using namespace dcio;
using Catch::Approx;

namespace {

// dense selection matrix J^(m): dims x (M*dims)
Eigen::MatrixXd selection_matrix(int m, int m_points, int dims) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dims, m_points * dims);
    j.block(0, m * dims, dims, dims).setIdentity();
    return j;
}

// dense E_pq = (J_p - J_q)^T (J_p - J_q)
Eigen::MatrixXd dense_epq(int p, int q, int m_points, int dims) {
    Eigen::MatrixXd d = selection_matrix(p, m_points, dims) - selection_matrix(q, m_points, dims);
    return d.transpose() * d;
}

Eigen::VectorXd random_stacked(int m_points, int dims, std::mt19937_64& rng) {
    Eigen::VectorXd v(m_points * dims);
    for (int i = 0; i < v.size(); ++i) v(i) = uniform_range(rng, -2.0, 2.0);
    return v;
}

SystemConfig tiny_cfg() {
    SystemConfig c;
    c.N = 2;
    c.n_joint = 0;
    c.M = 2;
    c.n_bits = 1;
    c.p_total = 2.0;
    c.mode = DesignMode::Full;
    return c;
}

SystemConfig small_cfg(int m = 4, double p = 6.0) {
    SystemConfig c;
    c.N = 8;
    c.n_joint = 3;
    c.M = m;
    c.n_bits = 0;
    while ((1 << c.n_bits) < m) ++c.n_bits;
    c.p_total = p;
    c.mode = DesignMode::Full;
    return c;
}

}  // namespace

TEST_CASE("pairwise distance: identical and unit-simplex blocks") {
    Eigen::VectorXd v(4);
    v << 1.0, 0.5, 1.0, 0.5;  // identical 2-dim blocks
    CHECK(pairwise_distance(v, 2, 2, 0, 1) == 0.0);
    v << 1.0, 0.0, 0.0, 1.0;
    CHECK(pairwise_distance(v, 2, 2, 0, 1) == Approx(2.0).margin(1e-15));
    CHECK_THROWS_AS(pairwise_distance(v, 2, 2, 0, 2), std::invalid_argument);
}

TEST_CASE("pairwise distance matches the explicit quadratic form") {
    std::mt19937_64 rng(41);
    for (int m_points : {2, 3, 4})
        for (int dims : {1, 3, 5}) {
            Eigen::VectorXd v = random_stacked(m_points, dims, rng);
            for (int p = 0; p < m_points; ++p)
                for (int q = p + 1; q < m_points; ++q) {
                    const double direct = pairwise_distance(v, m_points, dims, p, q);
                    const double dense = v.dot(dense_epq(p, q, m_points, dims) * v);
                    CHECK(direct == Approx(dense).margin(1e-12));
                }
        }
}

TEST_CASE("linearization is tangent at the expansion point") {
    std::mt19937_64 rng(43);
    Eigen::VectorXd v0 = random_stacked(3, 4, rng);
    for (int p = 0; p < 3; ++p)
        for (int q = p + 1; q < 3; ++q) {
            auto row = linearize_distance(v0, 3, 4, p, q);
            CHECK(eval_affine(row, v0) == Approx(pairwise_distance(v0, 3, 4, p, q)).margin(1e-12));
        }
}

TEST_CASE("linearization under-estimates the distance everywhere") {
    std::mt19937_64 rng(47);
    Eigen::VectorXd v0 = random_stacked(4, 3, rng);
    auto row = linearize_distance(v0, 4, 3, 1, 3);
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXd c = random_stacked(4, 3, rng);
        CHECK(eval_affine(row, c) <= pairwise_distance(c, 4, 3, 1, 3) + 1e-12);
    }
}

TEST_CASE("linearization gradient matches central finite differences") {
    std::mt19937_64 rng(53);
    const int m_points = 3, dims = 3;
    Eigen::VectorXd v0 = random_stacked(m_points, dims, rng);
    const int p = 0, q = 2;
    auto row = linearize_distance(v0, m_points, dims, p, q);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(v0.size());
    for (const auto& [j, coef] : row.coeffs) grad(j) += coef;
    const double h = 1e-6;
    for (int j = 0; j < v0.size(); ++j) {
        Eigen::VectorXd vp = v0, vm = v0;
        vp(j) += h;
        vm(j) -= h;
        const double fd = (pairwise_distance(vp, m_points, dims, p, q) -
                           pairwise_distance(vm, m_points, dims, p, q)) /
                          (2.0 * h);
        if (std::abs(fd) > 1e-9)
            CHECK(grad(j) == Approx(fd).epsilon(1e-6));
        else
            CHECK(std::abs(grad(j)) <= 1e-6);
    }
}

TEST_CASE("average power of simple constellations") {
    auto cfg = small_cfg(4);
    // DC-only point replicated
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(7, 4);
    const double b = 1.7;
    pts.row(0).setConstant(b);
    CHECK(average_power(pts, cfg) == Approx(b * b).margin(1e-12));

    // one point with x1 = 1 + j
    SystemConfig cfg1 = small_cfg(1);
    cfg1.n_bits = 0;
    cfg1.M = 1;
    Eigen::MatrixXd one = Eigen::MatrixXd::Zero(7, 1);
    one(1, 0) = 1.0;
    one(2, 0) = 1.0;
    CHECK(average_power(one, cfg1) == Approx(4.0).margin(1e-12));
}

TEST_CASE("average power reproduces the DCO reference arithmetic") {
    // 3 bins at (+-1 +-j) plus a DC of 5.33 as a single joint point
    SystemConfig cfg = small_cfg(1);
    cfg.M = 1;
    cfg.n_bits = 0;
    Eigen::MatrixXd pt(7, 1);
    pt << 5.33, 1, 1, -1, 1, 1, -1;
    const double p = average_power(pt, cfg);
    CHECK(p == Approx(12.0 + 5.33 * 5.33).margin(1e-12));
    CHECK(p == Approx(40.41).margin(0.01));
}

TEST_CASE("power quadratic matrix equals the operator form") {
    std::mt19937_64 rng(59);
    for (int m_points : {2, 4})
        for (int dims : {1, 3, 5}) {
            SystemConfig cfg;
            cfg.N = 2 * (dims / 2) + 2;  // any N with n_joint consistent dims
            cfg.n_joint = (dims - 1) / 2;
            cfg.M = m_points;
            // identity pre-equalizer
            Eigen::MatrixXd q = power_quad_matrix(m_points, Eigen::MatrixXd::Identity(dims, dims));
            Eigen::VectorXd v = random_stacked(m_points, dims, rng);
            const double joint_power =
                average_power(unstack(v, m_points, dims), cfg) - cfg.n_indep() * cfg.p_indep;
            CHECK(v.dot(q * v) == Approx(joint_power).margin(1e-12));

            // with a random block transform folded in
            Eigen::MatrixXd f = Eigen::MatrixXd::Identity(dims, dims);
            f(0, 0) = 1.3;
            for (int k = 0; 2 * k + 2 < dims + 0; ++k) {
                f(2 * k + 1, 2 * k + 1) = 0.8;
                f(2 * k + 2, 2 * k + 2) = 0.8;
                f(2 * k + 1, 2 * k + 2) = 0.2;
                f(2 * k + 2, 2 * k + 1) = -0.2;
            }
            Eigen::MatrixXd qf = power_quad_matrix(m_points, f);
            Eigen::MatrixXd eq(dims, m_points);
            for (int m = 0; m < m_points; ++m) eq.col(m) = f * stacked_block(v, m, dims);
            const double eq_power = average_power(eq, cfg) - cfg.n_indep() * cfg.p_indep;
            CHECK(v.dot(qf * v) == Approx(eq_power).margin(1e-11));
        }
}

TEST_CASE("scp_design solves the analytic two-point DC-only instance") {
    auto cfg = tiny_cfg();
    DesignOptions opt;
    opt.restarts = 3;
    opt.seed = 7;
    auto res = scp_design(cfg, ChannelSpec::flat(), opt);
    REQUIRE(res.feasible);
    CHECK(res.d_min == Approx(2.0).margin(1e-3));
    // points are {2, 0} up to ordering
    std::array<double, 2> got{res.constellation.points(0, 0), res.constellation.points(0, 1)};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == Approx(0.0).margin(2e-3));
    CHECK(got[1] == Approx(2.0).margin(2e-3));

    // grid-search oracle at 1e-3 resolution
    double oracle = 0.0;
    for (double c1 = 0.0; c1 <= 2.2; c1 += 1e-3)
        for (double c2 = 0.0; c2 <= c1; c2 += 1e-3)
            if ((c1 * c1 + c2 * c2) / 2.0 <= 2.0) oracle = std::max(oracle, c1 - c2);
    CHECK(res.d_min == Approx(oracle).margin(1e-3));

    auto rep = verify_design(res, cfg, ChannelSpec::flat());
    CHECK(rep.clean());
    CHECK(rep.d_min == Approx(2.0).margin(1e-3));
    CHECK(rep.min_sample >= -kFeasEps);
    CHECK(rep.min_sample <= 1e-3);
    CHECK(rep.avg_power == Approx(2.0).margin(1e-3));
}

TEST_CASE("scp traces are non-decreasing and designs verify clean") {
    std::mt19937_64 rng(61);
    for (int t = 0; t < 3; ++t) {
        auto cfg = small_cfg(4 << t, 5.0 + 3.0 * t);
        DesignOptions opt;
        opt.restarts = 2;
        opt.seed = 100 + t;
        auto res = scp_design(cfg, ChannelSpec::flat(), opt);
        REQUIRE(res.feasible);
        for (const auto& trace : res.restart_traces)
            for (std::size_t i = 1; i < trace.size(); ++i)
                CHECK(trace[i] >= trace[i - 1] - 1e-9);
        auto rep = verify_design(res, cfg, ChannelSpec::flat());
        CHECK(rep.clean());
        CHECK(rep.avg_power <= cfg.p_total * (1.0 + 1e-7));
        CHECK(rep.min_sample >= -1e-7);
    }
}

TEST_CASE("verify_design flags injected violations") {
    auto cfg = small_cfg(4);
    DesignResult fake;
    fake.feasible = true;
    fake.constellation.points = Eigen::MatrixXd::Zero(7, 4);
    fake.constellation.points(0, 0) = -1.0;  // negative DC -> negative samples
    fake.constellation.points(0, 1) = 0.5;
    fake.constellation.points(0, 2) = 1.0;
    fake.constellation.points(0, 3) = 1.5;
    fake.d_min = min_distance(fake.constellation.points);
    auto rep = verify_design(fake, cfg, ChannelSpec::flat());
    REQUIRE_FALSE(rep.clean());
    bool has_neg = false;
    for (const auto& f : rep.flags) has_neg |= f.find("negative time sample") != std::string::npos;
    CHECK(has_neg);

    // scaled-up constellation exceeding the budget
    DesignResult big;
    big.feasible = true;
    big.constellation.points = Eigen::MatrixXd::Zero(7, 4);
    for (int m = 0; m < 4; ++m) big.constellation.points(0, m) = 10.0 + m;
    big.d_min = min_distance(big.constellation.points);
    auto rep2 = verify_design(big, cfg, ChannelSpec::flat());
    REQUIRE_FALSE(rep2.clean());
    bool has_pow = false;
    for (const auto& f : rep2.flags) has_pow |= f.find("power") != std::string::npos;
    CHECK(has_pow);
}

TEST_CASE("selective-fading design respects the pre-equalized constraints") {
    ChannelSpec ch;
    ch.paths = {{1.0, 0}, {0.5, 1}};
    auto cfg = small_cfg(4, 8.0);
    DesignOptions opt;
    opt.restarts = 2;
    opt.seed = 5;
    auto res = scp_design(cfg, ch, opt);
    REQUIRE(res.feasible);
    CHECK(res.d_min > 0.5);
    auto rep = verify_design(res, cfg, ch);
    CHECK(rep.clean());
    // transmitted (pre-equalized) power within budget, samples non-negative
    CHECK(rep.min_sample >= -1e-7);
    Eigen::MatrixXd f = build_preequalizer(ch, cfg, 1.0).block_matrix();
    Eigen::MatrixXd eq_pts(cfg.dims(), cfg.M);
    for (int m = 0; m < cfg.M; ++m) eq_pts.col(m) = f * res.constellation.points.col(m);
    CHECK(average_power(eq_pts, cfg) <= cfg.p_total * (1.0 + 1e-7));
}

TEST_CASE("degenerate single-point design") {
    auto cfg = tiny_cfg();
    cfg.M = 1;
    cfg.n_bits = 0;
    DesignOptions opt;
    auto res = scp_design(cfg, ChannelSpec::flat(), opt);
    CHECK(res.feasible);
    CHECK(res.degenerate);
    CHECK(std::isinf(res.d_min));
    CHECK(res.constellation.points.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partial-mode budget exhausted by independent power is infeasible") {
    SystemConfig cfg;
    cfg.N = 8;
    cfg.n_joint = 1;
    cfg.M = 4;
    cfg.n_bits = 2;
    cfg.mode = DesignMode::Partial;
    cfg.p_indep = 2.0;
    cfg.p_total = 3.9;  // M_f = 2, so the joint budget is negative
    REQUIRE(is_valid(cfg));
    DesignOptions opt;
    auto res = scp_design(cfg, ChannelSpec::flat(), opt);
    CHECK_FALSE(res.feasible);
    CHECK(res.message.find("infeasible") != std::string::npos);
}

TEST_CASE("dynamic range cap binds") {
    auto cfg = small_cfg(4, 8.0);
    DesignOptions opt;
    opt.restarts = 2;
    opt.seed = 11;
    auto unconstrained = scp_design(cfg, ChannelSpec::flat(), opt);
    REQUIRE(unconstrained.feasible);
    auto rep_u = verify_design(unconstrained, cfg, ChannelSpec::flat());

    cfg.dynamic_range_max = 0.6 * rep_u.max_sample;
    auto capped = scp_design(cfg, ChannelSpec::flat(), opt);
    REQUIRE(capped.feasible);
    auto rep_c = verify_design(capped, cfg, ChannelSpec::flat());
    CHECK(rep_c.clean());
    CHECK(rep_c.max_sample <= cfg.dynamic_range_max * (1.0 + 1e-7));
    CHECK(capped.d_min <= unconstrained.d_min + 1e-6);
}

TEST_CASE("design is deterministic for a fixed seed") {
    auto cfg = small_cfg(8, 7.0);
    DesignOptions opt;
    opt.restarts = 3;
    opt.seed = 99;
    auto a = scp_design(cfg, ChannelSpec::flat(), opt);
    auto b = scp_design(cfg, ChannelSpec::flat(), opt);
    REQUIRE(a.feasible);
    CHECK(a.constellation.points == b.constellation.points);  // bitwise
    CHECK(a.d_min == b.d_min);
}
