#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "dcio/labeling.hpp"

using namespace dcio;
using Catch::Approx;

namespace {

Eigen::MatrixXd collinear_points(int m, double spacing) {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(1, m);
    for (int i = 0; i < m; ++i) pts(0, i) = spacing * i;
    return pts;
}

double exhaustive_best_cost(const Eigen::MatrixXd& points, double n0) {
    const int m = static_cast<int>(points.cols());
    std::vector<std::uint32_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    const Eigen::MatrixXd w = pairwise_error_weights(points, n0);
    double best = std::numeric_limits<double>::infinity();
    do {
        BitLabeling l;
        l.word_of = perm;
        best = std::min(best, labeling_cost(l, w));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("two-point cost is twice the single pair term") {
    Eigen::MatrixXd pts(1, 2);
    pts << 0.0, 1.5;
    const double n0 = 0.2;
    BitLabeling l = BitLabeling::natural(2);
    const double expected = 2.0 * 1.0 * qfunc(1.5 / std::sqrt(2.0 * n0));
    CHECK(labeling_cost(l, pts, n0) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("Gray labels beat natural binary on four collinear points") {
    Eigen::MatrixXd pts = collinear_points(4, 1.0);
    const double n0 = labeling_reference_n0(pts);
    BitLabeling gray;
    gray.word_of = {0b00, 0b01, 0b11, 0b10};
    BitLabeling binary;
    binary.word_of = {0b00, 0b01, 0b10, 0b11};
    CHECK(labeling_cost(gray, pts, n0) < labeling_cost(binary, pts, n0));
}

TEST_CASE("scaling distances up strictly lowers the cost") {
    Eigen::MatrixXd pts = collinear_points(4, 1.0);
    const double n0 = labeling_reference_n0(pts);
    BitLabeling l = BitLabeling::natural(4);
    CHECK(labeling_cost(l, 1.4 * pts, n0) < labeling_cost(l, pts, n0));
}

TEST_CASE("BSA on two points: degenerate, any labeling optimal") {
    Eigen::MatrixXd pts(1, 2);
    pts << 0.0, 1.0;
    auto res = bsa_optimize(pts, 0.1, 3);
    CHECK(res.labeling.is_bijection());
    CHECK(res.cost == Approx(2.0 * qfunc(1.0 / std::sqrt(0.2))).epsilon(1e-12));
}

TEST_CASE("BSA recovers the exhaustive optimum on four collinear points") {
    Eigen::MatrixXd pts = collinear_points(4, 1.0);
    const double n0 = labeling_reference_n0(pts);
    auto res = bsa_optimize(pts, n0, 17);
    const double best = exhaustive_best_cost(pts, n0);
    CHECK(res.cost == Approx(best).epsilon(1e-9));
    // the optimum is Gray-equivalent: adjacent words differ in one bit
    for (int i = 0; i + 1 < 4; ++i)
        CHECK(hamming_distance(res.labeling.word_of[i], res.labeling.word_of[i + 1]) == 1);
}

TEST_CASE("BSA cost trace is monotone non-increasing") {
    std::mt19937_64 rng(31);
    Eigen::MatrixXd pts(3, 16);
    for (int i = 0; i < pts.size(); ++i) pts(i / 16, i % 16) = uniform_range(rng, -2.0, 2.0);
    const double n0 = labeling_reference_n0(pts);
    auto res = bsa_optimize(pts, n0, 5);
    REQUIRE_FALSE(res.cost_trace.empty());
    for (std::size_t i = 1; i < res.cost_trace.size(); ++i)
        CHECK(res.cost_trace[i] <= res.cost_trace[i - 1] + 1e-12);
}

TEST_CASE("BSA result is swap-local-optimal") {
    std::mt19937_64 rng(37);
    Eigen::MatrixXd pts(3, 8);
    for (int i = 0; i < pts.size(); ++i) pts(i / 8, i % 8) = uniform_range(rng, -2.0, 2.0);
    const double n0 = labeling_reference_n0(pts);
    auto res = bsa_optimize(pts, n0, 5);
    const Eigen::MatrixXd w = pairwise_error_weights(pts, n0);
    const double base = labeling_cost(res.labeling, w);
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) {
            BitLabeling swapped = res.labeling;
            std::swap(swapped.word_of[i], swapped.word_of[j]);
            CHECK(labeling_cost(swapped, w) >= base - 1e-12 * std::max(1.0, base));
        }
}

TEST_CASE("bits per symbol error: binary case is exactly one") {
    Eigen::MatrixXd pts(1, 2);
    pts << 0.0, 1.0;
    BitLabeling l = BitLabeling::natural(2);
    CHECK(bits_per_symbol_error(l, pts, 0.3) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bits per symbol error: orthogonal equidistant four-point set") {
    // scaled identity columns: all pairwise distances equal, so lambda is
    // the average Hamming distance 4/3 for any labeling
    Eigen::MatrixXd pts = 1.7 * Eigen::MatrixXd::Identity(4, 4);
    BitLabeling l = BitLabeling::natural(4);
    CHECK(bits_per_symbol_error(l, pts, 0.25) == Approx(4.0 / 3.0).epsilon(1e-12));
    BitLabeling shuffled;
    shuffled.word_of = {2, 0, 3, 1};
    CHECK(bits_per_symbol_error(shuffled, pts, 0.25) == Approx(4.0 / 3.0).epsilon(1e-12));
}
