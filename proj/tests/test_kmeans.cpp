#include <doctest.h>

#include <random>

#include "lnm/error.hpp"
#include "lnm/kmeans.hpp"
#include "lnm/mixture.hpp"
#include "lnm/rng.hpp"

using namespace lnm;

namespace {

// Two blobs of n points each, unit spread, centers 10 sd apart.
Eigen::MatrixXd blobs(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(2 * n, 3);
    for (int i = 0; i < 2 * n; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = normal(rng) + (i < n && j == 0 ? 10.0 : 0.0);
    }
    return x;
}

}  // namespace

TEST_CASE("separated blobs are recovered exactly") {
    const Eigen::MatrixXd x = blobs(50, 3);
    const KMeansResult r = kmeans(x, 2, 10, 11);
    std::vector<int> truth(100, 0);
    for (int i = 50; i < 100; ++i) truth[static_cast<std::size_t>(i)] = 1;
    CHECK(ari(r.labels, truth) == 1.0);
    CHECK(r.sizes == std::vector<int>{50, 50});

    // Inertia equals the within-cluster sum of squares of the returned labels.
    double ss = 0.0;
    for (int i = 0; i < 100; ++i) ss += (x.row(i) - r.centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
    CHECK(r.inertia == doctest::Approx(ss).epsilon(1e-12));
}

TEST_CASE("best restart has the smallest inertia") {
    const Eigen::MatrixXd x = blobs(30, 5);
    const KMeansResult best = kmeans(x, 4, 8, 17, 1);
    for (std::uint64_t r = 0; r < 8; ++r) CHECK(best.inertia <= kmeans_single(x, 4, stream_seed(17, r)).inertia);
}

TEST_CASE("fixed seed is reproducible") {
    const Eigen::MatrixXd x = blobs(40, 9);
    const KMeansResult a = kmeans(x, 3, 5, 123);
    const KMeansResult b = kmeans(x, 3, 5, 123);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("degenerate initialization") {
    // Five points with three identical: every 4-cluster partition has a
    // singleton group.
    Eigen::MatrixXd x(5, 1);
    x << 0, 0, 0, 5, 10;
    CHECK_THROWS_WITH_AS(kmeans(x, 4, 5, 1), "degenerate initialization", DegenerateError);
}
