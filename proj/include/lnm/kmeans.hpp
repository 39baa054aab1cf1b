#ifndef LNM_KMEANS_HPP
#define LNM_KMEANS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace lnm {

struct KMeansResult {
    std::vector<int> labels;   // 0-based cluster index per row
    Eigen::MatrixXd centers;   // k x dim
    double inertia = 0.0;      // within-cluster sum of squares
    std::vector<int> sizes;
};

/// Lloyd iterations from a k-means++ seeding. Rows of `points` are items.
KMeansResult kmeans_single(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iter = 300);

/// Best-inertia run among `restarts` seeds whose clusters all have at least
/// `min_size` members. Throws DegenerateError("degenerate initialization")
/// when no restart qualifies.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, std::uint64_t seed, int min_size = 2);

}  // namespace lnm

#endif
