#include "lnm/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "lnm/error.hpp"
#include "lnm/rng.hpp"

namespace lnm {

namespace {

double sq_dist(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

Eigen::MatrixXd plus_plus_seed(const Eigen::MatrixXd& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centers(k, x.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));

    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, centers, c - 1));
        }
        double total = 0.0;
        for (double v : d2) total += v;
        Eigen::Index chosen = pick(rng);
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= d2[static_cast<std::size_t>(i)];
                if (target <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.row(c) = x.row(chosen);
    }
    return centers;
}

}  // namespace

KMeansResult kmeans_single(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iter) {
    const Eigen::Index n = points.rows();
    if (k < 1 || n < k) throw ValidationError("k-means needs at least k points");
    Rng rng(seed);

    KMeansResult r;
    r.centers = plus_plus_seed(points, k, rng);
    r.labels.assign(static_cast<std::size_t>(n), -1);

    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points, i, r.centers, 0);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(points, i, r.centers, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (r.labels[static_cast<std::size_t>(i)] != best) {
                r.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = r.labels[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < k; ++c) {
            // an emptied cluster keeps its previous center
            if (counts[static_cast<std::size_t>(c)] > 0) r.centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        }
    }

    r.sizes.assign(static_cast<std::size_t>(k), 0);
    r.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = r.labels[static_cast<std::size_t>(i)];
        ++r.sizes[static_cast<std::size_t>(c)];
        r.inertia += sq_dist(points, i, r.centers, c);
    }
    return r;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, std::uint64_t seed, int min_size) {
    KMeansResult best;
    bool found = false;
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        KMeansResult cand = kmeans_single(points, k, stream_seed(seed, static_cast<std::uint64_t>(r)));
        const bool valid = std::all_of(cand.sizes.begin(), cand.sizes.end(), [&](int s) { return s >= min_size; });
        if (!valid) continue;
        if (!found || cand.inertia < best.inertia) {
            best = std::move(cand);
            found = true;
        }
    }
    if (!found) throw DegenerateError("degenerate initialization");
    return best;
}

}  // namespace lnm
