#include "lnm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <spdlog/spdlog.h>

#include "lnm/error.hpp"
#include "lnm/kmeans.hpp"
#include "lnm/rng.hpp"

namespace lnm {

namespace {

Eigen::MatrixXd regularize(Eigen::MatrixXd sigma, double ridge) {
    const auto k = static_cast<double>(sigma.rows());
    sigma.diagonal().array() += ridge * sigma.trace() / k;
    return 0.5 * (sigma + sigma.transpose());
}

double log_sum_exp(const Eigen::VectorXd& a) {
    const double mx = a.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((a.array() - mx).exp().sum());
}

}  // namespace

void FitConfig::validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
    if (max_iter < 3) throw ValidationError("max_iter must be at least 3");
    if (gmin < 1 || gmax < gmin) throw ValidationError("G range must satisfy 1 <= gmin <= gmax");
    if (kmeans_restarts < 1) throw ValidationError("kmeans_restarts must be at least 1");
    if (!(pseudocount > 0.0)) throw ValidationError("pseudocount must be positive");
    if (!(ridge >= 0.0)) throw ValidationError("ridge must be nonnegative");
}

std::vector<int> MixtureFit::hard_labels() const {
    std::vector<int> labels(static_cast<std::size_t>(zhat.rows()));
    for (Eigen::Index i = 0; i < zhat.rows(); ++i) {
        Eigen::Index best = 0;
        zhat.row(i).maxCoeff(&best);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

bool aitken_check(AitkenTracker& t, double epsilon) {
    const std::size_t n = t.values.size();
    if (n < 3) return false;
    const double l0 = t.values[n - 3];
    const double l1 = t.values[n - 2];
    const double l2 = t.values[n - 1];

    t.prev_l_inf = t.l_inf;
    t.has_prev_l_inf = t.has_l_inf;

    const double denom = l1 - l0;
    if (denom == 0.0) {
        t.a = 0.0;
        t.l_inf = l2;
        t.has_l_inf = true;
        return true;
    }
    t.a = (l2 - l1) / denom;
    t.l_inf = l1 + (l2 - l1) / (1.0 - t.a);
    t.has_l_inf = true;
    if (!t.has_prev_l_inf || !std::isfinite(t.l_inf) || !std::isfinite(t.prev_l_inf)) return false;
    return std::abs(t.l_inf - t.prev_l_inf) < epsilon && std::abs(l2 - l1) < 10.0 * epsilon;
}

MixtureFit init_fit(const CountMatrix& data, int g, const FitConfig& config) {
    config.validate();
    data.require_positive_totals();
    const std::size_t n = data.n();
    const Eigen::Index k = data.k();
    if (g < 1 || n < static_cast<std::size_t>(g)) throw ValidationError("need 1 <= G <= n");
    if (k < 1) throw ValidationError("need at least two taxa");

    std::vector<PaddedVector> etas;
    etas.reserve(n);
    Eigen::MatrixXd points(static_cast<Eigen::Index>(n), k);
    for (std::size_t i = 0; i < n; ++i) {
        etas.push_back(counts_to_latent(data.row(i), config.pseudocount));
        points.row(static_cast<Eigen::Index>(i)) = etas.back().eta.head(k).transpose();
    }

    std::vector<int> labels(n, 0);
    std::vector<int> sizes{static_cast<int>(n)};
    if (g > 1) {
        const auto seed = stream_seed(tagged_seed(config.seed, stream_tag::kmeans), static_cast<std::uint64_t>(g));
        KMeansResult km = kmeans(points, g, config.kmeans_restarts, seed);
        labels = std::move(km.labels);
        sizes = std::move(km.sizes);
    }

    MixtureFit fit;
    fit.g = g;
    fit.pi.resize(g);
    fit.zhat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), g);
    for (int c = 0; c < g; ++c) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == c) mean += points.row(static_cast<Eigen::Index>(i)).transpose();
        }
        mean /= sizes[static_cast<std::size_t>(c)];
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != c) continue;
            const Eigen::VectorXd d = points.row(static_cast<Eigen::Index>(i)).transpose() - mean;
            cov.noalias() += d * d.transpose();
        }
        cov /= sizes[static_cast<std::size_t>(c)];
        fit.components.emplace_back(mean, regularize(cov, config.ridge));
        fit.pi[c] = static_cast<double>(sizes[static_cast<std::size_t>(c)]) / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) fit.zhat(static_cast<Eigen::Index>(i), labels[i]) = 1.0;

    fit.states.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) fit.states[i].assign(static_cast<std::size_t>(g), VariationalState::initial(etas[i]));
    return fit;
}

Eigen::MatrixXd elbo_matrix(const CountMatrix& data, const MixtureFit& fit) {
    const auto n = static_cast<Eigen::Index>(data.n());
    Eigen::MatrixXd bounds(n, fit.g);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < fit.g; ++c) {
            bounds(i, c) = elbo(data.row(static_cast<std::size_t>(i)), fit.states[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)],
                                fit.components[static_cast<std::size_t>(c)]);
        }
    }
    return bounds;
}

Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& bounds, const Eigen::VectorXd& pi) {
    Eigen::MatrixXd z(bounds.rows(), bounds.cols());
    const Eigen::ArrayXd log_pi = pi.array().log();
    for (Eigen::Index i = 0; i < bounds.rows(); ++i) {
        const Eigen::ArrayXd b = bounds.row(i).transpose().array();
        Eigen::ArrayXd a = (b - b.maxCoeff()) + log_pi;
        const double mx = a.maxCoeff();
        if (!std::isfinite(mx)) {
            throw DegenerateError("numeric failure in responsibilities for observation " + std::to_string(i + 1));
        }
        a = (a - mx).exp();
        z.row(i) = (a / a.sum()).matrix().transpose();
    }
    return z;
}

Eigen::MatrixXd e_step(const CountMatrix& data, const MixtureFit& fit) {
    return responsibilities(elbo_matrix(data, fit), fit.pi);
}

MixtureFit update_variational(const CountMatrix& data, MixtureFit fit, bool shared_xi) {
    for (std::size_t i = 0; i < fit.n(); ++i) {
        const CountVector& w = data.row(i);
        auto& row = fit.states[i];
        if (shared_xi) {
            Eigen::Index best = 0;
            fit.zhat.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
            const double xi = update_xi(row[static_cast<std::size_t>(best)]);
            for (std::size_t c = 0; c < row.size(); ++c) {
                row[c].xi = xi;
                row[c] = newton_step_v(newton_step_m(row[c], w, fit.components[c]), w, fit.components[c]);
            }
        } else {
            for (std::size_t c = 0; c < row.size(); ++c) row[c] = update_state(row[c], w, fit.components[c]);
        }
    }
    return fit;
}

MixtureFit m_step(const CountMatrix& data, MixtureFit fit, const Eigen::MatrixXd& zhat, double ridge) {
    const std::size_t n = data.n();
    const Eigen::Index k = data.k();
    if (zhat.rows() != static_cast<Eigen::Index>(n) || zhat.cols() != fit.g) {
        throw ValidationError("responsibility matrix has the wrong shape");
    }
    fit.zhat = zhat;

    std::vector<GaussianComponent> comps;
    comps.reserve(static_cast<std::size_t>(fit.g));
    for (int c = 0; c < fit.g; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const double weight = zhat.col(c).sum();
        if (weight < 1e-6) throw DegenerateError("empty component " + std::to_string(c + 1));
        if (weight < static_cast<double>(k + 1)) {
            ++fit.small_cluster_warnings;
            spdlog::warn("small cluster: component {} has effective size {:.3g}", c + 1, weight);
        }

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(k + 1);
        for (std::size_t i = 0; i < n; ++i) mean += zhat(static_cast<Eigen::Index>(i), c) * fit.states[i][cu].m;
        mean /= weight;

        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = zhat(static_cast<Eigen::Index>(i), c);
            const auto& s = fit.states[i][cu];
            const Eigen::VectorXd d = s.m - mean;
            scatter.noalias() += z * (d * d.transpose());
            scatter.diagonal() += z * s.v2;
        }
        scatter /= weight;

        fit.pi[c] = weight / static_cast<double>(n);
        comps.emplace_back(mean.head(k), regularize(scatter.topLeftCorner(k, k), ridge));
    }
    fit.components = std::move(comps);
    return fit;
}

double surrogate_loglik(const CountMatrix& data, const MixtureFit& fit) {
    const Eigen::MatrixXd bounds = elbo_matrix(data, fit);
    double total = 0.0;
    for (Eigen::Index i = 0; i < bounds.rows(); ++i) {
        for (int c = 0; c < fit.g; ++c) {
            const double z = fit.zhat(i, c);
            if (z == 0.0) continue;
            total += z * (std::log(fit.pi[c]) + bounds(i, c));
        }
    }
    return total;
}

namespace {

double observed_bound(const CountMatrix& data, const MixtureFit& fit) {
    const Eigen::MatrixXd bounds = elbo_matrix(data, fit);
    const Eigen::VectorXd log_pi = fit.pi.array().log();
    double total = 0.0;
    for (Eigen::Index i = 0; i < bounds.rows(); ++i) total += log_sum_exp(bounds.row(i).transpose() + log_pi);
    return total;
}

}  // namespace

MixtureFit fit(const CountMatrix& data, int g, const FitConfig& config, const IterationObserver& observer) {
    MixtureFit current = init_fit(data, g, config);
    AitkenTracker tracker;
    MixtureFit best;
    double best_value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iter = 0;

    while (iter < config.max_iter) {
        ++iter;
        Eigen::MatrixXd zhat = e_step(data, current);
        current.zhat = zhat;
        current = update_variational(data, std::move(current), config.shared_xi);
        current = m_step(data, std::move(current), zhat, config.ridge);

        const double value = surrogate_loglik(data, current);
        if (!std::isfinite(value)) throw DegenerateError("surrogate log-likelihood is not finite");
        current.surrogate = value;
        tracker.push(value);
        if (observer) observer(iter, current);
        if (value > best_value) {
            best_value = value;
            best = current;
        }
        if (aitken_check(tracker, config.epsilon)) {
            converged = true;
            break;
        }
    }

    best.elbo_trace = tracker.values;
    best.converged = converged;
    best.iterations = iter;
    best.bic = bic(best, data.n());
    best.observed_bound = observed_bound(data, best);
    spdlog::debug("G={} iterations={} converged={} surrogate={:.6f} bic={:.4f}", g, iter, converged, best.surrogate,
                  best.bic);
    return best;
}

long count_free_params(int g, long k) {
    return (k + 1) * k / 2 * g + k * g + g - 1;
}

double bic(const MixtureFit& fit, std::size_t n) {
    const long d = count_free_params(fit.g, static_cast<long>(fit.k()));
    return -2.0 * fit.surrogate + static_cast<double>(d) * std::log(static_cast<double>(n));
}

const MixtureFit& select_model(std::span<const MixtureFit> fits) {
    if (fits.empty()) throw ValidationError("select_model: no candidate fits");
    const MixtureFit* best = &fits.front();
    for (const auto& f : fits.subspan(1)) {
        if (f.bic < best->bic || (f.bic == best->bic && f.g < best->g)) best = &f;
    }
    return *best;
}

double ari(std::span<const int> labels_a, std::span<const int> labels_b) {
    if (labels_a.size() != labels_b.size()) throw ValidationError("ari: label vectors differ in length");
    if (labels_a.size() < 2) throw ValidationError("ari: need at least two labels");

    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows;
    std::map<int, double> cols;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        cells[{labels_a[i], labels_b[i]}] += 1.0;
        rows[labels_a[i]] += 1.0;
        cols[labels_b[i]] += 1.0;
    }
    auto pairs = [](double x) { return 0.5 * x * (x - 1.0); };
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, count] : cells) index += pairs(count);
    for (const auto& [key, count] : rows) sum_a += pairs(count);
    for (const auto& [key, count] : cols) sum_b += pairs(count);

    const double total = pairs(static_cast<double>(labels_a.size()));
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

}  // namespace lnm
