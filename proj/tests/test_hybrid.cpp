#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lnm/error.hpp"
#include "lnm/hybrid.hpp"
#include "lnm/simulate.hpp"
#include "support/oracles.hpp"

using namespace lnm;

namespace {

CountVector counts(std::initializer_list<std::int64_t> v) {
    std::vector<std::int64_t> c(v);
    return CountVector(std::span<const std::int64_t>(c));
}

VariationalState start_at(const Eigen::VectorXd& m, const Eigen::VectorXd& v2) {
    VariationalState s;
    s.m = Eigen::VectorXd::Zero(m.size() + 1);
    s.m.head(m.size()) = m;
    s.v2 = Eigen::VectorXd::Zero(m.size() + 1);
    s.v2.head(m.size()) = v2;
    return s;
}

// Unnormalized log posterior written directly from its definition.
double log_post_oracle(const Eigen::VectorXd& eta, const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                       const Eigen::MatrixXd& sigma) {
    const Eigen::Index k = mu.size();
    double lse = 0.0;
    for (Eigen::Index j = 0; j <= k; ++j) lse += std::exp(eta[j]);
    lse = std::log(lse);
    const Eigen::VectorXd d = eta.head(k) - mu;
    return w.dot(eta) - w.sum() * lse - 0.5 * d.dot(sigma.llt().solve(d));
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace

TEST_CASE("log_posterior_eta") {
    oracle::Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index k = 1 + t % 4;
        const Eigen::VectorXd mu = oracle::random_normal(k, rng);
        const Eigen::MatrixXd sigma = oracle::random_spd(k, rng);
        const GaussianComponent comp(mu, sigma);
        const auto raw = oracle::random_counts(k + 1, 500, rng);
        const CountVector w{std::span<const std::int64_t>(raw)};
        PaddedVector a{Eigen::VectorXd::Zero(k + 1)}, b{Eigen::VectorXd::Zero(k + 1)};
        a.eta.head(k) = oracle::random_normal(k, rng, 2.0);
        b.eta.head(k) = oracle::random_normal(k, rng, 2.0);
        const double lib = log_posterior_eta(a, w, comp) - log_posterior_eta(b, w, comp);
        const double ref = log_post_oracle(a.eta, w.values(), mu, sigma) - log_post_oracle(b.eta, w.values(), mu, sigma);
        CHECK(std::abs(lib - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }

    SUBCASE("zero counts leave the prior term") {
        const GaussianComponent comp(Eigen::Vector2d(1.0, -1.0), Eigen::Matrix2d::Identity() * 2.0);
        const PaddedVector eta{Eigen::Vector3d(2.0, 0.0, 0.0)};
        CHECK(log_posterior_eta(eta, counts({0, 0, 0}), comp) == doctest::Approx(-0.25 * 2.0).epsilon(1e-15));
    }

    SUBCASE("dimension and padding errors") {
        const GaussianComponent comp(Eigen::Vector2d(0.0, 0.0), Eigen::Matrix2d::Identity());
        CHECK_THROWS_AS(log_posterior_eta(PaddedVector{Eigen::Vector3d(0, 0, 1)}, counts({1, 1, 1}), comp), ValidationError);
        CHECK_THROWS_AS(log_posterior_eta(PaddedVector{Eigen::Vector2d(0, 0)}, counts({1, 1, 1}), comp), ValidationError);
    }
}

TEST_CASE("metropolis_accept uses only the posterior difference") {
    CHECK(metropolis_accept(-10.0, -5.0, 0.999999));
    CHECK(metropolis_accept(3.0, 3.0 + std::log(0.5), 0.4));
    CHECK_FALSE(metropolis_accept(3.0, 3.0 + std::log(0.5), 0.6));
    CHECK(metropolis_accept(1e6, 1e6 + std::log(0.5), 0.4));
    CHECK_FALSE(metropolis_accept(1e6, 1e6 + std::log(0.5), 0.6));
}

TEST_CASE("prior recovery with zero counts") {
    const Eigen::Vector2d mu(0.5, -1.0);
    Eigen::Matrix2d sigma;
    sigma << 1.0, 0.3, 0.3, 0.5;
    const GaussianComponent comp(mu, sigma);
    ChainConfig chain;
    chain.r = 20000;
    chain.keep_samples = true;
    Rng rng(11);
    const ChainResult res = mh_chain(counts({0, 0, 0}), comp, start_at(mu, sigma.diagonal()), chain, rng);

    REQUIRE(res.samples.size() == 20000);
    // Batch-means standard error of each coordinate.
    constexpr int batches = 50;
    constexpr int per = 20000 / batches;
    for (Eigen::Index j = 0; j < 2; ++j) {
        std::vector<double> means(batches, 0.0);
        for (int b = 0; b < batches; ++b) {
            for (int s = 0; s < per; ++s) means[static_cast<std::size_t>(b)] += res.samples[static_cast<std::size_t>(b * per + s)][j];
            means[static_cast<std::size_t>(b)] /= per;
        }
        const double grand = std::accumulate(means.begin(), means.end(), 0.0) / batches;
        double var = 0.0;
        for (double m : means) var += (m - grand) * (m - grand);
        const double se = std::sqrt(var / (batches - 1) / batches);
        INFO("coordinate " << j << " mean " << res.mean[j] << " se " << se);
        CHECK(std::abs(res.mean[j] - mu[j]) < 3.0 * se);
    }
    const Eigen::Matrix2d cov = res.covariance.topLeftCorner(2, 2);
    CHECK(((cov - sigma).cwiseAbs().array() <= 0.1 * sigma.cwiseAbs().maxCoeff()).all());
    CHECK(std::abs(cov(0, 0) / sigma(0, 0) - 1.0) < 0.1);
    CHECK(std::abs(cov(1, 1) / sigma(1, 1) - 1.0) < 0.1);
    CHECK(res.acceptance > 0.05);
    CHECK(res.acceptance < 0.8);
}

TEST_CASE("chain samples a standard normal") {
    const GaussianComponent comp(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    ChainConfig chain;
    chain.r = 50000;
    chain.keep_samples = true;
    Rng rng(5);
    const ChainResult res = mh_chain(counts({0, 0}), comp, start_at(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)), chain, rng);
    for (double x : {-1.0, 0.0, 1.0}) {
        const double below = static_cast<double>(
            std::count_if(res.samples.begin(), res.samples.end(), [x](const Eigen::VectorXd& s) { return s[0] <= x; }));
        CHECK(std::abs(below / 50000.0 - normal_cdf(x)) < 0.02);
    }
    for (const auto& s : res.samples) REQUIRE(s[1] == 0.0);
    CHECK(res.mean[1] == 0.0);
    CHECK(res.covariance.row(1).isZero(0.0));
}

TEST_CASE("large counts pull the posterior to the empirical log ratio") {
    const GaussianComponent comp(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    const CountVector w = counts({300000, 100000});
    const double target = std::log(3.0);
    ChainConfig chain;
    chain.r = 5000;
    Rng rng(8);
    const double v2 = 1.0 / (400000.0 * 0.75 * 0.25);
    const ChainResult res = mh_chain(w, comp, start_at(Eigen::VectorXd::Constant(1, target), Eigen::VectorXd::Constant(1, v2)), chain, rng);
    CHECK(std::abs(res.mean[0] - target) < 0.05);
}

TEST_CASE("standard error of the chain mean shrinks like R^-1/2") {
    const GaussianComponent comp(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    const VariationalState start = start_at(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
    std::vector<double> log_r, log_se;
    for (int r : {1000, 4000, 16000}) {
        ChainConfig chain;
        chain.r = r;
        chain.burn_in = 500;
        constexpr int chains = 60;
        std::vector<double> means;
        for (int c = 0; c < chains; ++c) {
            Rng rng = make_stream(99, static_cast<std::uint64_t>(c));
            means.push_back(mh_chain(counts({0, 0}), comp, start, chain, rng).mean[0]);
        }
        const double avg = std::accumulate(means.begin(), means.end(), 0.0) / chains;
        double var = 0.0;
        for (double m : means) var += (m - avg) * (m - avg);
        log_r.push_back(std::log(static_cast<double>(r)));
        log_se.push_back(0.5 * std::log(var / (chains - 1)));
    }
    CHECK(log_se[1] < log_se[0]);
    CHECK(log_se[2] < log_se[1]);
    const double slope = (log_se[2] - log_se[0]) / (log_r[2] - log_r[0]);
    INFO("slope " << slope);
    CHECK(std::abs(slope + 0.5) < 0.15);
}

TEST_CASE("ChainConfig validation") {
    ChainConfig c;
    CHECK_NOTHROW(c.validate());
    c.r = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.burn_in = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("hybrid_refit") {
    SimSpec spec = builtin_spec("sim1");
    spec.sizes = {60, 40};
    spec.seed = 13;
    const LabeledDataset d = simulate_dataset(spec);
    FitConfig config;
    config.max_iter = 30;
    config.epsilon = 1e-300;
    MixtureFit f = fit(d.counts, 2, config);

    ChainConfig chain;
    chain.r = 500;
    chain.burn_in = 200;
    CHECK_THROWS_AS(hybrid_refit(d.counts, f, chain), ValidationError);
    f.converged = true;

    SUBCASE("variational moments reproduce the M-step") {
        const LatentSampler vga = [](std::size_t, const CountVector&, const GaussianComponent&, const VariationalState& s) {
            ChainResult r;
            r.mean = s.m;
            r.covariance = s.v2.asDiagonal();
            r.acceptance = 0.5;
            return r;
        };
        const HybridResult h = hybrid_refit(d.counts, f, vga, 1e-8);
        const MixtureFit m = m_step(d.counts, f, f.zhat, 1e-8);
        CHECK(h.pi == f.pi);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK((h.components[c].mu() - m.components[c].mu()).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((h.components[c].sigma() - m.components[c].sigma()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    SUBCASE("chain refit") {
        const HybridResult h = hybrid_refit(d.counts, f, chain);
        CHECK(h.pi == f.pi);
        CHECK(h.chain_component == f.hard_labels());
        REQUIRE(h.posterior_means.size() == d.counts.n());
        for (std::size_t i = 0; i < d.counts.n(); ++i) {
            CHECK(h.posterior_means[i][3] == 0.0);
            CHECK(h.acceptance[i] > 0.0);
            CHECK(h.acceptance[i] < 1.0);
        }
        for (const auto& c : h.components) CHECK(c.sigma().llt().info() == Eigen::Success);

        ChainConfig threaded = chain;
        threaded.threads = 3;
        const HybridResult t = hybrid_refit(d.counts, f, threaded);
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(t.components[c].mu() == h.components[c].mu());
            CHECK(t.components[c].sigma() == h.components[c].sigma());
        }
    }
}
