#include "lnm/hybrid.hpp"

#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "lnm/error.hpp"
#include "lnm/parallel.hpp"

namespace lnm {

namespace {

// Log posterior on the first K coordinates with preallocated scratch space.
class PosteriorEval {
public:
    PosteriorEval(const CountVector& w, const GaussianComponent& comp)
        : w_(w.values()), total_(w.total()), mu_(comp.mu()), prec_(comp.sigma_inv()), diff_(comp.k()), tmp_(comp.k()) {}

    double operator()(const Eigen::VectorXd& y) {
        const Eigen::Index k = y.size();
        const double mx = std::max(0.0, y.maxCoeff());
        double sum = std::exp(-mx);
        for (Eigen::Index j = 0; j < k; ++j) sum += std::exp(y[j] - mx);
        const double lse = mx + std::log(sum);
        diff_ = y - mu_;
        tmp_.noalias() = prec_ * diff_;
        return w_.head(k).dot(y) - total_ * lse - 0.5 * diff_.dot(tmp_);
    }

private:
    const Eigen::VectorXd& w_;
    double total_;
    const Eigen::VectorXd& mu_;
    const Eigen::MatrixXd& prec_;
    Eigen::VectorXd diff_;
    Eigen::VectorXd tmp_;
};

constexpr double kTargetAcceptance = 0.3;
constexpr int kAdaptBatch = 50;

}  // namespace

void ChainConfig::validate() const {
    if (r < 1) throw ValidationError("chain: r must be positive");
    if (burn_in < 0) throw ValidationError("chain: burn_in must be nonnegative");
    if (thin < 1) throw ValidationError("chain: thin must be at least 1");
}

double log_posterior_eta(const PaddedVector& eta, const CountVector& w, const GaussianComponent& comp) {
    const Eigen::Index k = comp.k();
    if (eta.eta.size() != k + 1 || w.size() != k + 1) throw ValidationError("log_posterior_eta: dimension mismatch");
    if (eta.eta[k] != 0.0) throw ValidationError("log_posterior_eta: last coordinate must be zero");
    PosteriorEval eval(w, comp);
    return eval(eta.eta.head(k));
}

bool metropolis_accept(double log_current, double log_proposal, double uniform01) {
    return std::log(uniform01) < log_proposal - log_current;
}

ChainResult mh_chain(const CountVector& w, const GaussianComponent& comp, const VariationalState& start,
                     const ChainConfig& chain, Rng& rng) {
    chain.validate();
    const Eigen::Index k = comp.k();
    if (start.m.size() != k + 1 || w.size() != k + 1) throw ValidationError("mh_chain: dimension mismatch");

    Eigen::VectorXd sd = start.v2.head(k).cwiseMax(kVMin * kVMin).cwiseSqrt();
    double scale = chain.proposal_scale > 0.0 ? chain.proposal_scale : 2.4 / std::sqrt(static_cast<double>(k));

    PosteriorEval eval(w, comp);
    Eigen::VectorXd current = start.m.head(k);
    double log_current = eval(current);
    Eigen::VectorXd proposal(k);

    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(k, k);
    long retained = 0;
    long accepted_after_burn = 0;
    long post_burn_steps = 0;
    int batch_accepts = 0;

    ChainResult result;
    if (chain.keep_samples) result.samples.reserve(static_cast<std::size_t>(chain.r));

    const long total_steps = static_cast<long>(chain.burn_in) + static_cast<long>(chain.r) * chain.thin;
    for (long step = 0; step < total_steps; ++step) {
        for (Eigen::Index j = 0; j < k; ++j) proposal[j] = current[j] + scale * sd[j] * normal(rng);
        const double log_prop = eval(proposal);
        const bool accept = metropolis_accept(log_current, log_prop, uniform(rng));
        if (accept) {
            current.swap(proposal);
            log_current = log_prop;
        }

        if (step < chain.burn_in) {
            batch_accepts += accept ? 1 : 0;
            if ((step + 1) % kAdaptBatch == 0) {
                const double rate = static_cast<double>(batch_accepts) / kAdaptBatch;
                scale *= std::exp(rate - kTargetAcceptance);
                batch_accepts = 0;
            }
            continue;
        }
        ++post_burn_steps;
        accepted_after_burn += accept ? 1 : 0;
        if ((step - chain.burn_in + 1) % chain.thin != 0) continue;
        sum += current;
        outer.noalias() += current * current.transpose();
        ++retained;
        if (chain.keep_samples) {
            Eigen::VectorXd padded = Eigen::VectorXd::Zero(k + 1);
            padded.head(k) = current;
            result.samples.push_back(std::move(padded));
        }
    }

    const auto r = static_cast<double>(retained);
    result.mean = Eigen::VectorXd::Zero(k + 1);
    result.mean.head(k) = sum / r;
    result.second_moment = Eigen::MatrixXd::Zero(k + 1, k + 1);
    result.second_moment.topLeftCorner(k, k) = outer / r;
    result.covariance = result.second_moment - result.mean * result.mean.transpose();
    result.acceptance = static_cast<double>(accepted_after_burn) / static_cast<double>(post_burn_steps);
    result.final_scale = scale;
    if (result.acceptance < 0.05 || result.acceptance > 0.8) {
        spdlog::warn("mh_chain: acceptance rate {:.3f} outside [0.05, 0.8]", result.acceptance);
    }
    return result;
}

HybridResult hybrid_refit(const CountMatrix& data, const MixtureFit& fit, const ChainConfig& chain, double ridge) {
    chain.validate();
    const std::uint64_t root = tagged_seed(chain.seed, stream_tag::mcmc);
    LatentSampler sampler = [&](std::size_t i, const CountVector& w, const GaussianComponent& comp,
                                const VariationalState& state) {
        Rng rng = make_stream(root, i);
        return mh_chain(w, comp, state, chain, rng);
    };
    return hybrid_refit(data, fit, sampler, ridge, chain.threads);
}

HybridResult hybrid_refit(const CountMatrix& data, const MixtureFit& fit, const LatentSampler& sampler, double ridge,
                          unsigned threads) {
    if (!fit.converged) throw ValidationError("hybrid refinement requires a converged fit");
    const std::size_t n = data.n();
    const Eigen::Index k = data.k();
    if (fit.n() != n || fit.zhat.rows() != static_cast<Eigen::Index>(n)) {
        throw ValidationError("fit does not match the data");
    }

    HybridResult out;
    out.chain_component = fit.hard_labels();
    out.posterior_means.resize(n);
    out.acceptance.resize(n);

    // Per-(i, g) latent moments: chain moments for the sampled component,
    // variational moments elsewhere.
    std::vector<ChainResult> sampled(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto c = static_cast<std::size_t>(out.chain_component[i]);
        sampled[i] = sampler(i, data.row(i), fit.components[c], fit.states[i][c]);
        out.posterior_means[i] = sampled[i].mean;
        out.acceptance[i] = sampled[i].acceptance;
    });

    out.pi.resize(fit.g);
    for (int c = 0; c < fit.g; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const double weight = fit.zhat.col(c).sum();
        if (weight < 1e-6) throw DegenerateError("empty component " + std::to_string(c + 1));

        auto moments = [&](std::size_t i) -> std::pair<const Eigen::VectorXd*, const ChainResult*> {
            if (static_cast<std::size_t>(out.chain_component[i]) == cu) return {&sampled[i].mean, &sampled[i]};
            return {&fit.states[i][cu].m, nullptr};
        };

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(k + 1);
        for (std::size_t i = 0; i < n; ++i) mean += fit.zhat(static_cast<Eigen::Index>(i), c) * *moments(i).first;
        mean /= weight;

        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = fit.zhat(static_cast<Eigen::Index>(i), c);
            const auto [m, chain_moments] = moments(i);
            const Eigen::VectorXd d = *m - mean;
            scatter.noalias() += z * (d * d.transpose());
            if (chain_moments != nullptr) {
                scatter += z * chain_moments->covariance;
            } else {
                scatter.diagonal() += z * fit.states[i][cu].v2;
            }
        }
        scatter /= weight;

        out.pi[c] = weight / static_cast<double>(n);
        Eigen::MatrixXd sigma = scatter.topLeftCorner(k, k);
        sigma.diagonal().array() += ridge * sigma.trace() / static_cast<double>(k);
        out.components.emplace_back(mean.head(k), 0.5 * (sigma + sigma.transpose()));
    }
    return out;
}

}  // namespace lnm
