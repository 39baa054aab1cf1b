#ifndef LNM_HYBRID_HPP
#define LNM_HYBRID_HPP

// Hybrid refinement of a converged variational fit.
//
// The classification of the variational fit is frozen. For every observation
// the posterior of the padded latent vector under its highest-responsibility
// component is sampled with random-walk Metropolis, and the component
// parameters are recomputed from responsibility-weighted posterior moments.
// Components an observation is not sampled under contribute their variational
// moments (m, V).

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "lnm/compositions.hpp"
#include "lnm/mixture.hpp"
#include "lnm/rng.hpp"
#include "lnm/varbound.hpp"

namespace lnm {

struct ChainConfig {
    int r = 10000;               // retained samples
    int burn_in = 2000;
    double proposal_scale = 0.0; // <= 0 selects 2.4 / sqrt(K)
    int thin = 1;
    std::uint64_t seed = 1;
    bool keep_samples = false;
    unsigned threads = 1;        // observations sampled concurrently; 0 = all cores

    void validate() const;
};

struct ChainResult {
    Eigen::VectorXd mean;           // K+1, last entry 0
    Eigen::MatrixXd second_moment;  // (1/R) sum eta eta'
    Eigen::MatrixXd covariance;     // (K+1) x (K+1), last row/col 0
    double acceptance = 0.0;        // over retained iterations
    double final_scale = 0.0;       // proposal multiplier after burn-in adaptation
    std::vector<Eigen::VectorXd> samples;  // only with keep_samples
};

struct HybridResult {
    Eigen::VectorXd pi;
    std::vector<GaussianComponent> components;
    std::vector<int> chain_component;              // 0-based component sampled per observation
    std::vector<Eigen::VectorXd> posterior_means;  // per observation, under chain_component
    std::vector<double> acceptance;
};

/// w' eta - N log sum exp(eta) - (eta - mu)' sigma^-1 (eta - mu) / 2.
double log_posterior_eta(const PaddedVector& eta, const CountVector& w, const GaussianComponent& comp);

/// Metropolis rule for a symmetric proposal: accept iff log u < lp - lc.
bool metropolis_accept(double log_current, double log_proposal, double uniform01);

/// Random-walk Metropolis on the first K coordinates, started at start.m with
/// per-coordinate proposal sd scale * sqrt(start.v2). During burn-in the
/// global scale adapts toward ~30% acceptance; it is frozen afterwards.
ChainResult mh_chain(const CountVector& w, const GaussianComponent& comp, const VariationalState& start,
                     const ChainConfig& chain, Rng& rng);

using LatentSampler =
    std::function<ChainResult(std::size_t i, const CountVector& w, const GaussianComponent& comp, const VariationalState& state)>;

/// Throws ValidationError when `fit` did not converge.
HybridResult hybrid_refit(const CountMatrix& data, const MixtureFit& fit, const ChainConfig& chain, double ridge = 1e-8);

/// Same, with a caller-supplied sampler for the per-observation moments. The
/// sampler is called concurrently when threads != 1.
HybridResult hybrid_refit(const CountMatrix& data, const MixtureFit& fit, const LatentSampler& sampler, double ridge = 1e-8,
                          unsigned threads = 1);

}  // namespace lnm

#endif
