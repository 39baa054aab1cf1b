#ifndef LNM_MIXTURE_HPP
#define LNM_MIXTURE_HPP

// Finite mixtures of logistic normal multinomial models fitted by
// variational EM.
//
// Each iteration runs
//   1. responsibilities from exponentiated per-component bounds,
//   2. one xi / m / v update per (observation, component) pair,
//   3. weighted-moment updates of (pi, mu, sigma),
// and appends the complete-data surrogate to the trace. Iteration stops on
// the Aitken criterion or at max_iter.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lnm/compositions.hpp"
#include "lnm/varbound.hpp"

namespace lnm {

struct FitConfig {
    double epsilon = 1e-3;
    int max_iter = 500;
    int gmin = 1;
    int gmax = 1;
    std::uint64_t seed = 1;
    int kmeans_restarts = 10;
    double pseudocount = 1.0;
    double ridge = 1e-8;
    // One xi per observation, taken from its highest-responsibility component,
    // instead of one per (observation, component) pair.
    bool shared_xi = false;

    /// Throws ValidationError on out-of-range settings.
    void validate() const;
};

struct MixtureFit {
    int g = 0;
    Eigen::VectorXd pi;
    std::vector<GaussianComponent> components;
    Eigen::MatrixXd zhat;                               // n x G
    std::vector<std::vector<VariationalState>> states;  // [i][g]
    std::vector<double> elbo_trace;
    double surrogate = 0.0;  // surrogate of this snapshot
    double bic = 0.0;
    bool converged = false;
    int iterations = 0;
    int small_cluster_warnings = 0;
    // log sum_g pi_g exp(F_ig) summed over i; diagnostic only
    double observed_bound = 0.0;

    std::size_t n() const noexcept { return states.size(); }
    Eigen::Index k() const noexcept { return components.empty() ? 0 : components.front().k(); }
    /// argmax of each responsibility row (0-based).
    std::vector<int> hard_labels() const;
};

/// Aitken extrapolation over the last three surrogate values.
struct AitkenTracker {
    std::vector<double> values;  // full history; only the last three are used
    double a = 0.0;
    double l_inf = 0.0;
    double prev_l_inf = 0.0;
    bool has_l_inf = false;
    bool has_prev_l_inf = false;

    void push(double v) { values.push_back(v); }
};

/// Updates the tracker's acceleration estimate and returns true when
/// |l_inf(t) - l_inf(t-1)| < epsilon and the last increment is below
/// 10 * epsilon. A zero previous increment counts as converged.
bool aitken_check(AitkenTracker& tracker, double epsilon);

MixtureFit init_fit(const CountMatrix& data, int g, const FitConfig& config);

/// n x G matrix of per-pair bounds F_ig.
Eigen::MatrixXd elbo_matrix(const CountMatrix& data, const MixtureFit& fit);

/// Row-wise pi_g exp(F_ig) / sum_j pi_j exp(F_ij) with a max shift.
Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& bounds, const Eigen::VectorXd& pi);

Eigen::MatrixXd e_step(const CountMatrix& data, const MixtureFit& fit);

MixtureFit update_variational(const CountMatrix& data, MixtureFit fit, bool shared_xi = false);

/// Moment updates of pi, mu and sigma; stores `zhat` in the result.
MixtureFit m_step(const CountMatrix& data, MixtureFit fit, const Eigen::MatrixXd& zhat, double ridge = 1e-8);

/// Complete-data surrogate with z replaced by zhat.
double surrogate_loglik(const CountMatrix& data, const MixtureFit& fit);

using IterationObserver = std::function<void(int iteration, const MixtureFit&)>;

/// Runs the full loop; the returned snapshot is the one with the highest
/// surrogate, with the complete trace attached.
MixtureFit fit(const CountMatrix& data, int g, const FitConfig& config, const IterationObserver& observer = {});

long count_free_params(int g, long k);
double bic(const MixtureFit& fit, std::size_t n);

/// Minimal BIC; ties go to the smaller G.
const MixtureFit& select_model(std::span<const MixtureFit> fits);

double ari(std::span<const int> labels_a, std::span<const int> labels_b);

}  // namespace lnm

#endif
