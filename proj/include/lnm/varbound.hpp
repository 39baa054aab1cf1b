#ifndef LNM_VARBOUND_HPP
#define LNM_VARBOUND_HPP

// Variational Gaussian lower bound for one (observation, component) pair.
//
// The posterior of the padded latent vector is approximated by N(m, diag(v2))
// with m and v2 both zero in the last coordinate. The expectation of the
// log-sum-exp term is replaced by a first-order Taylor bound with auxiliary
// parameter xi. Updates are: xi in closed form, then one safeguarded Newton
// step on m, then one safeguarded Newton step per coordinate of v.
//
// Coordinate indices in this header are zero based.

#include <Eigen/Dense>

#include "lnm/compositions.hpp"

namespace lnm {

inline constexpr double kExpCap = 700.0;
inline constexpr double kVMin = 1e-6;
inline constexpr int kMaxHalvings = 20;

struct VariationalState {
    Eigen::VectorXd m;   // K+1, last entry 0
    Eigen::VectorXd v2;  // K+1, last entry 0, others > 0
    double xi = 1.0;
    // Set when an exponent argument hit kExpCap during the last update.
    bool exp_capped = false;

    /// m = eta, v2 = (1,...,1,0), xi = 1.
    static VariationalState initial(const PaddedVector& eta);
    Eigen::Index k() const noexcept { return m.size() - 1; }
};

/// Latent Gaussian N(mu, sigma) in log-ratio space with its padded forms.
class GaussianComponent {
public:
    GaussianComponent() = default;
    /// Throws DegenerateError if sigma is not symmetric positive definite.
    GaussianComponent(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

    const Eigen::VectorXd& mu() const noexcept { return mu_; }
    const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
    const Eigen::MatrixXd& sigma_inv() const noexcept { return sigma_inv_; }
    double log_det_sigma() const noexcept { return log_det_; }
    const Eigen::VectorXd& mu_tilde() const noexcept { return mu_tilde_; }
    const Eigen::MatrixXd& sigma_star() const noexcept { return sigma_star_; }
    Eigen::Index k() const noexcept { return mu_.size(); }

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd sigma_inv_;
    double log_det_ = 0.0;
    Eigen::VectorXd mu_tilde_;
    Eigen::MatrixXd sigma_star_;
};

/// exp(m + v2/2) with arguments capped at kExpCap.
Eigen::VectorXd expected_exp(const VariationalState& state, bool* capped = nullptr);

/// Closed-form maximizer of the bound in xi.
double update_xi(const VariationalState& state);

double elbo(const CountVector& w, const VariationalState& state, const GaussianComponent& comp);

Eigen::VectorXd grad_m(const CountVector& w, const VariationalState& state, const GaussianComponent& comp);
Eigen::MatrixXd hess_m(const CountVector& w, const VariationalState& state, const GaussianComponent& comp);

/// Damped Newton step on the first K coordinates of m. Falls back to a
/// gradient step when the Hessian block cannot be factorized. Never lowers the
/// bound: if no halving of the step improves it, the input is returned.
VariationalState newton_step_m(const VariationalState& state, const CountVector& w, const GaussianComponent& comp);

/// Derivatives with respect to the standard deviation v_k = sqrt(v2_k).
double grad_v(const CountVector& w, const VariationalState& state, const GaussianComponent& comp, Eigen::Index k);
double hess_v(const CountVector& w, const VariationalState& state, const GaussianComponent& comp, Eigen::Index k);

/// One damped Newton step per coordinate of v, clamped at kVMin.
VariationalState newton_step_v(const VariationalState& state, const CountVector& w, const GaussianComponent& comp);

/// xi -> m -> v, the fixed order used by the EM loop.
VariationalState update_state(const VariationalState& state, const CountVector& w, const GaussianComponent& comp);

}  // namespace lnm

#endif
