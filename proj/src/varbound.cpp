#include "lnm/varbound.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lnm/error.hpp"

namespace lnm {

namespace {

void check_dims(const CountVector& w, const VariationalState& s, const GaussianComponent& c) {
    const Eigen::Index kp1 = c.k() + 1;
    if (w.size() != kp1 || s.m.size() != kp1 || s.v2.size() != kp1) {
        throw ValidationError("dimension mismatch between counts (" + std::to_string(w.size()) +
                              "), variational state (" + std::to_string(s.m.size()) + ") and component (" +
                              std::to_string(kp1) + ")");
    }
    if (!(s.xi > 0.0)) throw ValidationError("xi must be positive");
}

double capped_exp(double arg, bool& capped) {
    if (arg > kExpCap) {
        capped = true;
        arg = kExpCap;
    }
    return std::exp(arg);
}

// exp(min(a + delta, cap)) - exp(min(a, cap)) without cancellation.
double exp_diff(double a, double delta) {
    if (a <= kExpCap && a + delta <= kExpCap) return std::exp(a) * std::expm1(delta);
    const double ca = std::min(a, kExpCap);
    return std::exp(ca) * std::expm1(std::min(a + delta, kExpCap) - ca);
}

// Change in the m-dependent terms of the bound when m moves to `trial`
// (xi, v fixed), computed term by term so that small gains near the optimum
// are not lost to rounding.
double m_gain(const CountVector& w, const VariationalState& from, const VariationalState& trial,
              const GaussianComponent& c) {
    const Eigen::Index k = c.k();
    const Eigen::VectorXd delta = trial.m.head(k) - from.m.head(k);
    double exp_change = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) exp_change += exp_diff(from.m[j] + 0.5 * from.v2[j], delta[j]);
    const Eigen::VectorXd d = from.m.head(k) - c.mu();
    const double quad_change = delta.dot(c.sigma_inv() * (2.0 * d + delta));
    return w.values().head(k).dot(delta) - w.total() * exp_change / from.xi - 0.5 * quad_change;
}

// Change in the v_k-dependent terms of the bound when v moves to `cand`.
double v_gain(double v, double cand, double m_k, double prec_kk, double scale) {
    const double dv = cand - v;
    return std::log1p(dv / v) - 0.5 * prec_kk * dv * (cand + v) -
           scale * exp_diff(m_k + 0.5 * v * v, 0.5 * dv * (cand + v));
}

}  // namespace

VariationalState VariationalState::initial(const PaddedVector& eta) {
    VariationalState s;
    s.m = eta.eta;
    s.v2 = Eigen::VectorXd::Ones(eta.eta.size());
    s.v2[s.v2.size() - 1] = 0.0;
    s.xi = 1.0;
    return s;
}

GaussianComponent::GaussianComponent(Eigen::VectorXd mu, Eigen::MatrixXd sigma)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    PaddedParams p = pad_params(mu_, sigma_);
    const Eigen::Index k = mu_.size();
    sigma_inv_ = p.sigma_star.topLeftCorner(k, k);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    log_det_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    mu_tilde_ = std::move(p.mu_tilde.eta);
    sigma_star_ = std::move(p.sigma_star);
}

Eigen::VectorXd expected_exp(const VariationalState& state, bool* capped) {
    bool hit = false;
    Eigen::VectorXd e(state.m.size());
    for (Eigen::Index j = 0; j < e.size(); ++j) e[j] = capped_exp(state.m[j] + 0.5 * state.v2[j], hit);
    if (capped) *capped = hit;
    return e;
}

double update_xi(const VariationalState& state) {
    return expected_exp(state).sum();
}

double elbo(const CountVector& w, const VariationalState& s, const GaussianComponent& c) {
    check_dims(w, s, c);
    const Eigen::Index k = c.k();
    const double n_total = w.total();
    const Eigen::VectorXd d = s.m.head(k) - c.mu();
    const Eigen::VectorXd v2 = s.v2.head(k);

    double value = w.values().dot(s.m);
    value -= n_total * (expected_exp(s).sum() / s.xi - 1.0 + std::log(s.xi));
    value -= 0.5 * c.log_det_sigma();
    value -= 0.5 * d.dot(c.sigma_inv() * d);
    value -= 0.5 * c.sigma_inv().diagonal().dot(v2);
    value += 0.5 * v2.array().log().sum();
    value += 0.5 * static_cast<double>(k);
    return value;
}

Eigen::VectorXd grad_m(const CountVector& w, const VariationalState& s, const GaussianComponent& c) {
    check_dims(w, s, c);
    return w.values() - c.sigma_star() * (s.m - c.mu_tilde()) - (w.total() / s.xi) * expected_exp(s);
}

Eigen::MatrixXd hess_m(const CountVector& w, const VariationalState& s, const GaussianComponent& c) {
    check_dims(w, s, c);
    Eigen::MatrixXd h = -c.sigma_star();
    h.diagonal() -= (w.total() / s.xi) * expected_exp(s);
    return h;
}

VariationalState newton_step_m(const VariationalState& state, const CountVector& w, const GaussianComponent& comp) {
    const Eigen::Index k = comp.k();
    const Eigen::VectorXd g = grad_m(w, state, comp).head(k);
    const Eigen::MatrixXd neg_h = -hess_m(w, state, comp).topLeftCorner(k, k);

    Eigen::VectorXd direction;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    if (llt.info() == Eigen::Success) {
        direction = llt.solve(g);
    } else {
        direction = g;
    }
    if (!direction.allFinite()) direction = g;

    VariationalState out = state;
    out.m[k] = 0.0;
    bool capped = false;
    expected_exp(state, &capped);
    out.exp_capped = capped;

    VariationalState trial = out;
    double step = 1.0;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
        trial.m.head(k) = out.m.head(k) + step * direction;
        if (m_gain(w, out, trial, comp) >= 0.0) {
            expected_exp(trial, &capped);
            trial.exp_capped = capped;
            return trial;
        }
    }
    return out;
}

double grad_v(const CountVector& w, const VariationalState& s, const GaussianComponent& c, Eigen::Index k) {
    check_dims(w, s, c);
    if (k < 0 || k >= c.k()) throw ValidationError("grad_v: coordinate index out of range");
    if (!(s.v2[k] > 0.0)) throw ValidationError("grad_v: v_k must be positive");
    const double v = std::sqrt(s.v2[k]);
    bool capped = false;
    const double e = capped_exp(s.m[k] + 0.5 * s.v2[k], capped);
    return 1.0 / v - v * c.sigma_inv()(k, k) - (w.total() / s.xi) * e * v;
}

double hess_v(const CountVector& w, const VariationalState& s, const GaussianComponent& c, Eigen::Index k) {
    check_dims(w, s, c);
    if (k < 0 || k >= c.k()) throw ValidationError("hess_v: coordinate index out of range");
    if (!(s.v2[k] > 0.0)) throw ValidationError("hess_v: v_k must be positive");
    bool capped = false;
    const double e = capped_exp(s.m[k] + 0.5 * s.v2[k], capped);
    // includes the -sigma*_kk curvature of the quadratic trace term
    return -1.0 / s.v2[k] - c.sigma_inv()(k, k) - (w.total() / s.xi) * e * (s.v2[k] + 1.0);
}

VariationalState newton_step_v(const VariationalState& state, const CountVector& w, const GaussianComponent& comp) {
    const Eigen::Index k = comp.k();
    VariationalState out = state;
    out.v2[k] = 0.0;
    const double scale = w.total() / state.xi;
    bool capped = out.exp_capped;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double v = std::sqrt(out.v2[j]);
        const double g = grad_v(w, out, comp, j);
        const double h = hess_v(w, out, comp, j);
        const double full_step = -g / h;
        const double prec = comp.sigma_inv()(j, j);

        double step = 1.0;
        for (int halving = 0; halving <= kMaxHalvings; ++halving, step *= 0.5) {
            const double cand = std::max(v + step * full_step, kVMin);
            if (v_gain(v, cand, out.m[j], prec, scale) >= 0.0) {
                out.v2[j] = cand * cand;
                break;
            }
        }
        if (out.m[j] + 0.5 * out.v2[j] > kExpCap) capped = true;
    }
    out.exp_capped = capped;
    return out;
}

VariationalState update_state(const VariationalState& state, const CountVector& w, const GaussianComponent& comp) {
    VariationalState s = state;
    s.xi = update_xi(s);
    s = newton_step_m(s, w, comp);
    return newton_step_v(s, w, comp);
}

}  // namespace lnm
