#include "lnm/compositions.hpp"

#include <cmath>
#include <string>

#include "lnm/error.hpp"

namespace lnm {

namespace {

void check_count(double c) {
    if (!(c >= 0.0) || std::floor(c) != c || !std::isfinite(c)) {
        throw ValidationError("count entries must be nonnegative integers");
    }
}

}  // namespace

CountVector::CountVector(std::span<const std::int64_t> counts) : w_(static_cast<Eigen::Index>(counts.size())) {
    if (counts.size() < 2) throw ValidationError("a count vector needs at least two taxa");
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] < 0) throw ValidationError("count entries must be nonnegative integers");
        w_[static_cast<Eigen::Index>(k)] = static_cast<double>(counts[k]);
    }
    total_ = w_.sum();
}

CountVector::CountVector(const Eigen::VectorXd& counts) : w_(counts) {
    if (counts.size() < 2) throw ValidationError("a count vector needs at least two taxa");
    for (Eigen::Index k = 0; k < counts.size(); ++k) check_count(counts[k]);
    total_ = w_.sum();
}

CountMatrix::CountMatrix(std::vector<CountVector> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_) {
        if (r.size() != rows_.front().size()) throw ValidationError("count rows have differing lengths");
    }
}

CountMatrix::CountMatrix(const Eigen::MatrixXd& counts) {
    rows_.reserve(static_cast<std::size_t>(counts.rows()));
    for (Eigen::Index i = 0; i < counts.rows(); ++i) rows_.emplace_back(Eigen::VectorXd(counts.row(i).transpose()));
}

void CountMatrix::require_positive_totals() const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].total() <= 0.0) {
            throw ValidationError("row " + std::to_string(i + 1) + " has zero total count");
        }
    }
}

LatentVector alr(const Composition& theta) {
    const auto& t = theta.theta;
    if (t.size() < 2) throw ValidationError("composition needs at least two parts");
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        if (!(t[k] > 0.0)) throw ValidationError("alr: composition entries must be strictly positive");
    }
    const Eigen::Index kdim = t.size() - 1;
    const double log_ref = std::log(t[kdim]);
    LatentVector out{Eigen::VectorXd(kdim)};
    for (Eigen::Index k = 0; k < kdim; ++k) out.y[k] = std::log(t[k]) - log_ref;
    return out;
}

Composition alr_inverse(const LatentVector& y) {
    return inv_alr_padded(pad_vector(y));
}

PaddedVector pad_vector(const LatentVector& y) {
    if (y.y.size() == 0) throw ValidationError("latent vector must have at least one coordinate");
    PaddedVector out{Eigen::VectorXd::Zero(y.y.size() + 1)};
    out.eta.head(y.y.size()) = y.y;
    return out;
}

PaddedParams pad_params(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    const Eigen::Index k = mu.size();
    if (k == 0 || sigma.rows() != k || sigma.cols() != k) {
        throw ValidationError("pad_params: mean and covariance dimensions disagree");
    }
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw DegenerateError("sigma not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw DegenerateError("sigma not positive definite");

    PaddedParams p;
    p.mu_tilde.eta = Eigen::VectorXd::Zero(k + 1);
    p.mu_tilde.eta.head(k) = mu;
    p.sigma_tilde = Eigen::MatrixXd::Zero(k + 1, k + 1);
    p.sigma_tilde.topLeftCorner(k, k) = sigma;
    p.sigma_star = Eigen::MatrixXd::Zero(k + 1, k + 1);
    p.sigma_star.topLeftCorner(k, k) = llt.solve(Eigen::MatrixXd::Identity(k, k));
    return p;
}

Composition inv_alr_padded(const PaddedVector& eta) {
    const auto& e = eta.eta;
    if (e.size() < 2) throw ValidationError("padded vector needs at least two coordinates");
    if (e[e.size() - 1] != 0.0) throw ValidationError("padded vector must have a zero last coordinate");
    const double shift = e.maxCoeff();
    Composition out{(e.array() - shift).exp().matrix()};
    out.theta /= out.theta.sum();
    return out;
}

PaddedVector counts_to_latent(const CountVector& w, double pseudocount) {
    if (!(pseudocount > 0.0)) throw ValidationError("pseudocount must be positive");
    if (w.total() <= 0.0) throw ValidationError("all-zero count vector has no composition");
    Eigen::VectorXd filled = w.values();
    for (Eigen::Index k = 0; k < filled.size(); ++k) {
        if (filled[k] == 0.0) filled[k] = pseudocount;
    }
    return pad_vector(alr(Composition{filled / filled.sum()}));
}

}  // namespace lnm
