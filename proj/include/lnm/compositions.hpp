#ifndef LNM_COMPOSITIONS_HPP
#define LNM_COMPOSITIONS_HPP

// Simplex <-> Euclidean maps for compositional counts.
//
// The K+1 parts of a composition are mapped to K additive log-ratio
// coordinates using the last part as the reference. The "padded" form appends
// a structural zero so that the latent vector has the same length as the
// count vector; the padding matrix itself is never materialized.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace lnm {

/// Relative abundances of K+1 parts; entries positive, summing to one.
struct Composition {
    Eigen::VectorXd theta;
};

/// K log-ratio coordinates.
struct LatentVector {
    Eigen::VectorXd y;
};

/// K+1 coordinates whose last entry is identically zero.
struct PaddedVector {
    Eigen::VectorXd eta;
};

/// Taxa counts of one sample. Counts are stored as doubles since every
/// consumer does floating point arithmetic on them; construction checks that
/// the input values are nonnegative integers.
class CountVector {
public:
    CountVector() = default;
    explicit CountVector(std::span<const std::int64_t> counts);
    explicit CountVector(const Eigen::VectorXd& counts);

    const Eigen::VectorXd& values() const noexcept { return w_; }
    double total() const noexcept { return total_; }
    Eigen::Index size() const noexcept { return w_.size(); }
    double operator[](Eigen::Index k) const { return w_[k]; }

private:
    Eigen::VectorXd w_;
    double total_ = 0.0;
};

/// n samples by K+1 taxa; the last column is the reference taxon.
class CountMatrix {
public:
    CountMatrix() = default;
    explicit CountMatrix(std::vector<CountVector> rows);
    explicit CountMatrix(const Eigen::MatrixXd& counts);

    std::size_t n() const noexcept { return rows_.size(); }
    /// Number of log-ratio coordinates (taxa minus one).
    Eigen::Index k() const noexcept { return rows_.empty() ? 0 : rows_.front().size() - 1; }
    const CountVector& row(std::size_t i) const { return rows_.at(i); }
    const std::vector<CountVector>& rows() const noexcept { return rows_; }

    /// Throws ValidationError naming the first row whose total is zero.
    void require_positive_totals() const;

private:
    std::vector<CountVector> rows_;
};

struct PaddedParams {
    PaddedVector mu_tilde;
    Eigen::MatrixXd sigma_tilde;  // sigma in the top-left block, zeros elsewhere
    Eigen::MatrixXd sigma_star;   // inverse of sigma in the top-left block
};

LatentVector alr(const Composition& theta);
Composition alr_inverse(const LatentVector& y);

PaddedVector pad_vector(const LatentVector& y);
PaddedParams pad_params(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

/// Softmax over all K+1 padded coordinates.
Composition inv_alr_padded(const PaddedVector& eta);

/// Zero counts are replaced by `pseudocount` before normalizing.
PaddedVector counts_to_latent(const CountVector& w, double pseudocount = 1.0);

}  // namespace lnm

#endif
