#ifndef LNM_SIMULATE_HPP
#define LNM_SIMULATE_HPP

// Synthetic logistic normal multinomial mixtures.
//
// Observation i of component g is generated as
//   total_i ~ discrete uniform on [total_lo, total_hi]
//   eta_i   ~ N(mu_g, sigma_g), padded with a trailing zero
//   theta_i = softmax(eta_i)
//   w_i     ~ Multinomial(total_i, theta_i)
// Every observation draws from its own RNG stream, so datasets do not depend
// on generation order.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lnm/compositions.hpp"
#include "lnm/rng.hpp"

namespace lnm {

struct SimSpec {
    std::string name;
    int g = 0;
    int k = 0;
    std::vector<int> sizes;
    std::vector<Eigen::VectorXd> mus;
    std::vector<Eigen::MatrixXd> sigmas;
    std::int64_t total_lo = 5000;
    std::int64_t total_hi = 10000;
    std::uint64_t seed = 1;

    /// Throws ValidationError naming the offending field; a covariance that
    /// fails Cholesky reports "sigma not positive definite".
    void validate() const;
    int n() const;
};

struct LabeledDataset {
    CountMatrix counts;
    std::vector<int> labels;             // 1-based component of origin
    std::vector<PaddedVector> latents;   // the eta each row was drawn from
};

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, Rng& rng);
CountVector sample_multinomial(std::int64_t total, const Composition& theta, Rng& rng);

LabeledDataset simulate_dataset(const SimSpec& spec);

/// "sim1", "sim2" and the grid cells "grid_k{5,10,20}_n{100,200,500}".
SimSpec builtin_spec(const std::string& name);
std::vector<std::string> builtin_spec_names();

}  // namespace lnm

#endif
