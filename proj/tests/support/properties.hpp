#ifndef LNM_TESTS_PROPERTIES_HPP
#define LNM_TESTS_PROPERTIES_HPP

// Randomized property checks shared by the unit tests and the acceptance
// runner. Each check is deterministic given its seed and reports the worst
// case it saw.

#include <cstdint>
#include <string>
#include <vector>

namespace lnm::props {

struct Outcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// alr(alr_inverse(y)) == y and alr_inverse(alr(theta)) == theta, 1000 draws, 1e-12.
Outcome alr_round_trip(std::uint64_t seed);

/// dF/dxi at update_xi's output is zero within 1e-10.
Outcome xi_stationarity(std::uint64_t seed);

/// grad_m and grad_v against central differences of elbo (step 1e-5),
/// 100 instances over K in {1, 2, 5}, 1e-6 relative.
Outcome gradient_check(std::uint64_t seed);

/// hess_m against central differences of grad_m, 1e-5 relative; hess_v
/// against central differences of grad_v at the same tolerance.
Outcome hessian_check(std::uint64_t seed);

/// elbo at its coordinate-ascent optimum lies strictly below the quadrature
/// log evidence, 20 instances with K <= 2.
Outcome bound_below_evidence(std::uint64_t seed);

/// xi, m and v updates never lower elbo, 1000 random starts.
Outcome inner_monotone(std::uint64_t seed);

/// ari equals pair counting for every pair of partitions of n <= 8 items
/// into at most 3 blocks.
Outcome ari_exhaustive();

/// Responsibility rows sum to one at every iteration of a 50-iteration fit.
Outcome responsibilities_normalized(std::uint64_t seed);

std::vector<Outcome> run_all(std::uint64_t seed);

}  // namespace lnm::props

#endif
