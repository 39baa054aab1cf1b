#include "lnm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lnm/error.hpp"

namespace lnm {

namespace {

Eigen::MatrixXd from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

SimSpec sim1() {
    SimSpec s;
    s.name = "sim1";
    s.g = 2;
    s.k = 3;
    s.sizes = {600, 400};
    s.mus = {vec({5, 2, 1}), vec({1, 3, 2})};
    s.sigmas = {from_rows({{1, 0.4, 0}, {0.4, 1.2, -0.5}, {0, -0.5, 1}}),
                from_rows({{1.4, 0.2, -0.65}, {0.2, 1, 0}, {-0.65, 0, 1}})};
    return s;
}

SimSpec sim2() {
    SimSpec s;
    s.name = "sim2";
    s.g = 3;
    s.k = 5;
    s.sizes = {300, 400, 200};
    s.mus = {vec({5, 2, 1, 2, 3}), vec({2, 3, 4, 1, 2}), vec({1, 1, 1, 1, 1})};
    s.sigmas = {from_rows({{2, -0.2, 0.8, -1, 0},
                           {-0.2, 1, -0.2, 0, -0.4},
                           {0.8, -0.2, 1.4, 0.6, 0},
                           {-1, 0, 0.6, 1.6, 0.2},
                           {0, -0.4, 0, 0.2, 1.2}}),
                from_rows({{1.4, 0.65, 0.4, 0, 0},
                           {0.65, 1, 0.2, 0, 0.4},
                           {0.4, 0.2, 1, 0.6, 0},
                           {0, 0, 0.6, 1.2, 0.8},
                           {0, 0.4, 0, 0.8, 2}}),
                Eigen::MatrixXd::Identity(5, 5)};
    return s;
}

// Two balanced components. mu1 cycles through 1, 2, 3; mu2 shifts mu1 by
// +/- 6/sqrt(K) in alternating directions (Euclidean separation 6). sigma1 is
// AR(1) with rho 0.3 and unit variances, sigma2 is the identity.
SimSpec grid(int k, int n) {
    SimSpec s;
    s.name = "grid_k" + std::to_string(k) + "_n" + std::to_string(n);
    s.g = 2;
    s.k = k;
    s.sizes = {n / 2, n - n / 2};
    Eigen::VectorXd mu1(k), mu2(k);
    const double delta = 6.0 / std::sqrt(static_cast<double>(k));
    for (int j = 0; j < k; ++j) {
        mu1[j] = 1.0 + static_cast<double>(j % 3);
        mu2[j] = mu1[j] + (j % 2 == 0 ? delta : -delta);
    }
    Eigen::MatrixXd ar(k, k);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) ar(a, b) = std::pow(0.3, std::abs(a - b));
    }
    s.mus = {mu1, mu2};
    s.sigmas = {ar, Eigen::MatrixXd::Identity(k, k)};
    return s;
}

}  // namespace

void SimSpec::validate() const {
    if (g < 1) throw ValidationError("g must be at least 1");
    if (k < 1) throw ValidationError("k must be at least 1");
    if (static_cast<int>(sizes.size()) != g) throw ValidationError("sizes must have g entries");
    if (static_cast<int>(mus.size()) != g) throw ValidationError("mus must have g entries");
    if (static_cast<int>(sigmas.size()) != g) throw ValidationError("sigmas must have g entries");
    if (std::any_of(sizes.begin(), sizes.end(), [](int s) { return s < 1; })) {
        throw ValidationError("sizes must be positive");
    }
    if (total_lo < 1 || total_hi < total_lo) throw ValidationError("total_range must satisfy 1 <= low <= high");
    for (int c = 0; c < g; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        if (mus[cu].size() != k) throw ValidationError("mus[" + std::to_string(c) + "] must have k entries");
        if (sigmas[cu].rows() != k || sigmas[cu].cols() != k) {
            throw ValidationError("sigmas[" + std::to_string(c) + "] must be k x k");
        }
        if ((sigmas[cu] - sigmas[cu].transpose()).cwiseAbs().maxCoeff() > 1e-10) {
            throw ValidationError("sigma not symmetric");
        }
        if (Eigen::LLT<Eigen::MatrixXd>(sigmas[cu]).info() != Eigen::Success) {
            throw ValidationError("sigma not positive definite");
        }
    }
}

int SimSpec::n() const {
    return std::accumulate(sizes.begin(), sizes.end(), 0);
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, Rng& rng) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (sigma.rows() != mu.size() || llt.info() != Eigen::Success) {
        throw DegenerateError("sigma not positive definite");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(mu.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
    return mu + llt.matrixL() * z;
}

CountVector sample_multinomial(std::int64_t total, const Composition& theta, Rng& rng) {
    const auto& t = theta.theta;
    if (total < 1) throw ValidationError("multinomial total must be at least 1");
    if (t.size() < 2 || (t.array() < 0.0).any() || std::abs(t.sum() - 1.0) > 1e-9) {
        throw ValidationError("multinomial probabilities must lie on the simplex");
    }
    std::vector<std::int64_t> counts(static_cast<std::size_t>(t.size()), 0);
    std::int64_t remaining = total;
    double mass = 1.0;
    for (Eigen::Index j = 0; j + 1 < t.size() && remaining > 0; ++j) {
        const double p = mass > 0.0 ? std::clamp(t[j] / mass, 0.0, 1.0) : 0.0;
        std::binomial_distribution<std::int64_t> binom(remaining, p);
        const std::int64_t x = binom(rng);
        counts[static_cast<std::size_t>(j)] = x;
        remaining -= x;
        mass -= t[j];
    }
    counts.back() += remaining;
    return CountVector(std::span<const std::int64_t>(counts));
}

LabeledDataset simulate_dataset(const SimSpec& spec) {
    spec.validate();
    const std::uint64_t root = tagged_seed(spec.seed, stream_tag::simulate);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
    for (const auto& s : spec.sigmas) factors.emplace_back(s);

    LabeledDataset out;
    std::vector<CountVector> rows;
    rows.reserve(static_cast<std::size_t>(spec.n()));
    std::size_t index = 0;
    for (int c = 0; c < spec.g; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        for (int r = 0; r < spec.sizes[cu]; ++r, ++index) {
            Rng rng = make_stream(root, index);
            std::uniform_int_distribution<std::int64_t> total_dist(spec.total_lo, spec.total_hi);
            const std::int64_t total = total_dist(rng);

            std::normal_distribution<double> normal(0.0, 1.0);
            Eigen::VectorXd z(spec.k);
            for (int j = 0; j < spec.k; ++j) z[j] = normal(rng);
            const Eigen::VectorXd y = spec.mus[cu] + factors[cu].matrixL() * z;

            PaddedVector eta = pad_vector(LatentVector{y});
            rows.push_back(sample_multinomial(total, inv_alr_padded(eta), rng));
            out.latents.push_back(std::move(eta));
            out.labels.push_back(c + 1);
        }
    }
    out.counts = CountMatrix(std::move(rows));
    return out;
}

SimSpec builtin_spec(const std::string& name) {
    if (name == "sim1") return sim1();
    if (name == "sim2") return sim2();
    for (int k : {5, 10, 20}) {
        for (int n : {100, 200, 500}) {
            if (name == "grid_k" + std::to_string(k) + "_n" + std::to_string(n)) return grid(k, n);
        }
    }
    throw ValidationError("unknown built-in spec '" + name + "'");
}

std::vector<std::string> builtin_spec_names() {
    std::vector<std::string> names{"sim1", "sim2"};
    for (int k : {5, 10, 20}) {
        for (int n : {100, 200, 500}) names.push_back("grid_k" + std::to_string(k) + "_n" + std::to_string(n));
    }
    return names;
}

}  // namespace lnm
