#include "lnm/pca.hpp"

#include "lnm/error.hpp"

namespace lnm {

PcaResult pca(const Eigen::MatrixXd& x, Eigen::Index components) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n < 2) throw ValidationError("pca needs at least two rows");
    if (components < 1 || components > p) throw ValidationError("pca: component count out of range");

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DegenerateError("pca: eigen decomposition failed");

    PcaResult out;
    out.eigenvalues.resize(components);
    out.loadings.resize(p, components);
    for (Eigen::Index c = 0; c < components; ++c) {
        // eigenvalues come back ascending
        const Eigen::Index src = p - 1 - c;
        Eigen::VectorXd v = eig.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        out.eigenvalues[c] = eig.eigenvalues()[src];
        out.loadings.col(c) = v;
    }
    out.scores = centered * out.loadings;
    return out;
}

}  // namespace lnm
