#ifndef LNM_PCA_HPP
#define LNM_PCA_HPP

#include <Eigen/Dense>

namespace lnm {

struct PcaResult {
    Eigen::VectorXd eigenvalues;  // descending, sample covariance (n - 1)
    Eigen::MatrixXd loadings;     // columns are components
    Eigen::MatrixXd scores;       // n x components, of the centered data
};

/// Principal components of the rows of x. Each loading vector is signed so
/// that its largest-magnitude entry is positive.
PcaResult pca(const Eigen::MatrixXd& x, Eigen::Index components);

}  // namespace lnm

#endif
