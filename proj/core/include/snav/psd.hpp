#ifndef SNAV_PSD_HPP
#define SNAV_PSD_HPP

#include <Eigen/Dense>

namespace snav {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

/// Symmetrize, eigen-decompose and clamp eigenvalues at `floor`.
inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, double floor = 0.0) {
    const Eigen::MatrixXd s = symmetrize(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
    Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(floor);
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(symmetrize(m))
        .eigenvalues()
        .minCoeff();
}

}  // namespace snav

#endif
