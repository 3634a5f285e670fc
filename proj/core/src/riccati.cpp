#include "snav/riccati.hpp"

#include <stdexcept>

namespace snav::smpc {

static Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                   const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd S = BtP * B + R;
    const Eigen::MatrixXd K = S.ldlt().solve(BtP * A);
    Eigen::MatrixXd next =
        A.transpose() * P * A - A.transpose() * P * B * K + Q;
    return 0.5 * (next + next.transpose());
}

double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P) {
    return (riccati_map(A, B, Q, R, P) - P).norm();
}

Eigen::MatrixXd terminal_weight(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                double tol, int max_iter) {
    if (A.rows() != A.cols() || B.rows() != A.rows())
        throw std::invalid_argument("terminal_weight: dimension mismatch");
    if (Q.rows() != A.rows() || R.rows() != B.cols())
        throw std::invalid_argument("terminal_weight: weight dimension mismatch");
    Eigen::MatrixXd P = 0.5 * (Q + Q.transpose());
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd next = riccati_map(A, B, Q, R, P);
        const double delta = (next - P).norm();
        if (delta <= tol) return next;
        P = next;
    }
    throw std::runtime_error("terminal_weight: Riccati iteration did not converge");
}

}  // namespace snav::smpc
