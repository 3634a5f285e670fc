#ifndef SNAV_RICCATI_HPP
#define SNAV_RICCATI_HPP

#include <Eigen/Dense>

namespace snav::smpc {

/// Solves the discrete-time algebraic Riccati equation
///   A' P A - P - A' P B (B' P B + R)^{-1} B' P A + Q = 0
/// by fixed-point iteration from P0 = Q. Returns the symmetric PSD
/// stabilizing solution; the residual Frobenius norm is at most `tol`.
/// Throws on non-convergence.
Eigen::MatrixXd terminal_weight(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                double tol = 1e-10, int max_iter = 200000);

/// Frobenius norm of the DARE residual at P.
double dare_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                     const Eigen::MatrixXd& P);

}  // namespace snav::smpc

#endif
