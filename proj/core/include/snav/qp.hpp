#ifndef SNAV_QP_HPP
#define SNAV_QP_HPP

#include <Eigen/Dense>

namespace snav::smpc {

enum class QpStatus { Optimal, MaxIterations, NumericalFailure };

struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd lambda;  // multipliers for G x <= h
    double objective = 0.0;
    QpStatus status = QpStatus::NumericalFailure;
    int iterations = 0;
};

/// Dense convex QP:  min 0.5 x'Hx + g'x  s.t.  G x <= h.
/// Primal-dual interior point with Mehrotra-style centering. H must be
/// positive definite (a tiny diagonal regularization is added internally).
QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  double tol = 1e-10, int max_iter = 100);

}  // namespace snav::smpc

#endif
