#include "snav/qp.hpp"

#include <cmath>
#include <stdexcept>

namespace snav::smpc {

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                  double tol, int max_iter) {
    const int n = static_cast<int>(H.rows());
    const int m = static_cast<int>(G.rows());
    if (H.cols() != n || g.size() != n || (m > 0 && G.cols() != n) || h.size() != m)
        throw std::invalid_argument("solve_qp: dimension mismatch");

    QpResult res;
    const Eigen::MatrixXd Hr =
        0.5 * (H + H.transpose()) + 1e-12 * Eigen::MatrixXd::Identity(n, n);

    if (m == 0) {
        res.x = Hr.ldlt().solve(-g);
        res.lambda.resize(0);
        res.objective = 0.5 * res.x.dot(H * res.x) + g.dot(res.x);
        res.status = QpStatus::Optimal;
        return res;
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd s = (h - G * x).cwiseMax(1.0);
    Eigen::VectorXd lam = Eigen::VectorXd::Ones(m);

    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd rd = Hr * x + g + G.transpose() * lam;
        const Eigen::VectorXd rp = G * x + s - h;
        const double mu = s.dot(lam) / m;

        if (rd.lpNorm<Eigen::Infinity>() < tol && rp.lpNorm<Eigen::Infinity>() < tol &&
            mu < tol) {
            res.x = x;
            res.lambda = lam;
            res.objective = 0.5 * x.dot(H * x) + g.dot(x);
            res.status = QpStatus::Optimal;
            res.iterations = it;
            return res;
        }

        // Reduced system: (H + G' diag(lam/s) G) dx = -rd - G' diag(1/s) (lam o rp - rc)
        const Eigen::VectorXd lam_over_s = lam.cwiseQuotient(s);
        Eigen::MatrixXd M = Hr;
        M.noalias() += G.transpose() * lam_over_s.asDiagonal() * G;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
        if (ldlt.info() != Eigen::Success) break;

        // Affine (predictor) step.
        Eigen::VectorXd rc_aff = -s.cwiseProduct(lam);
        const Eigen::VectorXd rhs_aff =
            -rd - G.transpose() * ((lam.cwiseProduct(rp) + rc_aff).cwiseQuotient(s));
        const Eigen::VectorXd dx_aff = ldlt.solve(rhs_aff);
        const Eigen::VectorXd ds_aff = -rp - G * dx_aff;
        const Eigen::VectorXd dlam_aff =
            (rc_aff - lam.cwiseProduct(ds_aff)).cwiseQuotient(s);

        auto max_step = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
            double a = 1.0;
            for (int i = 0; i < v.size(); ++i)
                if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
            return a;
        };
        const double alpha_aff =
            std::min(max_step(s, ds_aff), max_step(lam, dlam_aff));
        const double mu_aff =
            (s + alpha_aff * ds_aff).dot(lam + alpha_aff * dlam_aff) / m;
        const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);

        // Corrector step.
        const Eigen::VectorXd rc =
            sigma * mu * Eigen::VectorXd::Ones(m) - s.cwiseProduct(lam) -
            ds_aff.cwiseProduct(dlam_aff);
        const Eigen::VectorXd rhs =
            -rd - G.transpose() * ((lam.cwiseProduct(rp) + rc).cwiseQuotient(s));
        const Eigen::VectorXd dx = ldlt.solve(rhs);
        const Eigen::VectorXd ds = -rp - G * dx;
        const Eigen::VectorXd dlam = (rc - lam.cwiseProduct(ds)).cwiseQuotient(s);

        const double alpha =
            0.995 * std::min(max_step(s, ds), max_step(lam, dlam));
        x += alpha * dx;
        s += alpha * ds;
        lam += alpha * dlam;
        res.iterations = it + 1;
    }

    res.x = x;
    res.lambda = lam;
    res.objective = 0.5 * x.dot(H * x) + g.dot(x);
    res.status = QpStatus::MaxIterations;
    return res;
}

}  // namespace snav::smpc
