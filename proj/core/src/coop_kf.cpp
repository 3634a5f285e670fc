#include "snav/coop_kf.hpp"

#include <stdexcept>

#include "snav/psd.hpp"

namespace snav::ckf {

Eigen::VectorXd relative_measurement(const Eigen::VectorXd& x_i,
                                     const Eigen::VectorXd& x_j,
                                     const Eigen::VectorXd& noise_sample) {
    if (x_i.size() != x_j.size() || x_i.size() != noise_sample.size())
        throw std::invalid_argument("relative_measurement: dimension mismatch");
    return x_i - x_j + noise_sample;
}

namespace {

Eigen::MatrixXd inverse_of(const Eigen::MatrixXd& s) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
    if (!lu.isInvertible())
        throw std::runtime_error("coop_kf: innovation covariance is singular");
    return lu.inverse();
}

PairBelief apply_update(const PairBelief& b, const Eigen::VectorXd& z,
                        const Eigen::MatrixXd& sigma_ij) {
    const Eigen::MatrixXd sigma_ji = sigma_ij.transpose();
    const Eigen::MatrixXd s =
        b.sigma_i + b.sigma_j - sigma_ij - sigma_ji + b.r_ij;
    const Eigen::MatrixXd s_inv = inverse_of(s);
    const Eigen::MatrixXd k_i = (b.sigma_i - sigma_ij) * s_inv;
    const Eigen::MatrixXd k_j = (sigma_ji - b.sigma_j) * s_inv;
    const Eigen::VectorXd innovation = z - (b.x_i - b.x_j);

    PairBelief out = b;
    out.x_i = b.x_i + k_i * innovation;
    out.x_j = b.x_j + k_j * innovation;
    out.sigma_i = project_psd(b.sigma_i - k_i * (b.sigma_i - sigma_ji), 1e-12);
    out.sigma_j = project_psd(b.sigma_j - k_j * (sigma_ij - b.sigma_j), 1e-12);
    out.sigma_ij = symmetrize(sigma_ij - k_i * (sigma_ij - b.sigma_j));
    return out;
}

}  // namespace

PairBelief first_meeting_update(const PairBelief& belief, const Eigen::VectorXd& z) {
    if (belief.has_met())
        throw std::invalid_argument("first_meeting_update: cross-covariance already set");
    const Eigen::MatrixXd zero =
        Eigen::MatrixXd::Zero(belief.sigma_i.rows(), belief.sigma_i.cols());
    return apply_update(belief, z, zero);
}

PairBelief subsequent_update(const PairBelief& belief, const Eigen::VectorXd& z) {
    if (!belief.has_met())
        throw std::invalid_argument("subsequent_update: cross-covariance absent");
    return apply_update(belief, z, *belief.sigma_ij);
}

PairBelief fuse(const PairBelief& belief, const Eigen::VectorXd& z) {
    return belief.has_met() ? subsequent_update(belief, z)
                            : first_meeting_update(belief, z);
}

std::pair<smpc::BeliefSequence, smpc::BeliefSequence> fuse_horizon(
    const smpc::BeliefSequence& b_i, const smpc::BeliefSequence& b_j,
    const Eigen::MatrixXd& r_ij, const std::vector<Eigen::VectorXd>& z,
    std::vector<Eigen::MatrixXd>* cross) {
    const int len = b_i.length();
    if (b_j.length() != len || static_cast<int>(z.size()) != len)
        throw std::invalid_argument("fuse_horizon: horizon length mismatch");
    const bool met = cross && !cross->empty();
    if (met && static_cast<int>(cross->size()) != len)
        throw std::invalid_argument("fuse_horizon: cross-covariance length mismatch");

    smpc::BeliefSequence out_i = b_i;
    smpc::BeliefSequence out_j = b_j;
    std::vector<Eigen::MatrixXd> new_cross(len);
    for (int k = 0; k < len; ++k) {
        PairBelief pb;
        pb.x_i = b_i.means[k];
        pb.x_j = b_j.means[k];
        pb.sigma_i = b_i.covariances[k];
        pb.sigma_j = b_j.covariances[k];
        pb.r_ij = r_ij;
        if (met) pb.sigma_ij = (*cross)[k];
        const PairBelief fused = fuse(pb, z[k]);
        out_i.means[k] = fused.x_i;
        out_j.means[k] = fused.x_j;
        out_i.covariances[k] = fused.sigma_i;
        out_j.covariances[k] = fused.sigma_j;
        new_cross[k] = *fused.sigma_ij;
    }
    if (cross) *cross = std::move(new_cross);
    return {out_i, out_j};
}

}  // namespace snav::ckf
