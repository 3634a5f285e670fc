#ifndef SNAV_COOP_KF_HPP
#define SNAV_COOP_KF_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "snav/smpc.hpp"

namespace snav::ckf {

/// Joint belief of a robot pair, tracking the cross-covariance once the
/// robots have met so repeated fusions do not double-count information.
struct PairBelief {
    Eigen::VectorXd x_i, x_j;
    Eigen::MatrixXd sigma_i, sigma_j;
    std::optional<Eigen::MatrixXd> sigma_ij;  // absent before first meeting
    Eigen::MatrixXd r_ij;                     // relative-measurement noise

    bool has_met() const { return sigma_ij.has_value(); }
};

/// Relative pose measurement Z = X_i - X_j + noise.
Eigen::VectorXd relative_measurement(const Eigen::VectorXd& x_i,
                                     const Eigen::VectorXd& x_j,
                                     const Eigen::VectorXd& noise_sample);

/// Fusion when no cross-covariance exists yet:
///   S = Sigma_i + Sigma_j + R,  K_i = Sigma_i S^-1,
///   Sigma_ij+ = Sigma_i S^-1 Sigma_j.
PairBelief first_meeting_update(const PairBelief& belief, const Eigen::VectorXd& z);

/// Fusion with tracked cross-covariance. The innovation covariance
/// includes the cross terms, S = Sigma_i + Sigma_j - Sigma_ij - Sigma_ji + R,
/// so that scalar chains reproduce a centralized two-robot filter exactly;
/// K_i = (Sigma_i - Sigma_ij) S^-1.
PairBelief subsequent_update(const PairBelief& belief, const Eigen::VectorXd& z);

/// Dispatches to the first-meeting or subsequent update.
PairBelief fuse(const PairBelief& belief, const Eigen::VectorXd& z);

/// Elementwise fusion of two horizon belief sequences. `z` holds one
/// relative measurement per horizon index; `cross` carries the per-index
/// cross-covariances between calls (empty before the first meeting) and is
/// updated in place.
std::pair<smpc::BeliefSequence, smpc::BeliefSequence> fuse_horizon(
    const smpc::BeliefSequence& b_i, const smpc::BeliefSequence& b_j,
    const Eigen::MatrixXd& r_ij, const std::vector<Eigen::VectorXd>& z,
    std::vector<Eigen::MatrixXd>* cross);

}  // namespace snav::ckf

#endif
