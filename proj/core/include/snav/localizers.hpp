#ifndef SNAV_LOCALIZERS_HPP
#define SNAV_LOCALIZERS_HPP

#include <Eigen/Dense>
#include <vector>

#include "snav/rng.hpp"
#include "snav/sensors.hpp"
#include "snav/world.hpp"

namespace snav::sim {

// ---------------------------------------------------------------------------
// Particle-filter localizer (LiDAR configuration)
// ---------------------------------------------------------------------------

struct Particle {
    Eigen::Vector3d pose;  // x, y, theta
    double weight = 0.0;
};

struct PfBelief {
    std::vector<Particle> particles;
    bool degraded = false;  // set after a weight collapse re-init
};

struct PfConfig {
    int particle_count = 200;
    double odom_trans_sd = 0.02;
    double odom_rot_sd = 0.01;
    double beam_sd = 0.15;
    double outlier_weight = 0.1;  // uniform-outlier mixture weight
    int beam_stride = 10;         // evaluate every beam_stride-th beam
    double max_range = 5.0;
};

struct LocalizerEstimate {
    Eigen::Vector3d mean;
    Eigen::Matrix2d position_cov;
};

PfBelief pf_init_gaussian(const Eigen::Vector3d& mean, double pos_sd, double rot_sd,
                          const PfConfig& cfg, Rng& rng);
PfBelief pf_init_uniform(const WorldMap& map, const PfConfig& cfg, Rng& rng);

/// One predict/update/resample cycle. odom_delta = (forward, lateral,
/// dtheta) in the robot frame.
LocalizerEstimate pf_localize(PfBelief& belief, const Eigen::Vector3d& odom_delta,
                              const LidarScan& scan, const WorldMap& map,
                              const PfConfig& cfg, Rng& rng);

double pf_effective_sample_size(const PfBelief& belief);

// ---------------------------------------------------------------------------
// EKF localizer (feature configuration)
// ---------------------------------------------------------------------------

struct EkfBelief {
    Eigen::Vector3d mean;   // x, y, theta
    Eigen::Matrix3d cov;
};

struct EkfConfig {
    Eigen::Vector3d process_noise_var{4e-4, 4e-4, 1e-4};
    double range_sd = 0.05;
    double bearing_sd = 0.02;
    double gate_mahalanobis2 = 9.0;
};

struct EkfStepInfo {
    int features_used = 0;
    int features_gated = 0;
};

/// EKF predict with the odometry Jacobian and a per-feature range/bearing
/// update against known landmarks. Gated features (Mahalanobis^2 above the
/// threshold) are skipped and counted.
LocalizerEstimate ekf_localize(EkfBelief& belief, const Eigen::Vector3d& odom_delta,
                               const FeatureObservation& obs,
                               const std::vector<Eigen::Vector3d>& landmarks,
                               const EkfConfig& cfg, EkfStepInfo* info = nullptr);

}  // namespace snav::sim

#endif
