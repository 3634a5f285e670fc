#ifndef SNAV_SENSORS_HPP
#define SNAV_SENSORS_HPP

#include <Eigen/Dense>
#include <vector>

#include "snav/rng.hpp"
#include "snav/world.hpp"

namespace snav::sim {

constexpr int kLidarBeams = 360;

struct LidarScan {
    std::vector<double> ranges;  // one per degree, beam 0 along the heading
    double max_range = 5.0;
};

struct Feature {
    int landmark_index = -1;
    double distance = 0.0;  // m
    double bearing = 0.0;   // rad, relative to heading
};

struct FeatureObservation {
    std::vector<Feature> features;
};

/// Distance along a ray to the nearest obstacle, or max_range when free.
double raycast(const Eigen::Vector2d& origin, double angle, const WorldMap& map,
               double max_range);

/// 360-beam LiDAR scan with additive Gaussian range noise, clamped to
/// (0, max_range]. pose = (x, y, theta). Throws when the pose is inside an
/// obstacle.
LidarScan lidar_scan(const Eigen::Vector3d& pose, const WorldMap& map,
                     double max_range, double noise_sd, Rng& rng);

/// Landmarks within range and field of view that are not occluded by an
/// obstacle, with noisy planar distance/bearing. pose = (x, y, theta).
FeatureObservation observe_features(const Eigen::Vector3d& pose, const WorldMap& map,
                                    double fov_deg, double max_range, double noise_sd,
                                    Rng& rng);

}  // namespace snav::sim

#endif
