#include "snav/sensors.hpp"

#include <cmath>
#include <stdexcept>

#include "snav/dynamics.hpp"

namespace snav::sim {

namespace {

/// Smallest positive t with origin + t*dir on the circle, or inf.
double ray_circle(const Eigen::Vector2d& o, const Eigen::Vector2d& dir,
                  const smpc::Circle& c) {
    const Eigen::Vector2d oc = o - c.center;
    const double b = 2.0 * dir.dot(oc);
    const double cc = oc.squaredNorm() - c.radius * c.radius;
    const double disc = b * b - 4.0 * cc;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    const double sq = std::sqrt(disc);
    const double t1 = 0.5 * (-b - sq);
    const double t2 = 0.5 * (-b + sq);
    if (t1 > 1e-12) return t1;
    if (t2 > 1e-12) return t2;
    return std::numeric_limits<double>::infinity();
}

/// Smallest positive t with origin + t*dir on segment [a, b], or inf.
double ray_segment(const Eigen::Vector2d& o, const Eigen::Vector2d& dir,
                   const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double denom = dir.x() * (-ab.y()) - dir.y() * (-ab.x());
    if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
    const Eigen::Vector2d ao = a - o;
    const double t = (ao.x() * (-ab.y()) - ao.y() * (-ab.x())) / denom;
    const double u = (dir.x() * ao.y() - dir.y() * ao.x()) / denom;
    if (t > 1e-12 && u >= 0.0 && u <= 1.0) return t;
    return std::numeric_limits<double>::infinity();
}

}  // namespace

double raycast(const Eigen::Vector2d& origin, double angle, const WorldMap& map,
               double max_range) {
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    double best = max_range;
    for (const auto& obs : map.obstacles) {
        if (obs.is_circle()) {
            best = std::min(best, ray_circle(origin, dir, obs.circle()));
        } else {
            const auto& poly = obs.polygon();
            for (int e = 0; e < poly.edge_count(); ++e)
                best = std::min(best,
                                ray_segment(origin, dir, poly.edge_start(e), poly.edge_end(e)));
        }
    }
    return std::min(best, max_range);
}

LidarScan lidar_scan(const Eigen::Vector3d& pose, const WorldMap& map,
                     double max_range, double noise_sd, Rng& rng) {
    const Eigen::Vector2d p = pose.head<2>();
    for (const auto& obs : map.obstacles) {
        if (obs.contains(p))
            throw std::runtime_error("lidar_scan: sensor fault, pose inside an obstacle");
    }
    LidarScan scan;
    scan.max_range = max_range;
    scan.ranges.resize(kLidarBeams);
    for (int d = 0; d < kLidarBeams; ++d) {
        const double angle = pose.z() + d * M_PI / 180.0;
        double r = raycast(p, angle, map, max_range);
        if (noise_sd > 0.0) r += rng.gaussian(0.0, noise_sd);
        scan.ranges[d] = std::clamp(r, 1e-3, max_range);
    }
    return scan;
}

FeatureObservation observe_features(const Eigen::Vector3d& pose, const WorldMap& map,
                                    double fov_deg, double max_range, double noise_sd,
                                    Rng& rng) {
    FeatureObservation obs;
    const Eigen::Vector2d p = pose.head<2>();
    const double half_fov = 0.5 * fov_deg * M_PI / 180.0;
    for (size_t i = 0; i < map.landmarks.size(); ++i) {
        const Eigen::Vector3d& lm = map.landmarks[i];
        const Eigen::Vector2d d2 = lm.head<2>() - p;
        const double planar = d2.norm();
        const double dist = planar;  // planar range; landmark z kept for map realism
        if (dist > max_range || planar < 1e-9) continue;
        const double bearing = dyn::normalize_angle(std::atan2(d2.y(), d2.x()) - pose.z());
        if (std::abs(bearing) > half_fov) continue;
        // Occlusion: anything closer than the landmark along the sight line.
        const double hit = raycast(p, std::atan2(d2.y(), d2.x()), map, planar);
        if (hit < planar - 1e-9) continue;
        Feature f;
        f.landmark_index = static_cast<int>(i);
        f.distance = std::max(1e-3, dist + (noise_sd > 0.0 ? rng.gaussian(0.0, noise_sd) : 0.0));
        f.bearing = dyn::normalize_angle(
            bearing + (noise_sd > 0.0 ? rng.gaussian(0.0, 0.5 * noise_sd) : 0.0));
        obs.features.push_back(f);
    }
    return obs;
}

}  // namespace snav::sim
