#include "snav/localizers.hpp"

#include <cmath>
#include <stdexcept>

#include "snav/dynamics.hpp"
#include "snav/psd.hpp"

namespace snav::sim {

PfBelief pf_init_gaussian(const Eigen::Vector3d& mean, double pos_sd, double rot_sd,
                          const PfConfig& cfg, Rng& rng) {
    PfBelief b;
    b.particles.resize(cfg.particle_count);
    for (auto& p : b.particles) {
        p.pose = mean + Eigen::Vector3d(rng.gaussian(0.0, pos_sd), rng.gaussian(0.0, pos_sd),
                                        rng.gaussian(0.0, rot_sd));
        p.pose.z() = dyn::normalize_angle(p.pose.z());
        p.weight = 1.0 / cfg.particle_count;
    }
    return b;
}

PfBelief pf_init_uniform(const WorldMap& map, const PfConfig& cfg, Rng& rng) {
    PfBelief b;
    b.particles.resize(cfg.particle_count);
    for (auto& p : b.particles) {
        p.pose = Eigen::Vector3d(rng.uniform(map.xmin, map.xmax),
                                 rng.uniform(map.ymin, map.ymax),
                                 rng.uniform(-M_PI, M_PI));
        p.weight = 1.0 / cfg.particle_count;
    }
    return b;
}

double pf_effective_sample_size(const PfBelief& belief) {
    double sum_sq = 0.0;
    for (const auto& p : belief.particles) sum_sq += p.weight * p.weight;
    return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

namespace {

void systematic_resample(PfBelief& b, Rng& rng) {
    const int n = static_cast<int>(b.particles.size());
    std::vector<Particle> out;
    out.reserve(n);
    const double step = 1.0 / n;
    double pos = rng.uniform() * step;
    double cum = b.particles[0].weight;
    int idx = 0;
    for (int i = 0; i < n; ++i) {
        while (pos > cum && idx + 1 < n) cum += b.particles[++idx].weight;
        Particle p = b.particles[idx];
        p.weight = step;
        out.push_back(p);
        pos += step;
    }
    b.particles = std::move(out);
}

LocalizerEstimate weighted_estimate(const PfBelief& b) {
    LocalizerEstimate est;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    double cs = 0.0, sn = 0.0;
    for (const auto& p : b.particles) {
        mean += p.weight * p.pose.head<2>();
        cs += p.weight * std::cos(p.pose.z());
        sn += p.weight * std::sin(p.pose.z());
    }
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : b.particles) {
        const Eigen::Vector2d d = p.pose.head<2>() - mean;
        cov += p.weight * d * d.transpose();
    }
    est.mean << mean.x(), mean.y(), std::atan2(sn, cs);
    est.position_cov = symmetrize(cov);
    return est;
}

}  // namespace

LocalizerEstimate pf_localize(PfBelief& belief, const Eigen::Vector3d& odom_delta,
                              const LidarScan& scan, const WorldMap& map,
                              const PfConfig& cfg, Rng& rng) {
    if (static_cast<int>(belief.particles.size()) < 100)
        throw std::invalid_argument("pf_localize: at least 100 particles required");
    belief.degraded = false;

    // Motion model in each particle's own frame, with odometry noise.
    for (auto& p : belief.particles) {
        const double th = p.pose.z();
        const double fwd = odom_delta.x() + rng.gaussian(0.0, cfg.odom_trans_sd);
        const double lat = odom_delta.y() + rng.gaussian(0.0, cfg.odom_trans_sd);
        const double rot = odom_delta.z() + rng.gaussian(0.0, cfg.odom_rot_sd);
        p.pose.x() += fwd * std::cos(th) - lat * std::sin(th);
        p.pose.y() += fwd * std::sin(th) + lat * std::cos(th);
        p.pose.z() = dyn::normalize_angle(th + rot);
    }

    // Beam-likelihood weighting: Gaussian range error with a uniform
    // outlier mixture, evaluated on a beam subsample.
    const double inv_norm = 1.0 / (cfg.beam_sd * std::sqrt(2.0 * M_PI));
    double total = 0.0;
    for (auto& p : belief.particles) {
        double log_w = std::log(std::max(p.weight, 1e-300));
        for (int d = 0; d < kLidarBeams; d += cfg.beam_stride) {
            const double expected =
                raycast(p.pose.head<2>(), p.pose.z() + d * M_PI / 180.0, map, scan.max_range);
            const double err = scan.ranges[d] - expected;
            const double gauss =
                inv_norm * std::exp(-0.5 * err * err / (cfg.beam_sd * cfg.beam_sd));
            const double lik = (1.0 - cfg.outlier_weight) * gauss +
                               cfg.outlier_weight / scan.max_range;
            log_w += std::log(std::max(lik, 1e-300));
        }
        p.weight = log_w;
    }
    // Normalize from log space.
    double max_log = -std::numeric_limits<double>::infinity();
    for (const auto& p : belief.particles) max_log = std::max(max_log, p.weight);
    for (auto& p : belief.particles) {
        p.weight = std::exp(p.weight - max_log);
        total += p.weight;
    }
    if (!(total > 1e-12) || !std::isfinite(total)) {
        belief = pf_init_uniform(map, cfg, rng);
        belief.degraded = true;
        return weighted_estimate(belief);
    }
    for (auto& p : belief.particles) p.weight /= total;

    if (pf_effective_sample_size(belief) < 0.5 * belief.particles.size())
        systematic_resample(belief, rng);

    return weighted_estimate(belief);
}

LocalizerEstimate ekf_localize(EkfBelief& belief, const Eigen::Vector3d& odom_delta,
                               const FeatureObservation& obs,
                               const std::vector<Eigen::Vector3d>& landmarks,
                               const EkfConfig& cfg, EkfStepInfo* info) {
    if (min_eigenvalue(belief.cov) < -1e-9)
        throw std::invalid_argument("ekf_localize: belief covariance must be PSD");

    // Predict: pose composition with the odometry delta.
    const double th = belief.mean.z();
    const double c = std::cos(th), s = std::sin(th);
    belief.mean.x() += odom_delta.x() * c - odom_delta.y() * s;
    belief.mean.y() += odom_delta.x() * s + odom_delta.y() * c;
    belief.mean.z() = dyn::normalize_angle(th + odom_delta.z());
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    F(0, 2) = -odom_delta.x() * s - odom_delta.y() * c;
    F(1, 2) = odom_delta.x() * c - odom_delta.y() * s;
    belief.cov = F * belief.cov * F.transpose();
    belief.cov += cfg.process_noise_var.asDiagonal();

    // Per-feature range/bearing update.
    for (const auto& f : obs.features) {
        if (f.landmark_index < 0 || f.landmark_index >= static_cast<int>(landmarks.size()))
            continue;
        const Eigen::Vector2d lm = landmarks[f.landmark_index].head<2>();
        const Eigen::Vector2d d = lm - belief.mean.head<2>();
        const double q = d.squaredNorm();
        const double r = std::sqrt(q);
        if (r < 1e-6) continue;
        Eigen::Vector2d zhat(r, dyn::normalize_angle(std::atan2(d.y(), d.x()) - belief.mean.z()));
        Eigen::Matrix<double, 2, 3> H;
        H << -d.x() / r, -d.y() / r, 0.0,
             d.y() / q, -d.x() / q, -1.0;
        Eigen::Matrix2d R = Eigen::Vector2d(cfg.range_sd * cfg.range_sd,
                                            cfg.bearing_sd * cfg.bearing_sd)
                                .asDiagonal();
        const Eigen::Matrix2d S = H * belief.cov * H.transpose() + R;
        Eigen::Vector2d innov(f.distance - zhat.x(),
                              dyn::normalize_angle(f.bearing - zhat.y()));
        const double maha2 = innov.dot(S.inverse() * innov);
        if (maha2 > cfg.gate_mahalanobis2) {
            if (info) info->features_gated++;
            continue;
        }
        const Eigen::Matrix<double, 3, 2> K = belief.cov * H.transpose() * S.inverse();
        belief.mean += K * innov;
        belief.mean.z() = dyn::normalize_angle(belief.mean.z());
        belief.cov = project_psd((Eigen::Matrix3d::Identity() - K * H) * belief.cov, 1e-12);
        if (info) info->features_used++;
    }
    belief.cov = project_psd(belief.cov, 1e-12);

    LocalizerEstimate est;
    est.mean = belief.mean;
    est.position_cov = belief.cov.topLeftCorner<2, 2>();
    return est;
}

}  // namespace snav::sim
