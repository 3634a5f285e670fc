#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "snav/localizers.hpp"
#include "snav/psd.hpp"
#include "snav/sensors.hpp"
#include "snav/world.hpp"

using namespace snav;
using namespace snav::sim;

namespace {

// Analytic ray vs axis-aligned box oracle (slab method).
double ray_box_oracle(const Eigen::Vector2d& o, double angle, double xmin, double ymin,
                      double xmax, double ymax, double max_range) {
    const Eigen::Vector2d d(std::cos(angle), std::sin(angle));
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 2; ++axis) {
        const double lo = axis == 0 ? xmin : ymin;
        const double hi = axis == 0 ? xmax : ymax;
        if (std::abs(d(axis)) < 1e-15) {
            if (o(axis) < lo || o(axis) > hi) return max_range;
            continue;
        }
        double t1 = (lo - o(axis)) / d(axis);
        double t2 = (hi - o(axis)) / d(axis);
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
    }
    if (tmax < tmin || tmin <= 1e-12) return max_range;
    return std::min(tmin, max_range);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("empty map returns max range everywhere") {
    WorldMap map;
    Rng rng(0);
    auto scan = lidar_scan(Eigen::Vector3d(5, 5, 0.3), map, 5.0, 0.0, rng);
    REQUIRE(static_cast<int>(scan.ranges.size()) == kLidarBeams);
    for (double r : scan.ranges) CHECK(r == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("wall three meters ahead") {
    WorldMap map;
    // A thin box spanning x in [8, 8.2], robot at (5, 5) facing +x.
    map.obstacles.push_back(smpc::Obstacle::make_box(8.1, 5.0, 0.1, 2.0));
    Rng rng(0);
    auto scan = lidar_scan(Eigen::Vector3d(5, 5, 0), map, 5.0, 0.0, rng);
    CHECK(scan.ranges[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("square obstacle fully behind the robot") {
    WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_box(2.0, 5.0, 0.5, 0.5));
    Rng rng(0);
    // Robot at (5, 5) facing +x; the box is behind it.
    auto scan = lidar_scan(Eigen::Vector3d(5, 5, 0), map, 5.0, 0.0, rng);
    for (int d = 0; d <= 89; ++d) CHECK(scan.ranges[d] == doctest::Approx(5.0));
    for (int d = 271; d < 360; ++d) CHECK(scan.ranges[d] == doctest::Approx(5.0));
    // And the analytic oracle agrees on every beam.
    for (int d = 0; d < 360; ++d) {
        const double oracle =
            ray_box_oracle({5, 5}, d * M_PI / 180.0, 1.5, 4.5, 2.5, 5.5, 5.0);
        CHECK(scan.ranges[d] == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("raycast matches the analytic circle intersection") {
    WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_circle(6.0, 5.0, 1.0));
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Vector2d o(rng.uniform(0.0, 4.0), rng.uniform(0.0, 10.0));
        const double angle = rng.uniform(-M_PI, M_PI);
        const double got = raycast(o, angle, map, 8.0);
        // Oracle: smallest positive root of |o + t d - c|^2 = r^2.
        const Eigen::Vector2d d(std::cos(angle), std::sin(angle));
        const Eigen::Vector2d oc = o - Eigen::Vector2d(6.0, 5.0);
        const double b = 2.0 * d.dot(oc);
        const double c = oc.squaredNorm() - 1.0;
        const double disc = b * b - 4.0 * c;
        double expect = 8.0;
        if (disc >= 0.0) {
            const double t = 0.5 * (-b - std::sqrt(disc));
            if (t > 0.0) expect = std::min(t, 8.0);
        }
        CHECK(got == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("pose inside an obstacle is a sensor fault") {
    WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_box(5.0, 5.0, 1.0, 1.0));
    Rng rng(0);
    CHECK_THROWS(lidar_scan(Eigen::Vector3d(5, 5, 0), map, 5.0, 0.0, rng));
}

TEST_CASE("feature visibility rules") {
    WorldMap map;
    map.landmarks.push_back(Eigen::Vector3d(7.0, 5.0, 1.0));   // 2 m ahead
    map.landmarks.push_back(Eigen::Vector3d(5.0, 10.2, 1.0));  // beyond range
    map.landmarks.push_back(Eigen::Vector3d(3.0, 5.0, 1.0));   // behind (outside fov)
    Rng rng(0);
    auto obs = observe_features(Eigen::Vector3d(5, 5, 0), map, 90.0, 5.0, 0.0, rng);
    REQUIRE(obs.features.size() == 1);
    CHECK(obs.features[0].landmark_index == 0);
    CHECK(obs.features[0].distance == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(obs.features[0].bearing) < 1e-9);

    // Occlusion: a box between the robot and the forward landmark.
    map.obstacles.push_back(smpc::Obstacle::make_box(6.0, 5.0, 0.2, 0.2));
    auto occluded = observe_features(Eigen::Vector3d(5, 5, 0), map, 90.0, 5.0, 0.0, rng);
    CHECK(occluded.features.empty());
}

TEST_CASE("landmark just past max range is excluded") {
    WorldMap map;
    map.landmarks.push_back(Eigen::Vector3d(5.0 + 5.0 + 1e-6, 5.0, 0.0));
    Rng rng(0);
    auto obs = observe_features(Eigen::Vector3d(5, 5, 0), map, 180.0, 5.0, 0.0, rng);
    CHECK(obs.features.empty());
}

TEST_CASE("map file round trip") {
    WorldMap map;
    map.xmin = -1.0;
    map.ymax = 12.0;
    map.seed = 99;
    map.obstacles.push_back(smpc::Obstacle::make_circle(3.0, 4.0, 0.75, 1.25, 0.2));
    map.obstacles.push_back(smpc::Obstacle::make_box(6.0, 6.0, 0.5, 0.5));
    map.landmarks.push_back(Eigen::Vector3d(1.0, 2.0, 0.5));
    const std::string path = temp_path("snav_test_map.txt");
    save_map(map, path);
    WorldMap back = load_map(path);
    CHECK(back.xmin == map.xmin);
    CHECK(back.ymax == map.ymax);
    CHECK(back.seed == map.seed);
    REQUIRE(back.obstacles.size() == 2);
    CHECK(back.obstacles[0].is_circle());
    CHECK(back.obstacles[0].circle().radius == doctest::Approx(0.75));
    CHECK(back.obstacles[0].height == doctest::Approx(1.25));
    CHECK(back.obstacles[0].risk_delta == doctest::Approx(0.2));
    CHECK(std::isinf(back.obstacles[1].height));
    REQUIRE(back.landmarks.size() == 1);
    CHECK((back.landmarks[0] - map.landmarks[0]).norm() < 1e-12);
    std::remove(path.c_str());
}

TEST_CASE("generated maps are valid and keep the border free") {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        MapGenParams p;
        p.obstacle_cells = 8;
        p.landmark_count = 10;
        WorldMap map = generate_random_map(rng, p);
        map.validate();
        CHECK(static_cast<int>(map.landmarks.size()) == 10);
        for (int x = 0; x < map.grid_width(); ++x) {
            CHECK_FALSE(map.cell_blocked(x, 0));
            CHECK_FALSE(map.cell_blocked(x, map.grid_height() - 1));
        }
        for (int y = 0; y < map.grid_height(); ++y) {
            CHECK_FALSE(map.cell_blocked(0, y));
            CHECK_FALSE(map.cell_blocked(map.grid_width() - 1, y));
        }
    }
}

// ---------------------------------------------------------------------------
// Particle filter
// ---------------------------------------------------------------------------

TEST_CASE("pf weights normalized and particle count constant") {
    WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_box(7.0, 5.0, 0.5, 0.5));
    Rng rng(11);
    PfConfig cfg;
    PfBelief belief = pf_init_gaussian(Eigen::Vector3d(3, 5, 0), 0.3, 0.1, cfg, rng);
    const size_t n0 = belief.particles.size();
    Eigen::Vector3d pose(3, 5, 0);
    for (int step = 0; step < 15; ++step) {
        auto scan = lidar_scan(pose, map, cfg.max_range, 0.02, rng);
        pf_localize(belief, Eigen::Vector3d::Zero(), scan, map, cfg, rng);
        CHECK(belief.particles.size() == n0);
        double wsum = 0.0;
        for (const auto& p : belief.particles) wsum += p.weight;
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("pf covariance concentrates under repeated informative scans") {
    WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_box(7.0, 5.0, 0.5, 0.5));
    map.obstacles.push_back(smpc::Obstacle::make_box(3.0, 8.0, 0.5, 0.5));
    Rng rng(2);
    PfConfig cfg;
    PfBelief belief = pf_init_gaussian(Eigen::Vector3d(3, 5, 0), 0.4, 0.1, cfg, rng);
    Eigen::Vector3d pose(3, 5, 0);
    double first_trace = -1.0, last_trace = -1.0;
    for (int step = 0; step < 10; ++step) {
        auto scan = lidar_scan(pose, map, cfg.max_range, 0.0, rng);
        auto est = pf_localize(belief, Eigen::Vector3d::Zero(), scan, map, cfg, rng);
        CHECK(min_eigenvalue(est.position_cov) >= -1e-10);
        CHECK((est.position_cov - est.position_cov.transpose()).norm() < 1e-12);
        if (step == 0) first_trace = est.position_cov.trace();
        last_trace = est.position_cov.trace();
    }
    CHECK(last_trace <= first_trace + 1e-12);
}

TEST_CASE("pf uniform prior spread matches the analytic variance") {
    WorldMap map;  // empty: scans are uninformative (all max range)
    Rng rng(8);
    PfConfig cfg;
    cfg.particle_count = 4000;
    PfBelief belief = pf_init_uniform(map, cfg, rng);
    auto scan = lidar_scan(Eigen::Vector3d(5, 5, 0), map, cfg.max_range, 0.0, rng);
    auto est = pf_localize(belief, Eigen::Vector3d::Zero(), scan, map, cfg, rng);
    // Uniform on [0, 10]^2: var = 100/12 per axis, trace = 2 * 100/12.
    const double expect = 2.0 * 100.0 / 12.0;
    CHECK(est.position_cov.trace() > 0.8 * expect);
    CHECK(est.position_cov.trace() < 1.2 * expect);
}

TEST_CASE("pf recovers from a teleported belief") {
    WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_box(7.0, 5.0, 0.5, 0.5));
    map.obstacles.push_back(smpc::Obstacle::make_box(4.0, 2.0, 0.5, 0.5));
    map.obstacles.push_back(smpc::Obstacle::make_box(2.0, 7.0, 0.5, 0.5));
    Rng rng(31);
    PfConfig cfg;
    cfg.particle_count = 500;
    // Belief centered 1.5 m away from the true pose with a wide spread.
    PfBelief belief = pf_init_gaussian(Eigen::Vector3d(4.5, 6.5, 0), 0.8, 0.2, cfg, rng);
    const Eigen::Vector3d truth(3, 5, 0);
    double first_err = -1.0, last_err = -1.0;
    for (int step = 0; step < 20; ++step) {
        auto scan = lidar_scan(truth, map, cfg.max_range, 0.01, rng);
        auto est = pf_localize(belief, Eigen::Vector3d::Zero(), scan, map, cfg, rng);
        const double err = (est.mean.head<2>() - truth.head<2>()).norm();
        if (step == 0) first_err = err;
        last_err = err;
    }
    CHECK(last_err < 0.5 * first_err);
    CHECK(last_err < 0.3);
}

// ---------------------------------------------------------------------------
// EKF
// ---------------------------------------------------------------------------

TEST_CASE("ekf predict-only grows the covariance") {
    EkfBelief belief{Eigen::Vector3d(5, 5, 0), Eigen::Matrix3d::Identity() * 0.01};
    EkfConfig cfg;
    const double t0 = belief.cov.topLeftCorner<2, 2>().trace();
    FeatureObservation empty;
    auto est = ekf_localize(belief, Eigen::Vector3d(0.1, 0.0, 0.05), empty, {}, cfg);
    CHECK(est.position_cov.trace() > t0);
    CHECK(min_eigenvalue(est.position_cov) >= -1e-12);
}

TEST_CASE("features reduce the covariance relative to predict-only") {
    WorldMap map;
    for (int i = 0; i < 8; ++i)
        map.landmarks.push_back(Eigen::Vector3d(4.0 + i * 0.5, 6.5, 1.0));
    Rng rng(12);
    EkfConfig cfg;
    EkfBelief with{Eigen::Vector3d(5, 5, 0.5), Eigen::Matrix3d::Identity() * 0.05};
    EkfBelief without = with;
    for (int step = 0; step < 10; ++step) {
        auto obs = observe_features(Eigen::Vector3d(5, 5, 0.5), map, 160.0, 5.0, 0.01, rng);
        ekf_localize(with, Eigen::Vector3d::Zero(), obs, map.landmarks, cfg);
        FeatureObservation empty;
        ekf_localize(without, Eigen::Vector3d::Zero(), empty, map.landmarks, cfg);
    }
    CHECK(with.cov.topLeftCorner<2, 2>().trace() <
          without.cov.topLeftCorner<2, 2>().trace());
}

TEST_CASE("ekf consistency under zero noise") {
    WorldMap map;
    map.landmarks.push_back(Eigen::Vector3d(7.0, 5.5, 1.0));
    map.landmarks.push_back(Eigen::Vector3d(6.0, 3.5, 1.0));
    map.landmarks.push_back(Eigen::Vector3d(4.0, 6.8, 1.0));
    Rng rng(0);
    EkfConfig cfg;
    EkfBelief belief{Eigen::Vector3d(5, 5, 0), Eigen::Matrix3d::Identity() * 0.02};
    for (int step = 0; step < 10; ++step) {
        auto obs = observe_features(Eigen::Vector3d(5, 5, 0), map, 359.0, 5.0, 0.0, rng);
        REQUIRE(obs.features.size() == 3);
        ekf_localize(belief, Eigen::Vector3d::Zero(), obs, map.landmarks, cfg);
    }
    CHECK((belief.mean.head<2>() - Eigen::Vector2d(5, 5)).norm() <= 1e-6);
}

TEST_CASE("gated features are skipped and counted") {
    WorldMap map;
    map.landmarks.push_back(Eigen::Vector3d(7.0, 5.0, 1.0));
    EkfConfig cfg;
    EkfBelief belief{Eigen::Vector3d(5, 5, 0), Eigen::Matrix3d::Identity() * 1e-6};
    FeatureObservation obs;
    Feature f;
    f.landmark_index = 0;
    f.distance = 4.9;  // wildly inconsistent with the 2 m truth
    f.bearing = 0.0;
    obs.features.push_back(f);
    EkfStepInfo info;
    ekf_localize(belief, Eigen::Vector3d::Zero(), obs, map.landmarks, cfg, &info);
    CHECK(info.features_gated == 1);
    CHECK(info.features_used == 0);
}

TEST_CASE("more visible features mean lower uncertainty (statistical)") {
    // Matched-seed trials: the run observing many landmarks should end with
    // a smaller planar covariance trace than the few-landmark run almost
    // always.
    int wins = 0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
        WorldMap rich, poor;
        Rng layout(100 + t);
        for (int i = 0; i < 10; ++i) {
            Eigen::Vector3d lm(layout.uniform(3.0, 7.0), layout.uniform(3.0, 7.0), 1.0);
            rich.landmarks.push_back(lm);
            if (i < 2) poor.landmarks.push_back(lm);
        }
        EkfConfig cfg;
        double traces[2];
        int idx = 0;
        for (const WorldMap* map : {&rich, &poor}) {
            Rng rng(200 + t);  // matched seeds
            EkfBelief belief{Eigen::Vector3d(5, 5, 0), Eigen::Matrix3d::Identity() * 0.05};
            for (int step = 0; step < 12; ++step) {
                auto obs =
                    observe_features(Eigen::Vector3d(5, 5, 0), *map, 359.0, 5.0, 0.01, rng);
                ekf_localize(belief, Eigen::Vector3d::Zero(), obs, map->landmarks, cfg);
            }
            traces[idx++] = belief.cov.topLeftCorner<2, 2>().trace();
        }
        if (traces[0] < traces[1]) ++wins;
    }
    CHECK(wins >= 25);
}
