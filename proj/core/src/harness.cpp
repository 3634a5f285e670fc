#include "snav/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <json.hpp>
#include <stdexcept>

#include "snav/coop_kf.hpp"
#include "snav/localizers.hpp"
#include "snav/planners.hpp"
#include "snav/sensors.hpp"

namespace snav::run {

using json = nlohmann::json;

std::string mode_name(AblationMode mode) {
    switch (mode) {
        case AblationMode::Mpc: return "mpc";
        case AblationMode::NaiveSmpc: return "naive-smpc";
        case AblationMode::SmpcRnn: return "smpc-rnn";
        case AblationMode::Full: return "full";
    }
    throw std::logic_error("mode_name: bad mode");
}

AblationMode mode_from_name(const std::string& name) {
    if (name == "mpc") return AblationMode::Mpc;
    if (name == "naive-smpc") return AblationMode::NaiveSmpc;
    if (name == "smpc-rnn") return AblationMode::SmpcRnn;
    if (name == "full") return AblationMode::Full;
    throw std::invalid_argument("unknown ablation mode: " + name);
}

std::string sensor_name(SensorKind kind) {
    return kind == SensorKind::Lidar ? "lidar" : "features";
}

SensorKind sensor_from_name(const std::string& name) {
    if (name == "lidar") return SensorKind::Lidar;
    if (name == "features") return SensorKind::Features;
    throw std::invalid_argument("unknown sensor kind: " + name);
}

int rnn_input_width(SensorKind sensor) {
    return sensor == SensorKind::Lidar ? 2 + sim::kLidarBeams : 2 + kFeatureSlots;
}

void RunConfig::validate() const {
    if (robots.empty()) throw std::invalid_argument("RunConfig: no robots");
    if (goal_tolerance <= 0.0) throw std::invalid_argument("RunConfig: goal_tolerance <= 0");
    if (horizon < 1) throw std::invalid_argument("RunConfig: horizon < 1");
    if (dt <= 0.0) throw std::invalid_argument("RunConfig: dt <= 0");
    if (step_cap < 1) throw std::invalid_argument("RunConfig: step_cap < 1");
    if (mode == AblationMode::Full && dqn_checkpoint.empty())
        throw std::invalid_argument("RunConfig: full mode needs dqn_checkpoint");
    auto exists = [](const std::string& p) { return std::ifstream(p).good(); };
    if (!dqn_checkpoint.empty() && !exists(dqn_checkpoint))
        throw std::invalid_argument("RunConfig: missing checkpoint " + dqn_checkpoint);
    for (const auto& r : robots) {
        if (r.radius <= 0.0) throw std::invalid_argument("RunConfig: robot radius <= 0");
        if (!r.rnn_checkpoint.empty() && !exists(r.rnn_checkpoint))
            throw std::invalid_argument("RunConfig: missing checkpoint " + r.rnn_checkpoint);
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_run_config: cannot open " + path);
    json j;
    in >> j;
    RunConfig c;
    c.map_file = j.at("map_file").get<std::string>();
    c.mode = mode_from_name(j.value("mode", "full"));
    c.horizon = j.value("horizon", c.horizon);
    c.dt = j.value("dt", c.dt);
    c.goal_tolerance = j.value("goal_tolerance", c.goal_tolerance);
    c.comm_range = j.value("comm_range", c.comm_range);
    c.seed = j.value("seed", c.seed);
    c.step_cap = j.value("step_cap", c.step_cap);
    c.naive_margin = j.value("naive_margin", c.naive_margin);
    c.process_noise_scale = j.value("process_noise_scale", c.process_noise_scale);
    c.dqn_checkpoint = j.value("dqn_checkpoint", std::string());
    c.dqn_obstacle_slots = j.value("dqn_obstacle_slots", c.dqn_obstacle_slots);
    for (const auto& rj : j.at("robots")) {
        RobotConfig r;
        r.kind = rj.value("kind", std::string("ugv")) == "uav" ? dyn::RobotKind::UAV
                                                               : dyn::RobotKind::UGV;
        r.sensor = sensor_from_name(rj.value("sensor", std::string("lidar")));
        const auto& s = rj.at("start");
        const auto& g = rj.at("goal");
        r.start = {s.at(0).get<double>(), s.at(1).get<double>()};
        r.goal = {g.at(0).get<double>(), g.at(1).get<double>()};
        r.radius = rj.value("radius", r.radius);
        r.sensing_radius = rj.value("sensing_radius", r.sensing_radius);
        r.cruise_z = rj.value("cruise_z", r.cruise_z);
        r.sensor_range = rj.value("sensor_range", r.sensor_range);
        r.sensor_noise_sd = rj.value("sensor_noise_sd", r.sensor_noise_sd);
        r.feature_fov_deg = rj.value("feature_fov_deg", r.feature_fov_deg);
        r.rnn_checkpoint = rj.value("rnn_checkpoint", std::string());
        c.robots.push_back(std::move(r));
    }
    return c;
}

void save_run_config(const RunConfig& config, const std::string& path) {
    json j;
    j["map_file"] = config.map_file;
    j["mode"] = mode_name(config.mode);
    j["horizon"] = config.horizon;
    j["dt"] = config.dt;
    j["goal_tolerance"] = config.goal_tolerance;
    j["comm_range"] = config.comm_range;
    j["seed"] = config.seed;
    j["step_cap"] = config.step_cap;
    j["naive_margin"] = config.naive_margin;
    j["process_noise_scale"] = config.process_noise_scale;
    j["dqn_checkpoint"] = config.dqn_checkpoint;
    j["dqn_obstacle_slots"] = config.dqn_obstacle_slots;
    j["robots"] = json::array();
    for (const auto& r : config.robots) {
        json rj;
        rj["kind"] = r.kind == dyn::RobotKind::UAV ? "uav" : "ugv";
        rj["sensor"] = sensor_name(r.sensor);
        rj["start"] = {r.start.x(), r.start.y()};
        rj["goal"] = {r.goal.x(), r.goal.y()};
        rj["radius"] = r.radius;
        rj["sensing_radius"] = r.sensing_radius;
        rj["cruise_z"] = r.cruise_z;
        rj["sensor_range"] = r.sensor_range;
        rj["sensor_noise_sd"] = r.sensor_noise_sd;
        rj["feature_fov_deg"] = r.feature_fov_deg;
        rj["rnn_checkpoint"] = r.rnn_checkpoint;
        j["robots"].push_back(rj);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_run_config: cannot open " + path);
    out << j.dump(2) << "\n";
}

std::vector<ActiveObstacle> check_obstacles(const Eigen::Vector2d& position,
                                            double sensing_radius, const sim::WorldMap& map,
                                            double altitude) {
    std::vector<ActiveObstacle> active;
    for (const auto& ob : map.obstacles) {
        if (ob.distance(position) <= sensing_radius) {  // closed ball
            ActiveObstacle a;
            a.obstacle = ob;
            a.overflyable = std::isfinite(ob.height) && altitude > ob.height;
            active.push_back(std::move(a));
        }
    }
    return active;
}

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Per-robot simulation state: ground truth, localizer belief, covariance
/// predictor context.
struct RobotRuntime {
    RobotConfig cfg;
    dyn::DynamicsModel model;
    dyn::RobotState truth;
    Eigen::Vector3d prev_true_pose{0, 0, 0};  // planar pose at last tick

    sim::PfBelief pf;
    sim::EkfBelief ekf;
    sim::PfConfig pf_cfg;
    sim::EkfConfig ekf_cfg;

    Eigen::Vector3d est{0, 0, 0};  // x, y, theta estimate
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity() * 0.01;

    std::optional<rnn::RnnWeights> rnn;
    std::deque<Eigen::VectorXd> history;  // recent predictor inputs

    Eigen::MatrixXd P;  // terminal weight, fixed per episode
    std::vector<Eigen::VectorXd> warm;  // previous controls, shifted
    bool done = false;
};

Eigen::Vector3d true_planar_pose(const RobotRuntime& r) {
    if (r.cfg.kind == dyn::RobotKind::UGV)
        return {r.truth.values(0), r.truth.values(1), r.truth.values(2)};
    return {r.truth.values(0), r.truth.values(4), 0.0};
}

/// Odometry increment in the robot frame between the previous and current
/// true planar poses.
Eigen::Vector3d odom_delta(const Eigen::Vector3d& prev, const Eigen::Vector3d& now) {
    const double c = std::cos(prev.z()), s = std::sin(prev.z());
    const double dx = now.x() - prev.x(), dy = now.y() - prev.y();
    return {c * dx + s * dy, -s * dx + c * dy,
            dyn::normalize_angle(now.z() - prev.z())};
}

Eigen::VectorXd predictor_input(const RobotRuntime& r, const sim::LidarScan* scan,
                                const sim::FeatureObservation* obs) {
    Eigen::VectorXd in(rnn_input_width(r.cfg.sensor));
    in(0) = r.est.x();
    in(1) = r.est.y();
    if (r.cfg.sensor == SensorKind::Lidar) {
        for (int b = 0; b < sim::kLidarBeams; ++b)
            in(2 + b) = scan ? scan->ranges[b] : r.cfg.sensor_range;
    } else {
        for (int k = 0; k < kFeatureSlots; ++k) {
            const bool have = obs && k < static_cast<int>(obs->features.size());
            in(2 + k) = have ? obs->features[k].distance : 0.0;
        }
    }
    return in;
}

/// Covariance sequence over the horizon: learned rollout when a predictor
/// is loaded, otherwise the current covariance held constant.
smpc::BeliefSequence predict_beliefs(const RobotRuntime& r, int horizon) {
    smpc::BeliefSequence seq;
    seq.covariances.push_back(r.cov);
    if (r.rnn && !r.history.empty()) {
        const std::vector<Eigen::VectorXd> inputs(r.history.begin(), r.history.end());
        for (const auto& s : rnn::forward(*r.rnn, inputs, horizon + 1))
            seq.covariances.push_back(s);
    } else {
        for (int k = 0; k < horizon + 1; ++k) seq.covariances.push_back(r.cov);
    }
    return seq;
}

Eigen::VectorXd reference_state(const RobotRuntime& r, const Eigen::Vector2d& target) {
    if (r.cfg.kind == dyn::RobotKind::UGV) {
        Eigen::VectorXd ref(dyn::kUgvStateDim);
        const double dx = target.x() - r.est.x(), dy = target.y() - r.est.y();
        const double heading = (std::hypot(dx, dy) > 1e-6) ? std::atan2(dy, dx) : r.est.z();
        ref << target.x(), target.y(), heading;
        return ref;
    }
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(dyn::kUavStateDim);
    ref(0) = target.x();
    ref(4) = target.y();
    ref(8) = r.cfg.cruise_z;
    return ref;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stage_weights(dyn::RobotKind kind) {
    if (kind == dyn::RobotKind::UGV) {
        Eigen::MatrixXd Q = Eigen::Vector3d(10.0, 10.0, 0.1).asDiagonal();
        Eigen::MatrixXd R = Eigen::Vector2d(1.0, 0.2).asDiagonal();
        return {Q, R};
    }
    Eigen::VectorXd qd(dyn::kUavStateDim);
    qd << 10.0, 1.0, 0.1, 0.1, 10.0, 1.0, 0.1, 0.1, 10.0, 1.0;
    Eigen::MatrixXd Q = qd.asDiagonal();
    Eigen::MatrixXd R = Eigen::Matrix3d::Identity() * 0.5;
    return {Q, R};
}

/// Terminal weight for the horizon cost. The unicycle linearized at a
/// fixed heading cannot move sideways (rank-2 B with A = I), so its
/// Riccati recursion has no fixed point; use a fully-actuated surrogate
/// with the same rates instead. The quadrotor model is stabilizable as is.
Eigen::MatrixXd terminal_weight_for(const dyn::DynamicsModel& model,
                                    const dyn::RobotState& state,
                                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
    if (model.kind == dyn::RobotKind::UGV) {
        const Eigen::MatrixXd A = Eigen::Matrix3d::Identity();
        const Eigen::MatrixXd B = Eigen::Matrix3d::Identity() * model.dt;
        const Eigen::MatrixXd Rs =
            Eigen::Vector3d(R(0, 0), R(0, 0), R(1, 1)).asDiagonal();
        return smpc::terminal_weight(A, B, Q, Rs);
    }
    const auto [A, B] = model.linearize(state);
    return smpc::terminal_weight(A, B, Q, R);
}

/// True-pose collision test honoring UAV overfly: an obstacle is inactive
/// for a robot flying above its height.
bool in_collision(const RobotRuntime& r, const sim::WorldMap& map) {
    const Eigen::Vector2d p = r.truth.position();
    const double z = r.truth.z();
    for (const auto& ob : map.obstacles) {
        if (r.cfg.kind == dyn::RobotKind::UAV && std::isfinite(ob.height) && z > ob.height)
            continue;
        if (ob.distance(p) < r.cfg.radius) return true;
    }
    return false;
}

/// Writes a fused planar position belief back into the localizer state.
void apply_planar_correction(RobotRuntime& r, const Eigen::Vector2d& new_mean,
                             const Eigen::Matrix2d& new_cov) {
    const Eigen::Vector2d shift = new_mean - r.est.head<2>();
    r.est.head<2>() += shift;
    r.cov = new_cov;
    if (r.cfg.sensor == SensorKind::Lidar) {
        for (auto& p : r.pf.particles) p.pose.head<2>() += shift;
    } else {
        r.ekf.mean.head<2>() += shift;
        r.ekf.cov.topLeftCorner<2, 2>() = new_cov;
        // Drop the position-heading cross terms: replacing only the planar
        // block can break positive semidefiniteness of the full matrix.
        r.ekf.cov.topRightCorner<2, 1>().setZero();
        r.ekf.cov.bottomLeftCorner<1, 2>().setZero();
    }
}

}  // namespace

EpisodeMetrics run_episode(const RunConfig& config) {
    config.validate();
    const sim::WorldMap map = sim::load_map(config.map_file);
    Rng rng(config.seed);

    std::optional<dqn::QNetwork> qnet;
    if (config.mode == AblationMode::Full) qnet = dqn::load_qnet(config.dqn_checkpoint);

    const int n_r = static_cast<int>(config.robots.size());
    std::vector<RobotRuntime> robots(n_r);
    for (int i = 0; i < n_r; ++i) {
        RobotRuntime& r = robots[i];
        r.cfg = config.robots[i];
        r.model = r.cfg.kind == dyn::RobotKind::UGV ? dyn::DynamicsModel::ugv(config.dt)
                                                    : dyn::DynamicsModel::uav(config.dt);
        if (r.cfg.kind == dyn::RobotKind::UGV) {
            r.truth.kind = dyn::RobotKind::UGV;
            r.truth.values = Eigen::Vector3d(
                r.cfg.start.x(), r.cfg.start.y(),
                std::atan2(r.cfg.goal.y() - r.cfg.start.y(),
                           r.cfg.goal.x() - r.cfg.start.x()));
        } else {
            r.truth.kind = dyn::RobotKind::UAV;
            r.truth.values = Eigen::VectorXd::Zero(dyn::kUavStateDim);
            r.truth.values(0) = r.cfg.start.x();
            r.truth.values(4) = r.cfg.start.y();
            r.truth.values(8) = r.cfg.cruise_z;
        }
        r.prev_true_pose = true_planar_pose(r);
        r.est = r.prev_true_pose;
        r.pf_cfg.max_range = r.cfg.sensor_range;
        if (r.cfg.sensor == SensorKind::Lidar) {
            r.pf = sim::pf_init_gaussian(r.est, 0.05, 0.02, r.pf_cfg, rng);
        } else {
            r.ekf.mean = r.est;
            r.ekf.cov = Eigen::Vector3d(0.01, 0.01, 0.005).asDiagonal();
        }
        if (!r.cfg.rnn_checkpoint.empty()) r.rnn = rnn::load_weights(r.cfg.rnn_checkpoint);
        const auto [Q, R] = stage_weights(r.cfg.kind);
        r.P = terminal_weight_for(r.model, r.truth, Q, R);
    }

    // Cross-covariances between robot pairs, keyed (i, j) with i < j.
    std::map<std::pair<int, int>, Eigen::MatrixXd> cross;
    const Eigen::Matrix2d r_rel = Eigen::Matrix2d::Identity() * 0.01;

    dqn::GridEnv grid = dqn::GridEnv::from_map(map);
    dqn::EncodeOptions encode;
    encode.obstacle_slots = config.dqn_obstacle_slots;

    EpisodeMetrics metrics;
    int arrived_step = -1;

    // Robots already within tolerance need no steps at all.
    for (auto& r : robots)
        if ((r.truth.position() - r.cfg.goal).norm() <= config.goal_tolerance) r.done = true;
    bool all_done_now = true;
    for (const auto& r : robots) all_done_now = all_done_now && r.done;

    for (int step = 0; !all_done_now && step < config.step_cap; ++step) {
        // --- DQN waypoints (serialized at the tick boundary) ---
        std::vector<Eigen::Vector2d> targets(n_r);
        if (config.mode == AblationMode::Full) {
            grid.robots.clear();
            grid.goals.clear();
            grid.kinds.clear();
            grid.done.clear();
            for (const auto& r : robots) {
                auto clamp_cell = [&](const Eigen::Vector2d& p) {
                    return dqn::GridCell{
                        std::clamp(static_cast<int>((p.x() - map.xmin) / map.resolution), 0,
                                   grid.width - 1),
                        std::clamp(static_cast<int>((p.y() - map.ymin) / map.resolution), 0,
                                   grid.height - 1)};
                };
                grid.robots.push_back(clamp_cell(r.est.head<2>()));
                grid.goals.push_back(clamp_cell(r.cfg.goal));
                grid.kinds.push_back(r.cfg.kind);
                grid.done.push_back(r.done ? 1 : 0);
            }
            targets = dqn::next_targets(*qnet, grid, map, encode);
        } else {
            for (int i = 0; i < n_r; ++i) targets[i] = robots[i].cfg.goal;
        }

        std::vector<StepRecord> rows(n_r);
        bool any_collision = false;

        for (int i = 0; i < n_r; ++i) {
            RobotRuntime& r = robots[i];
            StepRecord& row = rows[i];
            row.step = step;
            row.robot = i;

            if (r.done) {
                row.x = r.truth.x();
                row.y = r.truth.y();
                row.z = r.truth.z();
                row.dist_to_goal = (r.truth.position() - r.cfg.goal).norm();
                row.cov_trace = r.cov.trace();
                continue;
            }

            // --- Perception + localization ---
            auto t0 = std::chrono::steady_clock::now();
            const Eigen::Vector3d pose = true_planar_pose(r);
            const Eigen::Vector3d delta = odom_delta(r.prev_true_pose, pose);
            sim::LidarScan scan;
            sim::FeatureObservation obs;
            try {
                if (r.cfg.sensor == SensorKind::Lidar) {
                    scan = sim::lidar_scan(pose, map, r.cfg.sensor_range,
                                           r.cfg.sensor_noise_sd, rng);
                    const auto est =
                        sim::pf_localize(r.pf, delta, scan, map, r.pf_cfg, rng);
                    r.est = est.mean;
                    r.cov = est.position_cov;
                } else {
                    obs = sim::observe_features(pose, map, r.cfg.feature_fov_deg,
                                                r.cfg.sensor_range, r.cfg.sensor_noise_sd,
                                                rng);
                    const auto est = sim::ekf_localize(r.ekf, delta, obs, map.landmarks,
                                                       r.ekf_cfg);
                    r.est = est.mean;
                    r.cov = est.position_cov;
                }
            } catch (const std::exception& e) {
                // Sensor fault (pose inside an obstacle) counts as collision.
                any_collision = true;
                row.collision = 1;
                continue;
            }
            r.prev_true_pose = pose;
            row.localizer_time = seconds_since(t0);

            // --- Covariance prediction ---
            t0 = std::chrono::steady_clock::now();
            r.history.push_back(predictor_input(
                r, r.cfg.sensor == SensorKind::Lidar ? &scan : nullptr,
                r.cfg.sensor == SensorKind::Features ? &obs : nullptr));
            if (r.history.size() > 10) r.history.pop_front();
            const smpc::BeliefSequence beliefs = predict_beliefs(r, config.horizon);
            row.rnn_time = seconds_since(t0);

            // --- Local controller ---
            t0 = std::chrono::steady_clock::now();
            smpc::SmpcProblem problem;
            problem.model = r.model;
            problem.params.horizon = config.horizon;
            std::tie(problem.params.Q, problem.params.R) = stage_weights(r.cfg.kind);
            problem.params.P = r.P;
            problem.params.robot_radius = r.cfg.radius;
            problem.params.candidate_limit = 12;  // anytime closed-loop budget
            problem.params.attempt_limit = 40;
            problem.params.qp_tol = 1e-8;
            problem.params.ignore_uncertainty = config.mode == AblationMode::Mpc;
            if (config.mode == AblationMode::NaiveSmpc)
                problem.params.fixed_margin = config.naive_margin;
            problem.reference = {reference_state(r, targets[i])};
            for (const auto& a :
                 check_obstacles(r.est.head<2>(), r.cfg.sensing_radius, map, r.truth.z()))
                problem.obstacles.push_back(a.obstacle);
            problem.belief = beliefs;

            dyn::RobotState x0 = r.truth;
            x0.values(r.model.x_index()) = r.est.x();
            x0.values(r.model.y_index()) = r.est.y();
            if (r.cfg.kind == dyn::RobotKind::UGV) x0.values(2) = r.est.z();

            smpc::SmpcSolution sol;
            try {
                sol = smpc::solve(problem, x0, r.warm.empty() ? nullptr : &r.warm);
            } catch (const std::exception& e) {
                metrics.aborted = true;
                metrics.abort_reason = e.what();
                metrics.records.insert(metrics.records.end(), rows.begin(),
                                       rows.begin() + i + 1);
                metrics.steps = step + 1;
                return metrics;
            }
            row.smpc_time = seconds_since(t0);
            row.smpc_status = static_cast<int>(sol.status);
            if (!sol.controls.empty()) {
                r.warm.assign(sol.controls.begin() + 1, sol.controls.end());
                r.warm.push_back(sol.controls.back());
            }

            // --- Actuate with process noise ---
            dyn::ControlInput u;
            u.values = sol.controls.empty()
                           ? Eigen::VectorXd::Zero(r.model.control_dim())
                           : sol.controls.front();
            r.truth = r.model.step(r.truth, u);
            for (int k = 0; k < r.truth.values.size(); ++k) {
                const double sd = std::sqrt(r.model.process_noise_var(k)) *
                                  config.process_noise_scale;
                if (sd > 0.0) r.truth.values(k) += rng.gaussian(0.0, sd);
            }
            if (r.cfg.kind == dyn::RobotKind::UGV)
                r.truth.values(2) = dyn::normalize_angle(r.truth.values(2));

            if (in_collision(r, map)) {
                any_collision = true;
                row.collision = 1;
            }

            row.x = r.truth.x();
            row.y = r.truth.y();
            row.z = r.truth.z();
            row.dist_to_goal = (r.truth.position() - r.cfg.goal).norm();
            row.cov_trace = r.cov.trace();
            if (row.dist_to_goal <= config.goal_tolerance) r.done = true;
        }

        // --- Pairwise fusion at the tick boundary (deterministic order) ---
        if (!any_collision) {
            for (int i = 0; i < n_r; ++i) {
                for (int j = i + 1; j < n_r; ++j) {
                    const double d =
                        (robots[i].truth.position() - robots[j].truth.position()).norm();
                    if (d > config.comm_range) continue;
                    ckf::PairBelief pb;
                    pb.x_i = robots[i].est.head<2>();
                    pb.x_j = robots[j].est.head<2>();
                    pb.sigma_i = robots[i].cov;
                    pb.sigma_j = robots[j].cov;
                    pb.r_ij = r_rel;
                    auto it = cross.find({i, j});
                    if (it != cross.end()) pb.sigma_ij = it->second;
                    Eigen::VectorXd noise(2);
                    noise << rng.gaussian(0.0, 0.1), rng.gaussian(0.0, 0.1);
                    const Eigen::VectorXd z = ckf::relative_measurement(
                        robots[i].truth.position(), robots[j].truth.position(), noise);
                    const ckf::PairBelief fused = ckf::fuse(pb, z);
                    cross[{i, j}] = *fused.sigma_ij;
                    apply_planar_correction(robots[i], fused.x_i, fused.sigma_i);
                    apply_planar_correction(robots[j], fused.x_j, fused.sigma_j);
                    rows[i].fusion = 1;
                    rows[j].fusion = 1;
                    metrics.fusion_count += 1;
                }
            }
        }

        metrics.records.insert(metrics.records.end(), rows.begin(), rows.end());
        metrics.steps = step + 1;
        if (any_collision) {
            metrics.collision = true;
            break;
        }
        bool all_done = true;
        for (const auto& r : robots) all_done = all_done && r.done;
        if (all_done) {
            arrived_step = step;
            break;
        }
    }

    bool all_done = true;
    for (const auto& r : robots) all_done = all_done && r.done;
    metrics.success = all_done && !metrics.collision && !metrics.aborted;
    metrics.time_to_goal =
        metrics.success ? (arrived_step + 1) * config.dt : config.step_cap * config.dt;
    return metrics;
}

void write_metrics_csv(const EpisodeMetrics& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    out.precision(12);
    out << "step,robot,x,y,z,dist_to_goal,cov_trace,collision,fusion,smpc_status\n";
    for (const auto& r : metrics.records)
        out << r.step << "," << r.robot << "," << r.x << "," << r.y << "," << r.z << ","
            << r.dist_to_goal << "," << r.cov_trace << "," << r.collision << ","
            << r.fusion << "," << r.smpc_status << "\n";
}

void write_timing_csv(const EpisodeMetrics& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_timing_csv: cannot open " + path);
    out.precision(9);
    out << "step,robot,localizer_s,rnn_s,smpc_s\n";
    for (const auto& r : metrics.records)
        out << r.step << "," << r.robot << "," << r.localizer_time << "," << r.rnn_time
            << "," << r.smpc_time << "\n";
}

void write_summary_csv(const EpisodeMetrics& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
    out << "success,collision,aborted,steps,time_to_goal,fusion_count\n";
    out << (metrics.success ? 1 : 0) << "," << (metrics.collision ? 1 : 0) << ","
        << (metrics.aborted ? 1 : 0) << "," << metrics.steps << "," << metrics.time_to_goal
        << "," << metrics.fusion_count << "\n";
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double m = 0.0;
    for (const double x : xs) m += x;
    m /= xs.size();
    double v = 0.0;
    for (const double x : xs) v += (x - m) * (x - m);
    v /= xs.size();
    return {m, std::sqrt(v)};
}

}  // namespace

std::vector<TimingRow> timing_report(const EpisodeMetrics& metrics) {
    if (metrics.records.empty()) throw std::invalid_argument("timing_report: no records");
    std::vector<double> loc, rnn_t, smpc_t, total;
    for (const auto& r : metrics.records) {
        loc.push_back(r.localizer_time);
        rnn_t.push_back(r.rnn_time);
        smpc_t.push_back(r.smpc_time);
        total.push_back(r.localizer_time + r.rnn_time + r.smpc_time);
    }
    std::vector<TimingRow> rows;
    auto add = [&](const std::string& name, const std::vector<double>& xs) {
        const auto [m, s] = mean_std(xs);
        rows.push_back({name, m, s});
    };
    add("localizer", loc);
    add("rnn", rnn_t);
    add("smpc", smpc_t);
    add("total", total);
    return rows;
}

void write_timing_report_csv(const std::vector<TimingRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_timing_report_csv: cannot open " + path);
    out << "component,mean_s,std_s\n";
    for (const auto& r : rows) out << r.component << "," << r.mean << "," << r.stddev << "\n";
}

std::vector<BenchmarkRow> benchmark_planners(const sim::WorldMap& map,
                                             const Eigen::Vector2d& start,
                                             const Eigen::Vector2d& goal, int trials,
                                             std::uint64_t seed,
                                             const dqn::QNetwork* qnet) {
    if (trials < 1) throw std::invalid_argument("benchmark_planners: trials < 1");
    dqn::GridEnv grid = dqn::GridEnv::from_map(map);
    auto to_cell = [&](const Eigen::Vector2d& p) {
        return dqn::GridCell{
            std::clamp(static_cast<int>((p.x() - map.xmin) / map.resolution), 0,
                       grid.width - 1),
            std::clamp(static_cast<int>((p.y() - map.ymin) / map.resolution), 0,
                       grid.height - 1)};
    };
    const dqn::GridCell sc = to_cell(start), gc = to_cell(goal);

    struct Series {
        std::vector<double> lengths, times;
        int successes = 0;
    };
    std::map<std::string, Series> series;

    for (int t = 0; t < trials; ++t) {
        {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = plan::astar(grid, sc, gc);
            const double ms = seconds_since(t0) * 1e3;
            auto& s = series["astar"];
            s.times.push_back(ms);
            if (res.success) {
                s.lengths.push_back(res.length);
                s.successes += 1;
            }
        }
        if (qnet != nullptr) {
            const auto t0 = std::chrono::steady_clock::now();
            dqn::GridEnv env = grid;
            env.robots = {sc};
            env.goals = {gc};
            env.kinds = {dyn::RobotKind::UGV};
            env.done = {0};
            env.step_cap = 64;
            const auto res = dqn::run_greedy(*qnet, env, dqn::RewardConfig{});
            const double ms = seconds_since(t0) * 1e3;
            auto& s = series["dqn"];
            s.times.push_back(ms);
            if (res.success) {
                double len = 0.0;
                const auto& path = res.paths[0];
                for (std::size_t i = 1; i < path.size(); ++i)
                    len += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
                s.lengths.push_back(len);
                s.successes += 1;
            }
        }
        plan::RrtParams rp;
        rp.seed = seed + static_cast<std::uint64_t>(t);
        {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = plan::rrt(map, start, goal, rp);
            const double ms = seconds_since(t0) * 1e3;
            auto& s = series["rrt"];
            s.times.push_back(ms);
            if (res.success) {
                s.lengths.push_back(res.length);
                s.successes += 1;
            }
        }
        {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = plan::rrt_star(map, start, goal, rp);
            const double ms = seconds_since(t0) * 1e3;
            auto& s = series["rrt_star"];
            s.times.push_back(ms);
            if (res.success) {
                s.lengths.push_back(res.length);
                s.successes += 1;
            }
        }
    }

    std::vector<BenchmarkRow> rows;
    for (const auto& [name, s] : series) {
        BenchmarkRow row;
        row.planner = name;
        std::tie(row.mean_length, row.std_length) = mean_std(s.lengths);
        std::tie(row.mean_time_ms, row.std_time_ms) = mean_std(s.times);
        row.success_rate = static_cast<double>(s.successes) / trials;
        rows.push_back(row);
    }
    return rows;
}

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_benchmark_csv: cannot open " + path);
    out << "planner,mean_length,std_length,mean_time_ms,std_time_ms,success_rate\n";
    for (const auto& r : rows)
        out << r.planner << "," << r.mean_length << "," << r.std_length << ","
            << r.mean_time_ms << "," << r.std_time_ms << "," << r.success_rate << "\n";
}

rnn::TrainingSet collect_rnn_data(const sim::WorldMap& map, SensorKind sensor, int steps,
                                  std::uint64_t seed, int sequence_length) {
    if (steps < 1) throw std::invalid_argument("collect_rnn_data: steps < 1");
    Rng rng(seed);

    RobotRuntime r;
    r.cfg.sensor = sensor;
    r.model = dyn::DynamicsModel::ugv(0.1);
    r.truth.kind = dyn::RobotKind::UGV;

    auto free_point = [&]() {
        for (int tries = 0; tries < 1000; ++tries) {
            Eigen::Vector2d p(rng.uniform(map.xmin + 0.5, map.xmax - 0.5),
                              rng.uniform(map.ymin + 0.5, map.ymax - 0.5));
            bool clear = true;
            for (const auto& ob : map.obstacles)
                if (ob.distance(p) < 0.5) clear = false;
            if (clear) return p;
        }
        throw std::runtime_error("collect_rnn_data: no free space in map");
    };

    const Eigen::Vector2d start = free_point();
    r.truth.values = Eigen::Vector3d(start.x(), start.y(), 0.0);
    r.prev_true_pose = true_planar_pose(r);
    r.est = r.prev_true_pose;
    if (sensor == SensorKind::Lidar) {
        r.pf = sim::pf_init_gaussian(r.est, 0.05, 0.02, r.pf_cfg, rng);
    } else {
        r.ekf.mean = r.est;
        r.ekf.cov = Eigen::Vector3d(0.01, 0.01, 0.005).asDiagonal();
    }
    const auto [Q, R] = stage_weights(dyn::RobotKind::UGV);
    r.P = terminal_weight_for(r.model, r.truth, Q, R);

    Eigen::Vector2d waypoint = free_point();
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::Vector4d> targets;

    for (int step = 0; step < steps; ++step) {
        const Eigen::Vector3d pose = true_planar_pose(r);
        const Eigen::Vector3d delta = odom_delta(r.prev_true_pose, pose);
        sim::LidarScan scan;
        sim::FeatureObservation obs;
        try {
            if (sensor == SensorKind::Lidar) {
                scan = sim::lidar_scan(pose, map, r.cfg.sensor_range,
                                       r.cfg.sensor_noise_sd, rng);
                const auto est = sim::pf_localize(r.pf, delta, scan, map, r.pf_cfg, rng);
                r.est = est.mean;
                r.cov = est.position_cov;
            } else {
                obs = sim::observe_features(pose, map, r.cfg.feature_fov_deg,
                                            r.cfg.sensor_range, r.cfg.sensor_noise_sd, rng);
                const auto est = sim::ekf_localize(r.ekf, delta, obs, map.landmarks,
                                                   r.ekf_cfg);
                r.est = est.mean;
                r.cov = est.position_cov;
            }
        } catch (const std::exception&) {
            // Drove into an obstacle: respawn and continue collecting.
            const Eigen::Vector2d p = free_point();
            r.truth.values = Eigen::Vector3d(p.x(), p.y(), 0.0);
            r.prev_true_pose = true_planar_pose(r);
            r.est = r.prev_true_pose;
            waypoint = free_point();
            continue;
        }
        r.prev_true_pose = pose;

        inputs.push_back(predictor_input(r, sensor == SensorKind::Lidar ? &scan : nullptr,
                                         sensor == SensorKind::Features ? &obs : nullptr));
        const Eigen::Matrix2d& s = r.cov;
        targets.push_back(Eigen::Vector4d(s(0, 0), s(0, 1), s(1, 0), s(1, 1)));

        if ((r.truth.position() - waypoint).norm() < 0.4) waypoint = free_point();

        smpc::SmpcProblem problem;
        problem.model = r.model;
        problem.params.horizon = 6;
        std::tie(problem.params.Q, problem.params.R) = stage_weights(dyn::RobotKind::UGV);
        problem.params.P = r.P;
        problem.params.robot_radius = r.cfg.radius;
        problem.params.candidate_limit = 12;
        problem.params.attempt_limit = 40;
        problem.params.qp_tol = 1e-8;
        problem.reference = {reference_state(r, waypoint)};
        for (const auto& a : check_obstacles(r.est.head<2>(), r.cfg.sensing_radius, map))
            problem.obstacles.push_back(a.obstacle);
        problem.belief = smpc::BeliefSequence::constant(r.cov, problem.params.horizon + 1);

        dyn::RobotState x0 = r.truth;
        x0.values(0) = r.est.x();
        x0.values(1) = r.est.y();
        x0.values(2) = r.est.z();
        smpc::SmpcSolution sol;
        try {
            sol = smpc::solve(problem, x0);
        } catch (const std::exception&) {
            waypoint = free_point();
            continue;
        }
        if (sol.controls.empty() || sol.status == smpc::SolveStatus::Infeasible) {
            waypoint = free_point();
            continue;
        }
        dyn::ControlInput u{sol.controls.front()};
        r.truth = r.model.step(r.truth, u);
        r.truth.values(0) += rng.gaussian(0.0, 0.01);
        r.truth.values(1) += rng.gaussian(0.0, 0.01);
        r.truth.values(2) =
            dyn::normalize_angle(r.truth.values(2) + rng.gaussian(0.0, 0.005));
    }

    rnn::TrainingSet set;
    for (std::size_t at = 0; at + sequence_length <= inputs.size();
         at += sequence_length) {
        rnn::TrainingSequence seq;
        seq.inputs.assign(inputs.begin() + at, inputs.begin() + at + sequence_length);
        seq.targets.assign(targets.begin() + at, targets.begin() + at + sequence_length);
        set.sequences.push_back(std::move(seq));
    }
    return set;
}

}  // namespace snav::run
