#ifndef SNAV_HARNESS_HPP
#define SNAV_HARNESS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snav/dqn.hpp"
#include "snav/dynamics.hpp"
#include "snav/rnn.hpp"
#include "snav/smpc.hpp"
#include "snav/world.hpp"

namespace snav::run {

/// Controller ablations: plain MPC ignores uncertainty entirely; the naive
/// variant replaces chance margins with one fixed inflation; the RNN
/// variant drives straight at the global goal; the full stack adds the
/// learned global planner on top.
enum class AblationMode { Mpc, NaiveSmpc, SmpcRnn, Full };

enum class SensorKind { Lidar, Features };

std::string mode_name(AblationMode mode);
AblationMode mode_from_name(const std::string& name);
std::string sensor_name(SensorKind kind);
SensorKind sensor_from_name(const std::string& name);

struct RobotConfig {
    dyn::RobotKind kind = dyn::RobotKind::UGV;
    SensorKind sensor = SensorKind::Lidar;
    Eigen::Vector2d start{0.5, 0.5};
    Eigen::Vector2d goal{9.5, 9.5};
    double radius = 0.3;
    double sensing_radius = 3.0;
    double cruise_z = 1.5;  // UAV target altitude
    double sensor_range = 5.0;
    double sensor_noise_sd = 0.03;
    double feature_fov_deg = 120.0;
    std::string rnn_checkpoint;  // optional; constant-covariance fallback
};

struct RunConfig {
    std::string map_file;
    std::vector<RobotConfig> robots;
    AblationMode mode = AblationMode::Full;
    int horizon = 8;
    double dt = 0.1;
    double goal_tolerance = 0.3;  // epsilon
    double comm_range = 2.0;
    std::uint64_t seed = 0;
    int step_cap = 400;
    double naive_margin = 0.45;      // fixed inflation in naive mode
    double process_noise_scale = 1.0;
    std::string dqn_checkpoint;      // required for the full mode
    int dqn_obstacle_slots = 12;

    void validate() const;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);

/// One obstacle returned by the sensing query, flagged overflyable when a
/// UAV at cruise altitude clears its height.
struct ActiveObstacle {
    smpc::Obstacle obstacle;
    bool overflyable = false;
};

/// Perfect-detection sensing: every obstacle whose boundary lies within
/// the closed ball of `sensing_radius` around the position.
std::vector<ActiveObstacle> check_obstacles(const Eigen::Vector2d& position,
                                            double sensing_radius, const sim::WorldMap& map,
                                            double altitude = 0.0);

/// One row per robot per simulator tick. Timing fields are written to a
/// separate file so the metrics file is bitwise-reproducible.
struct StepRecord {
    int step = 0;
    int robot = 0;
    double x = 0.0, y = 0.0, z = 0.0;
    double dist_to_goal = 0.0;
    double cov_trace = 0.0;
    int collision = 0;
    int fusion = 0;
    int smpc_status = 0;  // numeric SolveStatus
    double smpc_time = 0.0, rnn_time = 0.0, localizer_time = 0.0;  // seconds
};

struct EpisodeMetrics {
    std::vector<StepRecord> records;
    bool success = false;
    bool collision = false;
    bool aborted = false;
    std::string abort_reason;
    int steps = 0;
    double time_to_goal = 0.0;  // sim seconds until the last robot arrived
    int fusion_count = 0;
};

EpisodeMetrics run_episode(const RunConfig& config);

/// Deterministic per-step metrics (no wall-clock columns).
void write_metrics_csv(const EpisodeMetrics& metrics, const std::string& path);
/// Wall-clock per-component times, one row per record.
void write_timing_csv(const EpisodeMetrics& metrics, const std::string& path);
/// Episode summary (success, steps, collisions, fusion count).
void write_summary_csv(const EpisodeMetrics& metrics, const std::string& path);

struct TimingRow {
    std::string component;
    double mean = 0.0, stddev = 0.0;
};

/// Per-component mean/std solve times plus a total row.
std::vector<TimingRow> timing_report(const EpisodeMetrics& metrics);
void write_timing_report_csv(const std::vector<TimingRow>& rows, const std::string& path);

struct BenchmarkRow {
    std::string planner;
    double mean_length = 0.0, std_length = 0.0;
    double mean_time_ms = 0.0, std_time_ms = 0.0;
    double success_rate = 0.0;
};

/// Repeated-trial comparison of the global planners on one map and
/// start/goal pair. The learned planner row is included when a Q-network
/// is supplied.
std::vector<BenchmarkRow> benchmark_planners(const sim::WorldMap& map,
                                             const Eigen::Vector2d& start,
                                             const Eigen::Vector2d& goal, int trials,
                                             std::uint64_t seed,
                                             const dqn::QNetwork* qnet = nullptr);
void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, const std::string& path);

/// Closed-loop data collection for the covariance predictor: a robot is
/// driven by the chance-constrained controller between random waypoints
/// while its localizer runs; per-step (sensor inputs, flattened 2x2
/// covariance) pairs are chopped into fixed-length training sequences.
rnn::TrainingSet collect_rnn_data(const sim::WorldMap& map, SensorKind sensor, int steps,
                                  std::uint64_t seed, int sequence_length = 25);

/// Input encoding used by collect_rnn_data and run_episode: position
/// estimate followed by the scan ranges (lidar) or zero-padded feature
/// distances (features, 20 slots).
constexpr int kFeatureSlots = 20;
int rnn_input_width(SensorKind sensor);

}  // namespace snav::run

#endif
