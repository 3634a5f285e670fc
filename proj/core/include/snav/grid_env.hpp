#ifndef SNAV_GRID_ENV_HPP
#define SNAV_GRID_ENV_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "snav/dynamics.hpp"
#include "snav/rng.hpp"
#include "snav/world.hpp"

namespace snav::dqn {

struct GridCell {
    int x = 0, y = 0;
    bool operator==(const GridCell&) const = default;
};

/// Reward shaping for the gridworld: +1 on reaching the goal, -1 terminal
/// on hitting an obstacle, optional +0.1 per step while robots are within
/// proximity_range of each other.
struct RewardConfig {
    double goal = 1.0;
    double obstacle = -1.0;
    double proximity = 0.1;
    double proximity_range = 2.0;
    bool proximity_enabled = false;
    double discount = 0.95;
};

enum class StateEncoding {
    Offsets,        // signed (dx, dy) pairs per obstacle slot and goal (default)
    PaperDistances  // scalar Euclidean distances, dim (N_j x n_r) + n_r
};

/// 2D gridworld of 1 m^2 cells for the high-level planner.
struct GridEnv {
    int width = 10, height = 10;
    std::vector<std::uint8_t> blocked;      // width*height, row-major y*width+x
    std::vector<std::uint8_t> overflyable;  // UAVs ignore these blocked cells
    std::vector<GridCell> robots, goals;
    std::vector<dyn::RobotKind> kinds;
    std::vector<std::uint8_t> done;
    int steps = 0;
    int step_cap = 64;

    int n_robots() const { return static_cast<int>(robots.size()); }
    bool cell_blocked(int x, int y) const { return blocked[y * width + x] != 0; }
    bool cell_overflyable(int x, int y) const { return overflyable[y * width + x] != 0; }
    bool in_grid(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    /// Blocked cells in lexicographic (y, x) order.
    std::vector<GridCell> obstacle_cells() const;
    bool all_done() const;
    void validate() const;

    static GridEnv empty(int width, int height);
    /// Grid view of a world map; cells become blocked when covered by an
    /// obstacle, overflyable when every covering obstacle has finite height.
    static GridEnv from_map(const sim::WorldMap& map);
};

/// Joint move: per-robot direction index in [0, 9) (0 = stay, then the 8
/// compass directions), encoded base-9 into [0, 9^n_r).
struct JointAction {
    std::vector<int> moves;

    long encode() const;
    static JointAction decode(long index, int n_robots);
    static long action_count(int n_robots);
};

/// Per-robot displacement of a move index (dx, dy).
GridCell move_delta(int move);

struct EncodeOptions {
    StateEncoding encoding = StateEncoding::Offsets;
    int obstacle_slots = 12;  // fixed slot capacity, padded when fewer
};

Eigen::VectorXd encode_state(const GridEnv& env, const EncodeOptions& opt = {});
int encoded_dim(int n_robots, const EncodeOptions& opt);

struct StepResult {
    Eigen::VectorXd state;
    std::vector<double> rewards;
    std::vector<std::uint8_t> done;  // per robot
    bool terminal = false;           // obstacle hit, all done, or step cap
    bool collision = false;
};

/// Applies a joint action: out-of-bounds moves become stay; entering a
/// blocked cell (unless the robot is a UAV and the cell is overflyable)
/// gives -1 and terminates the episode; reaching the goal gives +1 and
/// freezes the robot.
StepResult step_env(GridEnv& env, const JointAction& action, const RewardConfig& reward,
                    const EncodeOptions& opt = {});

/// Uniformly random training instance: blocked cells plus free start/goal
/// cells for every robot.
GridEnv random_episode_env(Rng& rng, int n_robots, int obstacle_cells,
                           const std::vector<dyn::RobotKind>& kinds, int step_cap,
                           bool wall_features = false);

/// Grid-BFS reachability (8-connected) treating blocked cells as walls.
bool grid_reachable(const GridEnv& env, const GridCell& from, const GridCell& to,
                    bool is_uav = false);

}  // namespace snav::dqn

#endif
