#ifndef SNAV_DQN_HPP
#define SNAV_DQN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "snav/grid_env.hpp"
#include "snav/rng.hpp"

namespace snav::dqn {

/// Two-hidden-layer ReLU MLP mapping the encoded grid state to one Q-value
/// per joint action.
struct QNetwork {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    int input_dim() const { return static_cast<int>(w1.cols()); }
    int output_dim() const { return static_cast<int>(w3.rows()); }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;  // cols = samples

    static QNetwork init(int input_dim, int hidden, int output_dim, std::uint64_t seed);
    void validate() const;
};

/// Highest-Q action; ties broken toward the lowest action index so greedy
/// play is deterministic.
long argmax_action(const Eigen::VectorXd& q);

struct Transition {
    Eigen::VectorXd state, next_state;
    long action = 0;
    double reward = 0.0;
    bool terminal = false;
};

/// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    const Transition& sample(Rng& rng) const;

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

struct DqnConfig {
    int n_robots = 2;
    std::vector<dyn::RobotKind> kinds;  // defaults to all UGV when empty
    int episodes = 12000;
    int step_cap = 64;
    int obstacle_cells = 6;
    bool wall_features = false;
    std::uint64_t seed = 0;

    int hidden = 96;
    double learning_rate = 1e-3;
    int batch_size = 64;
    std::size_t buffer_capacity = 100000;
    std::size_t warmup = 1000;      // transitions before updates start
    int target_sync_steps = 500;    // copy online -> target every N updates
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.6;  // fraction of episodes to anneal over
    RewardConfig reward{.proximity_enabled = true};
    EncodeOptions encode;
    int curve_window = 25;  // episodes averaged per reward-curve point
};

struct DqnTrainResult {
    QNetwork net;
    std::vector<double> reward_curve;       // windowed average episode return
    std::vector<double> episode_returns;    // raw, per episode
};

/// Q-learning with experience replay and a periodically-synced target
/// network on randomly generated grid instances. Deterministic for a seed.
DqnTrainResult train_dqn(const DqnConfig& config);

struct GreedyResult {
    bool success = false;     // every robot reached its goal, no collision
    bool collision = false;
    int steps = 0;
    std::vector<std::vector<GridCell>> paths;  // per robot, includes start
};

/// Rolls the greedy policy on a copy of the environment until terminal.
GreedyResult run_greedy(const QNetwork& net, GridEnv env, const RewardConfig& reward,
                        const EncodeOptions& opt = {});

/// One greedy step from the current environment state: the next waypoint
/// (cell centers in world coordinates) each robot should head to.
std::vector<Eigen::Vector2d> next_targets(const QNetwork& net, const GridEnv& env,
                                          const sim::WorldMap& map,
                                          const EncodeOptions& opt = {});

void save_qnet(const QNetwork& net, const std::string& path);
QNetwork load_qnet(const std::string& path);

/// Reward curve as CSV (window_end_episode, mean_return).
void save_reward_curve(const DqnTrainResult& result, int window, const std::string& path);

}  // namespace snav::dqn

#endif
