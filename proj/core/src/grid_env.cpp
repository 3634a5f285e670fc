#include "snav/grid_env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace snav::dqn {

std::vector<GridCell> GridEnv::obstacle_cells() const {
    std::vector<GridCell> cells;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (blocked[y * width + x]) cells.push_back({x, y});
    return cells;
}

bool GridEnv::all_done() const {
    for (const auto d : done)
        if (!d) return false;
    return true;
}

void GridEnv::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("GridEnv: empty grid");
    const auto n = static_cast<std::size_t>(width * height);
    if (blocked.size() != n || overflyable.size() != n)
        throw std::invalid_argument("GridEnv: cell array size mismatch");
    if (robots.size() != goals.size() || robots.size() != kinds.size() ||
        robots.size() != done.size())
        throw std::invalid_argument("GridEnv: robot array size mismatch");
    for (const auto& r : robots)
        if (!in_grid(r.x, r.y)) throw std::invalid_argument("GridEnv: robot off grid");
    for (const auto& g : goals)
        if (!in_grid(g.x, g.y)) throw std::invalid_argument("GridEnv: goal off grid");
}

GridEnv GridEnv::empty(int width, int height) {
    GridEnv env;
    env.width = width;
    env.height = height;
    env.blocked.assign(static_cast<std::size_t>(width * height), 0);
    env.overflyable.assign(static_cast<std::size_t>(width * height), 0);
    return env;
}

GridEnv GridEnv::from_map(const sim::WorldMap& map) {
    const int w = static_cast<int>(std::lround((map.xmax - map.xmin) / map.resolution));
    const int h = static_cast<int>(std::lround((map.ymax - map.ymin) / map.resolution));
    GridEnv env = empty(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double cx = map.xmin + (x + 0.5) * map.resolution;
            const double cy = map.ymin + (y + 0.5) * map.resolution;
            bool hit = false, all_finite = true;
            for (const auto& ob : map.obstacles) {
                if (ob.contains(Eigen::Vector2d(cx, cy))) {
                    hit = true;
                    if (std::isinf(ob.height)) all_finite = false;
                }
            }
            env.blocked[y * w + x] = hit ? 1 : 0;
            env.overflyable[y * w + x] = (hit && all_finite) ? 1 : 0;
        }
    }
    return env;
}

long JointAction::encode() const {
    long idx = 0;
    // Robot 0 is the least-significant digit.
    for (int i = static_cast<int>(moves.size()) - 1; i >= 0; --i) {
        if (moves[i] < 0 || moves[i] > 8)
            throw std::invalid_argument("JointAction: move out of range");
        idx = idx * 9 + moves[i];
    }
    return idx;
}

JointAction JointAction::decode(long index, int n_robots) {
    if (index < 0 || index >= action_count(n_robots))
        throw std::invalid_argument("JointAction: index out of range");
    JointAction a;
    a.moves.resize(n_robots);
    for (int i = 0; i < n_robots; ++i) {
        a.moves[i] = static_cast<int>(index % 9);
        index /= 9;
    }
    return a;
}

long JointAction::action_count(int n_robots) {
    long n = 1;
    for (int i = 0; i < n_robots; ++i) n *= 9;
    return n;
}

GridCell move_delta(int move) {
    // 0 = stay, then E, NE, N, NW, W, SW, S, SE.
    static constexpr int dx[9] = {0, 1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr int dy[9] = {0, 0, 1, 1, 1, 0, -1, -1, -1};
    if (move < 0 || move > 8) throw std::invalid_argument("move_delta: bad move");
    return {dx[move], dy[move]};
}

int encoded_dim(int n_robots, const EncodeOptions& opt) {
    if (opt.encoding == StateEncoding::Offsets)
        return n_robots * (2 * opt.obstacle_slots + 2);
    return n_robots * opt.obstacle_slots + n_robots;
}

Eigen::VectorXd encode_state(const GridEnv& env, const EncodeOptions& opt) {
    const auto obstacles = env.obstacle_cells();
    const int slots = opt.obstacle_slots;
    const int n_r = env.n_robots();
    Eigen::VectorXd s(encoded_dim(n_r, opt));
    // Padding for empty slots: a displacement larger than any on-grid one,
    // so "no obstacle" never looks like a nearby obstacle.
    const double pad = static_cast<double>(env.width + env.height);
    int at = 0;
    if (opt.encoding == StateEncoding::Offsets) {
        for (int i = 0; i < n_r; ++i) {
            for (int j = 0; j < slots; ++j) {
                if (j < static_cast<int>(obstacles.size())) {
                    s(at++) = obstacles[j].x - env.robots[i].x;
                    s(at++) = obstacles[j].y - env.robots[i].y;
                } else {
                    s(at++) = pad;
                    s(at++) = pad;
                }
            }
            s(at++) = env.goals[i].x - env.robots[i].x;
            s(at++) = env.goals[i].y - env.robots[i].y;
        }
    } else {
        for (int i = 0; i < n_r; ++i) {
            for (int j = 0; j < slots; ++j) {
                if (j < static_cast<int>(obstacles.size())) {
                    const double dx = obstacles[j].x - env.robots[i].x;
                    const double dy = obstacles[j].y - env.robots[i].y;
                    s(at++) = std::hypot(dx, dy);
                } else {
                    s(at++) = pad;
                }
            }
        }
        for (int i = 0; i < n_r; ++i) {
            const double dx = env.goals[i].x - env.robots[i].x;
            const double dy = env.goals[i].y - env.robots[i].y;
            s(at++) = std::hypot(dx, dy);
        }
    }
    return s;
}

StepResult step_env(GridEnv& env, const JointAction& action, const RewardConfig& reward,
                    const EncodeOptions& opt) {
    if (static_cast<int>(action.moves.size()) != env.n_robots())
        throw std::invalid_argument("step_env: action size mismatch");
    StepResult res;
    res.rewards.assign(env.robots.size(), 0.0);
    for (int i = 0; i < env.n_robots(); ++i) {
        if (env.done[i]) continue;
        const GridCell d = move_delta(action.moves[i]);
        const int nx = env.robots[i].x + d.x;
        const int ny = env.robots[i].y + d.y;
        if (!env.in_grid(nx, ny)) continue;  // off-grid moves become stay
        const bool uav = env.kinds[i] == dyn::RobotKind::UAV;
        if (env.cell_blocked(nx, ny) && !(uav && env.cell_overflyable(nx, ny))) {
            env.robots[i] = {nx, ny};
            res.rewards[i] += reward.obstacle;
            res.collision = true;
            continue;
        }
        env.robots[i] = {nx, ny};
        if (env.robots[i] == env.goals[i]) {
            env.done[i] = 1;
            res.rewards[i] += reward.goal;
        }
    }
    if (reward.proximity_enabled && !res.collision) {
        for (int i = 0; i < env.n_robots(); ++i) {
            for (int j = i + 1; j < env.n_robots(); ++j) {
                const double dx = env.robots[i].x - env.robots[j].x;
                const double dy = env.robots[i].y - env.robots[j].y;
                if (std::hypot(dx, dy) <= reward.proximity_range) {
                    res.rewards[i] += reward.proximity;
                    res.rewards[j] += reward.proximity;
                }
            }
        }
    }
    env.steps += 1;
    res.done = env.done;
    res.terminal = res.collision || env.all_done() || env.steps >= env.step_cap;
    res.state = encode_state(env, opt);
    return res;
}

GridEnv random_episode_env(Rng& rng, int n_robots, int obstacle_cells,
                           const std::vector<dyn::RobotKind>& kinds, int step_cap,
                           bool wall_features) {
    if (static_cast<int>(kinds.size()) != n_robots)
        throw std::invalid_argument("random_episode_env: kinds size mismatch");
    GridEnv env = GridEnv::empty(10, 10);
    env.step_cap = step_cap;
    env.kinds = kinds;
    int placed = 0;
    while (placed < obstacle_cells) {
        const int x = static_cast<int>(rng.uniform_int(env.width));
        const int y = static_cast<int>(rng.uniform_int(env.height));
        if (env.blocked[y * env.width + x]) continue;
        env.blocked[y * env.width + x] = 1;
        // Roughly a third of obstacle cells are low enough to overfly.
        env.overflyable[y * env.width + x] = rng.uniform(0.0, 1.0) < 0.3 ? 1 : 0;
        ++placed;
        if (wall_features && placed < obstacle_cells) {
            // Extend into a short wall segment with 50% probability.
            const bool horizontal = rng.uniform(0.0, 1.0) < 0.5;
            const int len = 1 + static_cast<int>(rng.uniform_int(2));
            for (int k = 1; k <= len && placed < obstacle_cells; ++k) {
                const int wx = horizontal ? x + k : x;
                const int wy = horizontal ? y : y + k;
                if (!env.in_grid(wx, wy) || env.blocked[wy * env.width + wx]) break;
                env.blocked[wy * env.width + wx] = 1;
                env.overflyable[wy * env.width + wx] =
                    env.overflyable[y * env.width + x];
                ++placed;
            }
        }
    }
    auto free_cell = [&]() {
        for (;;) {
            const int x = static_cast<int>(rng.uniform_int(env.width));
            const int y = static_cast<int>(rng.uniform_int(env.height));
            if (!env.blocked[y * env.width + x]) return GridCell{x, y};
        }
    };
    for (int i = 0; i < n_robots; ++i) {
        const GridCell start = free_cell();
        GridCell goal = free_cell();
        while (goal == start) goal = free_cell();
        env.robots.push_back(start);
        env.goals.push_back(goal);
        env.done.push_back(0);
    }
    return env;
}

bool grid_reachable(const GridEnv& env, const GridCell& from, const GridCell& to,
                    bool is_uav) {
    if (!env.in_grid(from.x, from.y) || !env.in_grid(to.x, to.y)) return false;
    auto passable = [&](int x, int y) {
        if (!env.cell_blocked(x, y)) return true;
        return is_uav && env.cell_overflyable(x, y);
    };
    if (!passable(from.x, from.y) || !passable(to.x, to.y)) return false;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(env.width * env.height), 0);
    std::deque<GridCell> queue{from};
    seen[from.y * env.width + from.x] = 1;
    while (!queue.empty()) {
        const GridCell c = queue.front();
        queue.pop_front();
        if (c == to) return true;
        for (int m = 1; m <= 8; ++m) {
            const GridCell d = move_delta(m);
            const int nx = c.x + d.x, ny = c.y + d.y;
            if (!env.in_grid(nx, ny) || seen[ny * env.width + nx]) continue;
            if (!passable(nx, ny)) continue;
            seen[ny * env.width + nx] = 1;
            queue.push_back({nx, ny});
        }
    }
    return false;
}

}  // namespace snav::dqn
