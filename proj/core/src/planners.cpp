#include "snav/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace snav::plan {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double octile(const dqn::GridCell& a, const dqn::GridCell& b) {
    const int dx = std::abs(a.x - b.x);
    const int dy = std::abs(a.y - b.y);
    return (kSqrt2 - 1.0) * std::min(dx, dy) + std::max(dx, dy);
}

PlannerResult grid_search(const dqn::GridEnv& env, const dqn::GridCell& start,
                          const dqn::GridCell& goal, bool is_uav, bool use_heuristic) {
    PlannerResult res;
    auto passable = [&](int x, int y) {
        if (!env.in_grid(x, y)) return false;
        if (!env.cell_blocked(x, y)) return true;
        return is_uav && env.cell_overflyable(x, y);
    };
    if (!passable(start.x, start.y) || !passable(goal.x, goal.y)) return res;

    const int n = env.width * env.height;
    auto idx = [&](const dqn::GridCell& c) { return c.y * env.width + c.x; };
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);

    using Entry = std::pair<double, int>;  // (f, cell index)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[idx(start)] = 0.0;
    open.push({use_heuristic ? octile(start, goal) : 0.0, idx(start)});

    while (!open.empty()) {
        const auto [f, ci] = open.top();
        open.pop();
        if (closed[ci]) continue;
        closed[ci] = 1;
        ++res.expansions;
        const dqn::GridCell c{ci % env.width, ci / env.width};
        if (c == goal) break;
        for (int m = 1; m <= 8; ++m) {
            const dqn::GridCell d = dqn::move_delta(m);
            const int nx = c.x + d.x, ny = c.y + d.y;
            if (!passable(nx, ny)) continue;
            // No corner cutting: a diagonal move needs both adjacent
            // cardinal cells free.
            if (d.x != 0 && d.y != 0 &&
                (!passable(c.x + d.x, c.y) || !passable(c.x, c.y + d.y)))
                continue;
            const double step = (d.x != 0 && d.y != 0) ? kSqrt2 : 1.0;
            const int ni = ny * env.width + nx;
            if (dist[ci] + step < dist[ni] - 1e-12) {
                dist[ni] = dist[ci] + step;
                parent[ni] = ci;
                const double h = use_heuristic ? octile({nx, ny}, goal) : 0.0;
                open.push({dist[ni] + h, ni});
            }
        }
    }

    const int gi = idx(goal);
    if (!std::isfinite(dist[gi])) return res;
    res.success = true;
    res.length = dist[gi];
    std::vector<dqn::GridCell> cells;
    for (int at = gi; at != -1; at = parent[at])
        cells.push_back({at % env.width, at / env.width});
    std::reverse(cells.begin(), cells.end());
    for (const auto& c : cells)
        res.path.emplace_back(c.x + 0.5, c.y + 0.5);
    return res;
}

}  // namespace

PlannerResult astar(const dqn::GridEnv& env, const dqn::GridCell& start,
                    const dqn::GridCell& goal, bool is_uav) {
    return grid_search(env, start, goal, is_uav, true);
}

PlannerResult dijkstra(const dqn::GridEnv& env, const dqn::GridCell& start,
                       const dqn::GridCell& goal, bool is_uav) {
    return grid_search(env, start, goal, is_uav, false);
}

double path_length(const std::vector<Eigen::Vector2d>& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) len += (path[i] - path[i - 1]).norm();
    return len;
}

bool segment_clear(const sim::WorldMap& map, const Eigen::Vector2d& a,
                   const Eigen::Vector2d& b, double clearance) {
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.05)));
    for (int i = 0; i <= steps; ++i) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(i) / steps);
        if (!map.in_bounds(p)) return false;
        for (const auto& ob : map.obstacles)
            if (ob.distance(p) < clearance) return false;
    }
    return true;
}

namespace {

struct Tree {
    std::vector<Eigen::Vector2d> nodes;
    std::vector<int> parent;
    std::vector<double> cost;

    int nearest(const Eigen::Vector2d& p) const {
        int best = 0;
        double best_d = (nodes[0] - p).squaredNorm();
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double d = (nodes[i] - p).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    }

    std::vector<Eigen::Vector2d> trace(int leaf) const {
        std::vector<Eigen::Vector2d> path;
        for (int at = leaf; at != -1; at = parent[at]) path.push_back(nodes[at]);
        std::reverse(path.begin(), path.end());
        return path;
    }
};

PlannerResult rrt_impl(const sim::WorldMap& map, const Eigen::Vector2d& start,
                       const Eigen::Vector2d& goal, const RrtParams& params,
                       bool optimize) {
    PlannerResult res;
    Rng rng(params.seed);
    Tree tree;
    tree.nodes.push_back(start);
    tree.parent.push_back(-1);
    tree.cost.push_back(0.0);
    int goal_node = -1;

    for (int it = 0; it < params.max_samples; ++it) {
        ++res.expansions;
        Eigen::Vector2d sample;
        if (rng.uniform() < params.goal_bias) {
            sample = goal;
        } else {
            sample = {rng.uniform(map.xmin, map.xmax), rng.uniform(map.ymin, map.ymax)};
        }
        const int near = tree.nearest(sample);
        Eigen::Vector2d dir = sample - tree.nodes[near];
        const double dist = dir.norm();
        if (dist < 1e-9) continue;
        const Eigen::Vector2d fresh =
            tree.nodes[near] + dir * (std::min(params.step, dist) / dist);
        if (!segment_clear(map, tree.nodes[near], fresh, params.clearance)) continue;

        int parent = near;
        double cost = tree.cost[near] + (fresh - tree.nodes[near]).norm();
        if (optimize) {
            // Choose the cheapest collision-free parent in the rewire ball.
            for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
                const double d = (tree.nodes[i] - fresh).norm();
                if (d > params.rewire_radius) continue;
                const double c = tree.cost[i] + d;
                if (c < cost && segment_clear(map, tree.nodes[i], fresh, params.clearance)) {
                    cost = c;
                    parent = static_cast<int>(i);
                }
            }
        }
        const int fresh_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(fresh);
        tree.parent.push_back(parent);
        tree.cost.push_back(cost);

        if (optimize) {
            // Rewire neighbors through the new node when that is cheaper.
            for (std::size_t i = 0; i < tree.nodes.size() - 1; ++i) {
                const double d = (tree.nodes[i] - fresh).norm();
                if (d > params.rewire_radius) continue;
                const double c = cost + d;
                if (c < tree.cost[i] &&
                    segment_clear(map, fresh, tree.nodes[i], params.clearance)) {
                    tree.parent[i] = fresh_id;
                    tree.cost[i] = c;
                }
            }
        }

        if ((fresh - goal).norm() <= params.goal_radius &&
            segment_clear(map, fresh, goal, params.clearance)) {
            const double goal_cost = cost + (fresh - goal).norm();
            if (goal_node == -1) {
                goal_node = static_cast<int>(tree.nodes.size());
                tree.nodes.push_back(goal);
                tree.parent.push_back(fresh_id);
                tree.cost.push_back(goal_cost);
                if (!optimize) break;  // plain RRT returns the first path
            } else if (goal_cost < tree.cost[goal_node]) {
                tree.parent[goal_node] = fresh_id;
                tree.cost[goal_node] = goal_cost;
            }
        }
    }

    if (goal_node == -1) return res;
    res.success = true;
    res.path = tree.trace(goal_node);
    res.length = path_length(res.path);
    return res;
}

}  // namespace

PlannerResult rrt(const sim::WorldMap& map, const Eigen::Vector2d& start,
                  const Eigen::Vector2d& goal, const RrtParams& params) {
    return rrt_impl(map, start, goal, params, false);
}

PlannerResult rrt_star(const sim::WorldMap& map, const Eigen::Vector2d& start,
                       const Eigen::Vector2d& goal, const RrtParams& params) {
    return rrt_impl(map, start, goal, params, true);
}

}  // namespace snav::plan
