#ifndef SNAV_PLANNERS_HPP
#define SNAV_PLANNERS_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "snav/grid_env.hpp"
#include "snav/rng.hpp"
#include "snav/world.hpp"

namespace snav::plan {

struct PlannerResult {
    bool success = false;
    std::vector<Eigen::Vector2d> path;  // world coordinates, start to goal
    double length = 0.0;                // sum of segment lengths
    int expansions = 0;                 // nodes expanded / samples drawn
};

/// 8-connected grid A* with the octile-distance heuristic. Diagonal moves
/// cost sqrt(2); diagonal corner-cutting past a blocked cell is forbidden.
PlannerResult astar(const dqn::GridEnv& env, const dqn::GridCell& start,
                    const dqn::GridCell& goal, bool is_uav = false);

/// Same search with a zero heuristic (Dijkstra); used as an exactness
/// reference for A*.
PlannerResult dijkstra(const dqn::GridEnv& env, const dqn::GridCell& start,
                       const dqn::GridCell& goal, bool is_uav = false);

struct RrtParams {
    int max_samples = 5000;
    double step = 0.5;           // extension length (m)
    double goal_radius = 0.5;
    double goal_bias = 0.1;      // probability of sampling the goal
    double clearance = 0.3;      // required distance from obstacles
    std::uint64_t seed = 0;
    // RRT* only:
    double rewire_radius = 1.5;
};

PlannerResult rrt(const sim::WorldMap& map, const Eigen::Vector2d& start,
                  const Eigen::Vector2d& goal, const RrtParams& params);

PlannerResult rrt_star(const sim::WorldMap& map, const Eigen::Vector2d& start,
                       const Eigen::Vector2d& goal, const RrtParams& params);

/// True when the straight segment keeps `clearance` from every obstacle
/// and stays in bounds (sampled at 5 cm intervals).
bool segment_clear(const sim::WorldMap& map, const Eigen::Vector2d& a,
                   const Eigen::Vector2d& b, double clearance);

double path_length(const std::vector<Eigen::Vector2d>& path);

}  // namespace snav::plan

#endif
