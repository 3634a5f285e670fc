#ifndef SNAV_CHANCE_HPP
#define SNAV_CHANCE_HPP

#include <Eigen/Dense>

#include "snav/obstacle.hpp"

namespace snav::smpc {

/// Inverse of erf on (-1, 1).
double inverse_erf(double y);

/// Deterministic tightening of a linear chance constraint:
/// c = sqrt(2 a' Sigma a) * erfinv(1 - 2 delta), delta in (0, 0.5].
double chance_margin(const Eigen::Vector2d& a, const Eigen::Matrix2d& sigma,
                     double delta);

/// Residual of the circular keep-out constraint
/// -sqrt((x-xo)^2 + (y-yo)^2) + (r + c) <= 0; feasible iff <= 0.
/// r folds the robot radius and obstacle radius together.
double circular_constraint_residual(double x, double y, const Circle& obstacle,
                                    double r, double c);

/// A line constraint in slope/intercept form y = m x + b.
struct EdgeLine {
    double m = 0.0;
    double b = 0.0;
};

/// Signed distance from robot (x, y) to the line, sign determined by the
/// intersection of the ray from the robot along normal `a` with the line:
/// when that foot point lies in the +a direction the robot is inside the
/// obstacle boundary and the distance is negative. `a` is the edge normal
/// directed toward the robot's nominal state.
double signed_edge_distance(double x, double y, const EdgeLine& edge,
                            const Eigen::Vector2d& a);

/// Same semantics for a line given in point/direction form (handles
/// vertical edges, where the slope form is singular).
double signed_edge_distance(double x, double y, const Eigen::Vector2d& line_point,
                            const Eigen::Vector2d& line_dir, const Eigen::Vector2d& a);

}  // namespace snav::smpc

#endif
