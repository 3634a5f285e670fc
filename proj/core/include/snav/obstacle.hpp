#ifndef SNAV_OBSTACLE_HPP
#define SNAV_OBSTACLE_HPP

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

namespace snav::smpc {

struct Circle {
    Eigen::Vector2d center;
    double radius = 0.0;
};

/// Convex polygon given by CCW vertices. Edges are the segments
/// (v[i], v[i+1]) with outward normals pointing away from the interior.
struct ConvexPolygon {
    std::vector<Eigen::Vector2d> vertices;

    int edge_count() const { return static_cast<int>(vertices.size()); }
    Eigen::Vector2d edge_start(int i) const { return vertices[i]; }
    Eigen::Vector2d edge_end(int i) const {
        return vertices[(i + 1) % vertices.size()];
    }
    /// Unit outward normal of edge i (CCW winding: rotate direction by -90deg).
    Eigen::Vector2d outward_normal(int i) const;
    /// Slope/intercept form (m, b) of edge i's supporting line y = m x + b.
    /// Throws for vertical edges.
    std::pair<double, double> edge_slope_intercept(int i) const;

    bool contains(const Eigen::Vector2d& p) const;
};

/// Circle or convex polygon, with a height (infinite when not overflyable)
/// and a per-obstacle chance-constraint risk level.
struct Obstacle {
    std::variant<Circle, ConvexPolygon> shape;
    double height = std::numeric_limits<double>::infinity();
    double risk_delta = 0.1;  // must lie in (0, 0.5]

    bool is_circle() const { return std::holds_alternative<Circle>(shape); }
    const Circle& circle() const { return std::get<Circle>(shape); }
    const ConvexPolygon& polygon() const { return std::get<ConvexPolygon>(shape); }

    static Obstacle make_circle(double cx, double cy, double radius,
                                double height = std::numeric_limits<double>::infinity(),
                                double delta = 0.1);
    static Obstacle make_polygon(std::vector<Eigen::Vector2d> vertices,
                                 double height = std::numeric_limits<double>::infinity(),
                                 double delta = 0.1);
    static Obstacle make_box(double cx, double cy, double half_w, double half_h,
                             double height = std::numeric_limits<double>::infinity(),
                             double delta = 0.1);

    /// Euclidean distance from a point to the obstacle boundary/interior
    /// (negative-free: 0 inside).
    double distance(const Eigen::Vector2d& p) const;
    bool contains(const Eigen::Vector2d& p) const;

    void validate() const;
};

}  // namespace snav::smpc

#endif
