#include "snav/obstacle.hpp"

#include <cmath>

namespace snav::smpc {

Eigen::Vector2d ConvexPolygon::outward_normal(int i) const {
    const Eigen::Vector2d d = edge_end(i) - edge_start(i);
    Eigen::Vector2d n(d.y(), -d.x());
    const double len = n.norm();
    if (len < 1e-12) throw std::invalid_argument("ConvexPolygon: degenerate edge");
    return n / len;
}

std::pair<double, double> ConvexPolygon::edge_slope_intercept(int i) const {
    const Eigen::Vector2d p0 = edge_start(i);
    const Eigen::Vector2d p1 = edge_end(i);
    const double dx = p1.x() - p0.x();
    if (std::abs(dx) < 1e-12)
        throw std::invalid_argument("ConvexPolygon: vertical edge has no slope form");
    const double m = (p1.y() - p0.y()) / dx;
    return {m, p0.y() - m * p0.x()};
}

bool ConvexPolygon::contains(const Eigen::Vector2d& p) const {
    for (int i = 0; i < edge_count(); ++i) {
        if (outward_normal(i).dot(p - edge_start(i)) > 0.0) return false;
    }
    return true;
}

Obstacle Obstacle::make_circle(double cx, double cy, double radius, double height,
                               double delta) {
    Obstacle o;
    o.shape = Circle{{cx, cy}, radius};
    o.height = height;
    o.risk_delta = delta;
    o.validate();
    return o;
}

Obstacle Obstacle::make_polygon(std::vector<Eigen::Vector2d> vertices, double height,
                                double delta) {
    Obstacle o;
    o.shape = ConvexPolygon{std::move(vertices)};
    o.height = height;
    o.risk_delta = delta;
    o.validate();
    return o;
}

Obstacle Obstacle::make_box(double cx, double cy, double half_w, double half_h,
                            double height, double delta) {
    // CCW from bottom-left.
    return make_polygon({{cx - half_w, cy - half_h},
                         {cx + half_w, cy - half_h},
                         {cx + half_w, cy + half_h},
                         {cx - half_w, cy + half_h}},
                        height, delta);
}

static double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                               const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

double Obstacle::distance(const Eigen::Vector2d& p) const {
    if (is_circle()) {
        return std::max(0.0, (p - circle().center).norm() - circle().radius);
    }
    const ConvexPolygon& poly = polygon();
    if (poly.contains(p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < poly.edge_count(); ++i)
        best = std::min(best, segment_distance(p, poly.edge_start(i), poly.edge_end(i)));
    return best;
}

bool Obstacle::contains(const Eigen::Vector2d& p) const {
    if (is_circle()) return (p - circle().center).norm() <= circle().radius;
    return polygon().contains(p);
}

void Obstacle::validate() const {
    if (risk_delta <= 0.0 || risk_delta > 0.5)
        throw std::invalid_argument("Obstacle: risk delta must lie in (0, 0.5]");
    if (is_circle()) {
        if (circle().radius <= 0.0)
            throw std::invalid_argument("Obstacle: circle radius must be positive");
        return;
    }
    const ConvexPolygon& poly = polygon();
    if (poly.edge_count() < 3)
        throw std::invalid_argument("Obstacle: polygon needs at least 3 vertices");
    // Convexity + CCW: every vertex must lie on the inner side of every edge.
    for (int i = 0; i < poly.edge_count(); ++i) {
        const Eigen::Vector2d n = poly.outward_normal(i);
        for (const auto& v : poly.vertices) {
            if (n.dot(v - poly.edge_start(i)) > 1e-9)
                throw std::invalid_argument("Obstacle: polygon not convex CCW");
        }
    }
}

}  // namespace snav::smpc
