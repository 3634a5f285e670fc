#include "snav/chance.hpp"

#include <cmath>
#include <stdexcept>

namespace snav::smpc {

double inverse_erf(double y) {
    if (!(y > -1.0 && y < 1.0))
        throw std::invalid_argument("inverse_erf: argument must lie in (-1, 1)");
    if (y == 0.0) return 0.0;
    // Giles-style initial approximation, then Newton on erf.
    double w = -std::log((1.0 - y) * (1.0 + y));
    double x;
    if (w < 5.0) {
        w -= 2.5;
        x = 2.81022636e-08;
        x = 3.43273939e-07 + x * w;
        x = -3.5233877e-06 + x * w;
        x = -4.39150654e-06 + x * w;
        x = 0.00021858087 + x * w;
        x = -0.00125372503 + x * w;
        x = -0.00417768164 + x * w;
        x = 0.246640727 + x * w;
        x = 1.50140941 + x * w;
        x *= y;
    } else {
        w = std::sqrt(w) - 3.0;
        x = -0.000200214257;
        x = 0.000100950558 + x * w;
        x = 0.00134934322 + x * w;
        x = -0.00367342844 + x * w;
        x = 0.00573950773 + x * w;
        x = -0.0076224613 + x * w;
        x = 0.00943887047 + x * w;
        x = 1.00167406 + x * w;
        x = 2.83297682 + x * w;
        x *= y;
    }
    const double half_sqrt_pi = 0.5 * std::sqrt(M_PI);
    for (int it = 0; it < 3; ++it) {
        const double err = std::erf(x) - y;
        x -= err * half_sqrt_pi * std::exp(x * x);
    }
    return x;
}

double chance_margin(const Eigen::Vector2d& a, const Eigen::Matrix2d& sigma,
                     double delta) {
    if (!(delta > 0.0 && delta <= 0.5))
        throw std::invalid_argument("chance_margin: delta must lie in (0, 0.5]");
    const double var = a.dot(sigma * a);
    if (var < -1e-12)
        throw std::invalid_argument("chance_margin: sigma must be PSD");
    if (delta == 0.5) return 0.0;
    return std::sqrt(2.0 * std::max(0.0, var)) * inverse_erf(1.0 - 2.0 * delta);
}

double circular_constraint_residual(double x, double y, const Circle& obstacle,
                                    double r, double c) {
    const double dx = x - obstacle.center.x();
    const double dy = y - obstacle.center.y();
    return -std::sqrt(dx * dx + dy * dy) + (r + c);
}

double signed_edge_distance(double x, double y, const Eigen::Vector2d& line_point,
                            const Eigen::Vector2d& line_dir, const Eigen::Vector2d& a) {
    Eigen::Vector2d n(line_dir.y(), -line_dir.x());
    const double nl = n.norm();
    if (nl < 1e-15) throw std::invalid_argument("signed_edge_distance: degenerate line");
    n /= nl;
    const double na = n.dot(a);
    if (std::abs(na) < 1e-12)
        throw std::domain_error("signed_edge_distance: normal parallel to edge");
    const Eigen::Vector2d p(x, y);
    const double dist = std::abs(n.dot(p - line_point));
    // Foot point p + t a on the line; t > 0 means the line lies in the +a
    // direction from the robot, i.e. the robot is inside the boundary.
    const double t = n.dot(line_point - p) / na;
    if (dist < 1e-15) return 0.0;
    return t > 0.0 ? -dist : dist;
}

double signed_edge_distance(double x, double y, const EdgeLine& edge,
                            const Eigen::Vector2d& a) {
    return signed_edge_distance(x, y, Eigen::Vector2d(0.0, edge.b),
                                Eigen::Vector2d(1.0, edge.m), a);
}

}  // namespace snav::smpc
