#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "snav/chance.hpp"
#include "snav/obstacle.hpp"
#include "snav/rng.hpp"

using namespace snav;
using smpc::EdgeLine;

namespace {

// Standard normal CDF via erf (independent of the library's erfinv).
double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Oracle: invert the normal CDF by bisection. Returns z with Phi(z) = p.
double inverse_normal_cdf(double p) {
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("margin matches the inverse-normal-CDF oracle") {
    const Eigen::Vector2d a(1.0, 0.0);
    const Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
    for (double delta = 0.05; delta <= 0.5 + 1e-12; delta += 0.05) {
        const double c = smpc::chance_margin(a, sigma, delta);
        const double oracle = inverse_normal_cdf(1.0 - delta);  // sigma_a = 1
        CHECK(std::abs(c - oracle) <= 1e-4);
    }
    CHECK(smpc::chance_margin(a, sigma, 0.1) == doctest::Approx(1.2816).epsilon(1e-3));
}

TEST_CASE("margin boundary and scaling behavior") {
    const Eigen::Vector2d a(0.6, 0.8);
    Eigen::Matrix2d sigma;
    sigma << 0.9, 0.2, 0.2, 0.5;
    CHECK(smpc::chance_margin(a, sigma, 0.5) == 0.0);
    const double c1 = smpc::chance_margin(a, sigma, 0.1);
    const double c2 = smpc::chance_margin(a, 4.0 * sigma, 0.1);
    CHECK(c2 == doctest::Approx(2.0 * c1).epsilon(1e-12));
    CHECK_THROWS(smpc::chance_margin(a, sigma, 0.0));
    CHECK_THROWS(smpc::chance_margin(a, sigma, 0.6));
    CHECK_THROWS(smpc::chance_margin(a, sigma, -0.1));
}

TEST_CASE("margin monotonicity in delta and in a'Sigma a") {
    const Eigen::Vector2d a(1.0, 0.0);
    Rng rng(13);
    double prev = 1e100;
    for (double delta = 0.02; delta <= 0.5; delta += 0.02) {
        const double c = smpc::chance_margin(a, Eigen::Matrix2d::Identity(), delta);
        CHECK(c <= prev + 1e-12);
        CHECK(c >= 0.0);
        prev = c;
    }
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 0) = rng.uniform(0.0, 2.0);
        m(1, 1) = rng.uniform(0.0, 2.0);
        const double lo = smpc::chance_margin(a, m, 0.1);
        const double hi = smpc::chance_margin(a, m + Eigen::Matrix2d::Identity(), 0.1);
        CHECK(hi >= lo - 1e-12);
    }
}

TEST_CASE("circular constraint residual examples") {
    smpc::Circle c1{Eigen::Vector2d(3.0, 4.0), 0.0};
    CHECK(smpc::circular_constraint_residual(0, 0, c1, 1.0, 0.0) ==
          doctest::Approx(-4.0).epsilon(1e-12));
    smpc::Circle c2{Eigen::Vector2d(1.0, 1.0), 0.0};
    CHECK(smpc::circular_constraint_residual(1, 1, c2, 1.0, 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    smpc::Circle c3{Eigen::Vector2d(0.0, 0.0), 0.0};
    CHECK(smpc::circular_constraint_residual(2, 0, c3, 1.0, 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("signed edge distance examples") {
    const Eigen::Vector2d a(std::sqrt(0.5), std::sqrt(0.5));
    EdgeLine flat{0.0, 0.0};  // the line y = 0
    CHECK(smpc::signed_edge_distance(0.0, 2.0, flat, a) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(smpc::signed_edge_distance(0.0, -1.0, flat, a) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(smpc::signed_edge_distance(0.7, 0.0, flat, a) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("signed edge distance agrees between slope and parametric forms") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const double m = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
        Eigen::Vector2d normal(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        if (normal.norm() < 0.3) continue;
        normal.normalize();
        // Skip nearly edge-parallel normals (degenerate geometry).
        const Eigen::Vector2d dir = Eigen::Vector2d(1.0, m).normalized();
        if (std::abs(normal.dot(Eigen::Vector2d(-dir.y(), dir.x()))) < 0.1) continue;
        const double slope_form = smpc::signed_edge_distance(x, y, EdgeLine{m, b}, normal);
        const double param_form = smpc::signed_edge_distance(
            x, y, Eigen::Vector2d(0.0, b), dir, normal);
        CHECK(slope_form == doctest::Approx(param_form).epsilon(1e-9));
        // Magnitude is the point-line distance |-(m x) + y - b| / sqrt(m^2+1).
        CHECK(std::abs(slope_form) ==
              doctest::Approx(std::abs(-m * x + y - b) / std::sqrt(m * m + 1.0))
                  .epsilon(1e-9));
    }
}

TEST_CASE("parametric form handles vertical edges") {
    // The line x = 2 with the normal pointing toward -x (robot side).
    const Eigen::Vector2d pt(2.0, 0.0), dir(0.0, 1.0), a(-1.0, 0.0);
    CHECK(smpc::signed_edge_distance(0.0, 5.0, pt, dir, a) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(smpc::signed_edge_distance(3.0, -1.0, pt, dir, a) ==
          doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("degenerate normal raises an error") {
    EdgeLine flat{0.0, 0.0};
    CHECK_THROWS(smpc::signed_edge_distance(0.0, 1.0, flat, Eigen::Vector2d(1.0, 0.0)));
}

TEST_CASE("inverse_erf round-trips erf") {
    for (double y = -0.95; y <= 0.95; y += 0.05) {
        CHECK(std::erf(smpc::inverse_erf(y)) == doctest::Approx(y).epsilon(1e-10));
    }
    CHECK(smpc::inverse_erf(0.0) == 0.0);
}
