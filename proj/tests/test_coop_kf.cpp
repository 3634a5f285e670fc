#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "snav/coop_kf.hpp"
#include "snav/psd.hpp"
#include "snav/rng.hpp"

using namespace snav;
using ckf::PairBelief;

namespace {

Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x << v;
    return x;
}

Eigen::MatrixXd mat1(double v) {
    Eigen::MatrixXd m(1, 1);
    m << v;
    return m;
}

// Centralized oracle: a Kalman filter on the stacked state [x_i; x_j] with
// measurement H = [I, -I], updated jointly. Tracks the full joint
// covariance so repeated fusions are handled exactly.
struct CentralKf {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;

    void update(double z, double r) {
        Eigen::RowVector2d H(1.0, -1.0);
        const double s = (H * cov * H.transpose())(0, 0) + r;
        const Eigen::Vector2d K = cov * H.transpose() / s;
        mean += K * (z - H * mean);
        cov = (Eigen::Matrix2d::Identity() - K * H) * cov;
    }
};

}  // namespace

TEST_CASE("relative measurement examples") {
    CHECK((ckf::relative_measurement(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0),
                                     Eigen::Vector2d(0, 0)) -
           Eigen::Vector2d(1, 1))
              .norm() == 0.0);
    CHECK(ckf::relative_measurement(Eigen::Vector2d(2, 2), Eigen::Vector2d(2, 2),
                                    Eigen::Vector2d(0, 0))
              .norm() == 0.0);
    Eigen::VectorXd z = ckf::relative_measurement(Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 1),
                                                  Eigen::Vector2d(0.1, -0.1));
    CHECK(z(0) == doctest::Approx(2.1));
    CHECK(z(1) == doctest::Approx(-1.1));
}

TEST_CASE("first meeting identity case") {
    PairBelief b;
    b.x_i = Eigen::Vector2d(1.0, 2.0);
    b.x_j = Eigen::Vector2d(0.0, 0.5);
    b.sigma_i = Eigen::Matrix2d::Identity();
    b.sigma_j = Eigen::Matrix2d::Identity();
    b.r_ij = Eigen::Matrix2d::Zero();
    const Eigen::VectorXd z = b.x_i - b.x_j;  // consistent, zero innovation
    auto out = ckf::first_meeting_update(b, z);
    CHECK((out.x_i - b.x_i).norm() < 1e-12);
    CHECK((out.x_j - b.x_j).norm() < 1e-12);
    REQUIRE(out.sigma_ij.has_value());
    CHECK((*out.sigma_ij - 0.5 * Eigen::Matrix2d::Identity()).norm() < 1e-12);
}

TEST_CASE("first meeting scalar gain") {
    PairBelief b;
    b.x_i = vec1(0.0);
    b.x_j = vec1(0.0);
    b.sigma_i = mat1(1.0);
    b.sigma_j = mat1(3.0);
    b.r_ij = mat1(0.0);
    auto out = ckf::first_meeting_update(b, vec1(2.0));
    // K_i = 1 / (1 + 3) = 0.25; X_i+ = 0 + 0.25 * (2 - 0) = 0.5.
    CHECK(out.x_i(0) == doctest::Approx(0.5).epsilon(1e-12));
    // Mirrored: K_j uses -innovation direction; X_j+ = -3/4 * 2 ... = -1.5.
    CHECK(out.x_j(0) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("uninformative measurement changes nothing") {
    PairBelief b;
    b.x_i = Eigen::Vector2d(1.0, -1.0);
    b.x_j = Eigen::Vector2d(0.0, 0.0);
    b.sigma_i = Eigen::Matrix2d::Identity();
    b.sigma_j = 2.0 * Eigen::Matrix2d::Identity();
    b.r_ij = 1e6 * Eigen::Matrix2d::Identity();
    const Eigen::VectorXd z = Eigen::Vector2d(5.0, 5.0);
    auto out = ckf::first_meeting_update(b, z);
    const double innovation = (z - (b.x_i - b.x_j)).norm();
    CHECK((out.x_i - b.x_i).norm() <= 1e-4 * innovation);
}

TEST_CASE("fully correlated subsequent update is a no-op") {
    PairBelief b;
    b.x_i = vec1(1.0);
    b.x_j = vec1(2.0);
    b.sigma_i = mat1(0.7);
    b.sigma_j = mat1(0.7);
    b.sigma_ij = mat1(0.7);
    b.r_ij = mat1(0.5);
    auto out = ckf::subsequent_update(b, vec1(3.0));
    CHECK(out.x_i(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(out.sigma_i(0, 0) == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("zero cross-covariance reduces to the first-meeting gain") {
    PairBelief b;
    b.x_i = vec1(0.0);
    b.x_j = vec1(0.0);
    b.sigma_i = mat1(1.0);
    b.sigma_j = mat1(3.0);
    b.sigma_ij = mat1(0.0);
    b.r_ij = mat1(0.0);
    auto with_cross = ckf::subsequent_update(b, vec1(2.0));
    PairBelief b2 = b;
    b2.sigma_ij.reset();
    auto first = ckf::first_meeting_update(b2, vec1(2.0));
    CHECK(with_cross.x_i(0) == doctest::Approx(first.x_i(0)).epsilon(1e-10));
    CHECK(with_cross.sigma_i(0, 0) == doctest::Approx(first.sigma_i(0, 0)).epsilon(1e-10));
}

TEST_CASE("scalar chain matches a centralized two-robot KF") {
    Rng rng(101);
    PairBelief b;
    b.x_i = vec1(0.3);
    b.x_j = vec1(-0.4);
    b.sigma_i = mat1(1.2);
    b.sigma_j = mat1(0.8);
    const double r = 0.05;
    b.r_ij = mat1(r);

    CentralKf central;
    central.mean = Eigen::Vector2d(b.x_i(0), b.x_j(0));
    central.cov = Eigen::Vector2d(1.2, 0.8).asDiagonal();

    for (int step = 0; step < 12; ++step) {
        const double z = rng.uniform(-1.0, 1.0);
        b = ckf::fuse(b, vec1(z));
        central.update(z, r);
        CHECK(b.x_i(0) == doctest::Approx(central.mean(0)).epsilon(1e-8));
        CHECK(b.x_j(0) == doctest::Approx(central.mean(1)).epsilon(1e-8));
        CHECK(b.sigma_i(0, 0) == doctest::Approx(central.cov(0, 0)).epsilon(1e-8));
        CHECK(b.sigma_j(0, 0) == doctest::Approx(central.cov(1, 1)).epsilon(1e-8));
        REQUIRE(b.sigma_ij.has_value());
        CHECK((*b.sigma_ij)(0, 0) == doctest::Approx(central.cov(0, 1)).epsilon(1e-8));
    }
}

TEST_CASE("naive repeated first-meeting fusion underestimates variance") {
    // Without cross-covariance tracking the same information is counted
    // twice and the variance collapses below the centralized truth.
    Rng rng(7);
    PairBelief tracked, naive;
    tracked.x_i = naive.x_i = vec1(0.0);
    tracked.x_j = naive.x_j = vec1(0.0);
    tracked.sigma_i = naive.sigma_i = mat1(1.0);
    tracked.sigma_j = naive.sigma_j = mat1(1.0);
    tracked.r_ij = naive.r_ij = mat1(0.01);
    for (int step = 0; step < 6; ++step) {
        const double z = rng.gaussian(0.0, 0.1);
        tracked = ckf::fuse(tracked, vec1(z));
        naive = ckf::first_meeting_update(naive, vec1(z));
        naive.sigma_ij.reset();  // forget the correlation on purpose
    }
    CHECK(naive.sigma_i(0, 0) < tracked.sigma_i(0, 0) - 1e-6);
}

TEST_CASE("fused scalar variance bounded by the inputs at r = 0") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        PairBelief b;
        b.x_i = vec1(rng.uniform(-1, 1));
        b.x_j = vec1(rng.uniform(-1, 1));
        const double si = rng.uniform(0.1, 3.0), sj = rng.uniform(0.1, 3.0);
        b.sigma_i = mat1(si);
        b.sigma_j = mat1(sj);
        b.r_ij = mat1(0.0);
        auto out = ckf::first_meeting_update(b, vec1(rng.uniform(-2, 2)));
        CHECK(out.sigma_i(0, 0) > 0.0);
        CHECK(out.sigma_i(0, 0) <= std::min(si, sj) + 1e-12);
        CHECK(out.sigma_j(0, 0) <= std::min(si, sj) + 1e-12);
    }
}

TEST_CASE("outputs stay symmetric PSD") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        PairBelief b;
        b.x_i = Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1));
        b.x_j = Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1));
        Eigen::Matrix2d mi, mj;
        mi << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
        mj << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
        b.sigma_i = mi * mi.transpose() + 0.05 * Eigen::Matrix2d::Identity();
        b.sigma_j = mj * mj.transpose() + 0.05 * Eigen::Matrix2d::Identity();
        b.r_ij = 0.01 * Eigen::Matrix2d::Identity();
        auto first = ckf::fuse(b, Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)));
        auto second = ckf::fuse(first, Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)));
        for (const auto* m : {&second.sigma_i, &second.sigma_j}) {
            CHECK((*m - m->transpose()).norm() < 1e-10);
            CHECK(min_eigenvalue(*m) >= -1e-10);
        }
    }
}

TEST_CASE("horizon fusion matches the per-index scalar oracle") {
    const int len = 3;
    smpc::BeliefSequence bi, bj;
    std::vector<Eigen::VectorXd> z;
    Rng rng(23);
    for (int k = 0; k < len; ++k) {
        bi.means.push_back(Eigen::Vector2d(rng.uniform(-1, 1), 0.0));
        bj.means.push_back(Eigen::Vector2d(rng.uniform(-1, 1), 0.0));
        bi.covariances.push_back(Eigen::Matrix2d::Identity() * (0.5 + 0.1 * k));
        bj.covariances.push_back(Eigen::Matrix2d::Identity() * (0.8 - 0.1 * k));
        z.push_back(Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    }
    Eigen::Matrix2d r = 0.02 * Eigen::Matrix2d::Identity();
    std::vector<Eigen::MatrixXd> cross;
    auto [fi, fj] = ckf::fuse_horizon(bi, bj, r, z, &cross);
    REQUIRE(fi.length() == len);
    REQUIRE(static_cast<int>(cross.size()) == len);
    for (int k = 0; k < len; ++k) {
        PairBelief b;
        b.x_i = bi.means[k].head<2>();
        b.x_j = bj.means[k].head<2>();
        b.sigma_i = bi.covariances[k];
        b.sigma_j = bj.covariances[k];
        b.r_ij = r;
        auto out = ckf::first_meeting_update(b, z[k]);
        CHECK((fi.covariances[k] - out.sigma_i).norm() < 1e-10);
        CHECK((fj.covariances[k] - out.sigma_j).norm() < 1e-10);
        CHECK((fi.means[k].head<2>() - out.x_i).norm() < 1e-10);
    }
}

TEST_CASE("singular innovation covariance raises") {
    PairBelief b;
    b.x_i = vec1(0.0);
    b.x_j = vec1(0.0);
    b.sigma_i = mat1(0.0);
    b.sigma_j = mat1(0.0);
    b.r_ij = mat1(0.0);
    CHECK_THROWS(ckf::first_meeting_update(b, vec1(1.0)));
}
