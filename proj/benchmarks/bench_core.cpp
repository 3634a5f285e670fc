// Microbenchmarks for the hot paths of the navigation stack: the terminal
// weight solve, the chance margin, one full mixed-integer avoidance solve,
// a particle-filter localization step, and one covariance-predictor rollout.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "snav/chance.hpp"
#include "snav/dynamics.hpp"
#include "snav/obstacle.hpp"
#include "snav/riccati.hpp"
#include "snav/rng.hpp"
#include "snav/rnn.hpp"
#include "snav/localizers.hpp"
#include "snav/sensors.hpp"
#include "snav/smpc.hpp"
#include "snav/world.hpp"

using namespace snav;

static void BM_TerminalWeight(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n * n; ++i) A(i / n, i % n) = rng.uniform(-1.0, 1.0);
    A *= 0.9 / A.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n, n);
    for (auto _ : state) benchmark::DoNotOptimize(smpc::terminal_weight(A, B, Q, R));
}
BENCHMARK(BM_TerminalWeight)->Arg(3)->Arg(10);

static void BM_ChanceMargin(benchmark::State& state) {
    const Eigen::Vector2d a(0.6, 0.8);
    Eigen::Matrix2d sigma;
    sigma << 0.02, 0.005, 0.005, 0.03;
    for (auto _ : state)
        benchmark::DoNotOptimize(smpc::chance_margin(a, sigma, 0.1));
}
BENCHMARK(BM_ChanceMargin);

static void BM_SmpcSolve(benchmark::State& state) {
    smpc::SmpcProblem p;
    p.model = dyn::DynamicsModel::ugv(0.1);
    p.params.horizon = 8;
    p.params.Q = Eigen::Vector3d(10.0, 10.0, 0.1).asDiagonal();
    p.params.R = Eigen::Vector2d(1.0, 0.2).asDiagonal();
    p.params.P = p.params.Q;
    p.params.robot_radius = 0.3;
    p.belief = smpc::BeliefSequence::constant(1e-3 * Eigen::Matrix2d::Identity(), 9);
    p.obstacles = {smpc::Obstacle::make_box(1.0, 0.1, 0.3, 0.3)};
    p.reference = {Eigen::Vector3d(2.0, 0.0, 0.0)};
    dyn::RobotState x0;
    x0.kind = dyn::RobotKind::UGV;
    x0.values = Eigen::Vector3d::Zero();
    for (auto _ : state) benchmark::DoNotOptimize(smpc::solve(p, x0));
}
BENCHMARK(BM_SmpcSolve);

static void BM_ParticleFilterStep(benchmark::State& state) {
    Rng rng(2);
    sim::WorldMap map;
    map.obstacles.push_back(smpc::Obstacle::make_box(5.0, 5.0, 1.0, 1.0));
    const Eigen::Vector3d pose(2.0, 2.0, 0.3);
    sim::PfConfig cfg;
    auto pf = sim::pf_init_gaussian(pose, 0.05, 0.02, cfg, rng);
    const auto scan = sim::lidar_scan(pose, map, 5.0, 0.03, rng);
    const Eigen::Vector3d delta(0.05, 0.0, 0.01);
    for (auto _ : state) {
        auto copy = pf;
        benchmark::DoNotOptimize(sim::pf_localize(copy, delta, scan, map, cfg, rng));
    }
}
BENCHMARK(BM_ParticleFilterStep);

static void BM_PredictorRollout(benchmark::State& state) {
    Rng rng(3);
    const int width = 34;
    rnn::RnnWeights w = rnn::RnnWeights::init(width, 32, 5);
    std::vector<Eigen::VectorXd> history;
    for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd x(width);
        for (int i = 0; i < width; ++i) x(i) = rng.uniform(-1.0, 1.0);
        history.push_back(x);
    }
    for (auto _ : state) benchmark::DoNotOptimize(rnn::forward(w, history, 9));
}
BENCHMARK(BM_PredictorRollout);

BENCHMARK_MAIN();
