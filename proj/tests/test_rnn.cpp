#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "snav/psd.hpp"
#include "snav/rnn.hpp"
#include "snav/rng.hpp"

using namespace snav;
using rnn::RnnWeights;
using rnn::TrainingSequence;
using rnn::TrainingSet;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Synthetic dataset: inputs random, target covariance a smooth function of
// the input so there is structure to learn.
TrainingSet synthetic_set(int sequences, int steps, int width, std::uint64_t seed) {
    Rng rng(seed);
    TrainingSet set;
    for (int s = 0; s < sequences; ++s) {
        TrainingSequence seq;
        double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (int k = 0; k < steps; ++k) {
            Eigen::VectorXd in(width);
            for (int i = 0; i < width; ++i)
                in(i) = std::sin(phase + 0.3 * k + 0.5 * i) + rng.gaussian(0.0, 0.02);
            const double v = 0.05 + 0.02 * std::sin(phase + 0.3 * k);
            Eigen::Vector4d target(v, 0.2 * v, 0.2 * v, 0.8 * v);
            seq.inputs.push_back(in);
            seq.targets.push_back(target);
        }
        set.sequences.push_back(std::move(seq));
    }
    return set;
}

}  // namespace

TEST_CASE("psd projection examples") {
    Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
    CHECK((rnn::make_psd(eye) - eye).norm() < 1e-12);

    Eigen::Matrix2d m;
    m << 1.0, 0.5, 0.3, 1.0;
    Eigen::Matrix2d expect;
    expect << 1.0, 0.4, 0.4, 1.0;  // symmetrized; eigenvalues 0.6 and 1.4
    CHECK((rnn::make_psd(m) - expect).norm() < 1e-12);

    Eigen::Matrix2d neg;
    neg << 0.0, 0.0, 0.0, -1.0;
    Eigen::Matrix2d out = rnn::make_psd(neg);
    CHECK(min_eigenvalue(out) >= 1e-10);
    CHECK(out(1, 1) == doctest::Approx(1e-9));
}

TEST_CASE("zero weights emit the projected bias") {
    RnnWeights w = RnnWeights::init(3, 4, 0);
    w.w_in.setZero();
    w.w_rec.setZero();
    w.b_h.setZero();
    w.w_out.setZero();
    w.b_out << 0.5, 0.1, 0.1, 0.3;
    w.out_mean.setZero();
    w.out_scale.setOnes();
    std::vector<Eigen::VectorXd> seq(5, Eigen::VectorXd::Ones(3));
    auto outs = rnn::forward(w, seq, 3);
    REQUIRE(outs.size() == 3);
    Eigen::Matrix2d expect;
    expect << 0.5, 0.1, 0.1, 0.3;
    expect = rnn::make_psd(expect);
    for (const auto& s : outs) CHECK((s - expect).norm() < 1e-12);
}

TEST_CASE("forward is deterministic and always PSD") {
    RnnWeights w = RnnWeights::init(6, 8, 42);
    Rng rng(3);
    std::vector<Eigen::VectorXd> seq;
    for (int k = 0; k < 12; ++k) {
        Eigen::VectorXd in(6);
        for (int i = 0; i < 6; ++i) in(i) = rng.uniform(-2.0, 2.0);
        seq.push_back(in);
    }
    auto a = rnn::forward(w, seq, 9);
    auto b = rnn::forward(w, seq, 9);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i] - b[i]).norm() == 0.0);
        CHECK(min_eigenvalue(a[i]) >= -1e-15);
        CHECK((a[i] - a[i].transpose()).norm() < 1e-12);
    }
    Eigen::VectorXd bad(5);
    CHECK_THROWS(rnn::forward(w, {bad}, 1));
}

TEST_CASE("BPTT gradients match central finite differences") {
    // Width-4 toy network, relative error <= 1e-4 against central
    // differences on every parameter.
    RnnWeights w = RnnWeights::init(3, 4, 7);
    TrainingSequence seq;
    Rng rng(5);
    for (int k = 0; k < 6; ++k) {
        Eigen::VectorXd in(3);
        for (int i = 0; i < 3; ++i) in(i) = rng.uniform(-1.0, 1.0);
        seq.inputs.push_back(in);
        seq.targets.push_back(Eigen::Vector4d(rng.uniform(0.0, 1.0), rng.uniform(-0.2, 0.2),
                                              rng.uniform(-0.2, 0.2), rng.uniform(0.0, 1.0)));
    }
    rnn::RnnGradients grads;
    rnn::loss_and_gradients(w, seq, &grads);

    const double eps = 1e-6;
    auto check_block = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
        for (int r = 0; r < param.rows(); ++r) {
            for (int c = 0; c < param.cols(); ++c) {
                const double orig = param(r, c);
                param(r, c) = orig + eps;
                const double lp = rnn::loss_and_gradients(w, seq, nullptr);
                param(r, c) = orig - eps;
                const double lm = rnn::loss_and_gradients(w, seq, nullptr);
                param(r, c) = orig;
                const double fd = (lp - lm) / (2.0 * eps);
                const double denom = std::max({std::abs(fd), std::abs(grad(r, c)), 1e-6});
                CHECK(std::abs(fd - grad(r, c)) / denom <= 1e-4);
            }
        }
    };
    check_block(w.w_in, grads.w_in);
    check_block(w.w_rec, grads.w_rec);
    check_block(w.w_out, grads.w_out);
    Eigen::MatrixXd bh = w.b_h, gbh = grads.b_h;
    Eigen::MatrixXd bo = w.b_out, gbo = grads.b_out;
    // Bias vectors through the same path.
    for (int i = 0; i < bh.rows(); ++i) {
        const double orig = w.b_h(i);
        w.b_h(i) = orig + eps;
        const double lp = rnn::loss_and_gradients(w, seq, nullptr);
        w.b_h(i) = orig - eps;
        const double lm = rnn::loss_and_gradients(w, seq, nullptr);
        w.b_h(i) = orig;
        const double fd = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(grads.b_h(i)), 1e-6});
        CHECK(std::abs(fd - grads.b_h(i)) / denom <= 1e-4);
    }
    for (int i = 0; i < bo.rows(); ++i) {
        const double orig = w.b_out(i);
        w.b_out(i) = orig + eps;
        const double lp = rnn::loss_and_gradients(w, seq, nullptr);
        w.b_out(i) = orig - eps;
        const double lm = rnn::loss_and_gradients(w, seq, nullptr);
        w.b_out(i) = orig;
        const double fd = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(grads.b_out(i)), 1e-6});
        CHECK(std::abs(fd - grads.b_out(i)) / denom <= 1e-4);
    }
}

TEST_CASE("training reduces the loss on structured data") {
    TrainingSet set = synthetic_set(8, 30, 5, 1);
    rnn::TrainOptions opt;
    opt.epochs = 60;
    opt.hidden_width = 8;
    opt.seed = 2;
    auto result = rnn::train(set, opt);
    REQUIRE(static_cast<int>(result.train_mse.size()) == opt.epochs);
    CHECK(result.train_mse.back() < 0.5 * result.train_mse.front());
    CHECK(std::isfinite(result.val_mse.back()));
}

TEST_CASE("zero learning rate freezes the loss curve") {
    TrainingSet set = synthetic_set(4, 15, 3, 3);
    rnn::TrainOptions opt;
    opt.epochs = 5;
    opt.learning_rate = 0.0;
    opt.hidden_width = 4;
    auto result = rnn::train(set, opt);
    for (double m : result.train_mse)
        CHECK(m == doctest::Approx(result.train_mse.front()).epsilon(1e-12));
}

TEST_CASE("constant-target dataset converges to the constant predictor") {
    TrainingSet set;
    Rng rng(9);
    for (int s = 0; s < 6; ++s) {
        TrainingSequence seq;
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd in(3);
            for (int i = 0; i < 3; ++i) in(i) = rng.uniform(-1.0, 1.0);
            seq.inputs.push_back(in);
            seq.targets.push_back(Eigen::Vector4d(0.3, 0.05, 0.05, 0.2));
        }
        set.sequences.push_back(std::move(seq));
    }
    rnn::TrainOptions opt;
    opt.epochs = 1200;
    opt.hidden_width = 6;
    opt.learning_rate = 2e-2;
    auto result = rnn::train(set, opt);
    CHECK(result.train_mse.back() <= 1e-6);
}

TEST_CASE("training is deterministic for a fixed seed") {
    TrainingSet set = synthetic_set(4, 20, 4, 11);
    rnn::TrainOptions opt;
    opt.epochs = 10;
    opt.hidden_width = 6;
    opt.seed = 77;
    auto a = rnn::train(set, opt);
    auto b = rnn::train(set, opt);
    REQUIRE(a.train_mse.size() == b.train_mse.size());
    for (size_t i = 0; i < a.train_mse.size(); ++i) CHECK(a.train_mse[i] == b.train_mse[i]);
    CHECK((a.weights.w_in - b.weights.w_in).norm() == 0.0);
    CHECK((a.weights.w_out - b.weights.w_out).norm() == 0.0);
}

TEST_CASE("weights checkpoint round trip") {
    RnnWeights w = RnnWeights::init(5, 7, 123);
    const std::string path = temp_path("snav_test_rnn.ckpt");
    rnn::save_weights(w, path);
    RnnWeights back = rnn::load_weights(path);
    CHECK((w.w_in - back.w_in).norm() == 0.0);
    CHECK((w.w_rec - back.w_rec).norm() == 0.0);
    CHECK((w.b_h - back.b_h).norm() == 0.0);
    CHECK((w.w_out - back.w_out).norm() == 0.0);
    CHECK((w.b_out - back.b_out).norm() == 0.0);
    CHECK((w.in_mean - back.in_mean).norm() == 0.0);
    CHECK((w.in_scale - back.in_scale).norm() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("training set checkpoint round trip and merge") {
    TrainingSet set = synthetic_set(3, 12, 4, 21);
    const std::string path = temp_path("snav_test_rnn_data.bin");
    rnn::save_training_set(set, path);
    TrainingSet back = rnn::load_training_set(path);
    REQUIRE(back.sequences.size() == set.sequences.size());
    for (size_t s = 0; s < set.sequences.size(); ++s) {
        REQUIRE(back.sequences[s].inputs.size() == set.sequences[s].inputs.size());
        for (size_t k = 0; k < set.sequences[s].inputs.size(); ++k) {
            CHECK((back.sequences[s].inputs[k] - set.sequences[s].inputs[k]).norm() == 0.0);
            CHECK((back.sequences[s].targets[k] - set.sequences[s].targets[k]).norm() == 0.0);
        }
    }
    TrainingSet other = synthetic_set(2, 12, 4, 22);
    rnn::merge_training_sets(back, other);
    CHECK(back.sequences.size() == 5);
    std::remove(path.c_str());
}
