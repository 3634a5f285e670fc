#ifndef SNAV_RNN_HPP
#define SNAV_RNN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace snav::rnn {

/// Elman recurrent layer (tanh) followed by a linear dense head emitting
/// the flattened 2x2 position covariance. Per-feature normalization
/// constants are frozen into the weights at training time.
struct RnnWeights {
    Eigen::MatrixXd w_in;   // hidden x input
    Eigen::MatrixXd w_rec;  // hidden x hidden
    Eigen::VectorXd b_h;    // hidden
    Eigen::MatrixXd w_out;  // 4 x hidden
    Eigen::VectorXd b_out;  // 4

    Eigen::VectorXd in_mean, in_scale;    // input normalization
    Eigen::VectorXd out_mean, out_scale;  // target normalization

    int input_width() const { return static_cast<int>(w_in.cols()); }
    int hidden_width() const { return static_cast<int>(w_in.rows()); }

    static RnnWeights init(int input_width, int hidden_width, std::uint64_t seed);
    void validate() const;
};

struct TrainingSequence {
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::Vector4d> targets;  // flattened 2x2 covariances
};

struct TrainingSet {
    std::vector<TrainingSequence> sequences;
};

/// Symmetrize, eigen-decompose, clamp eigenvalues at 1e-9, reconstruct.
Eigen::Matrix2d make_psd(const Eigen::Matrix2d& m);

/// Consume the input sequence, then roll the recurrent state forward for
/// `future_steps` more steps holding the last input, emitting one
/// PSD-projected covariance per future step (the first entry corresponds
/// to the step after the last input).
std::vector<Eigen::Matrix2d> forward(const RnnWeights& w,
                                     const std::vector<Eigen::VectorXd>& input_sequence,
                                     int future_steps);

/// Per-step covariance outputs aligned with the inputs (open loop, used
/// for evaluation against localizer traces).
std::vector<Eigen::Matrix2d> evaluate_sequence(
    const RnnWeights& w, const std::vector<Eigen::VectorXd>& input_sequence);

struct RnnGradients {
    Eigen::MatrixXd w_in, w_rec, w_out;
    Eigen::VectorXd b_h, b_out;
};

/// MSE loss (normalized space) and full-BPTT gradients on one sequence.
/// Exposed so tests can check the gradients against finite differences.
double loss_and_gradients(const RnnWeights& w, const TrainingSequence& seq,
                          RnnGradients* grads);

struct TrainOptions {
    int epochs = 500;
    double learning_rate = 2e-3;
    std::uint64_t seed = 0;
    int hidden_width = 32;
    double validation_fraction = 0.1;
};

struct TrainResult {
    RnnWeights weights;
    std::vector<double> train_mse;  // per epoch
    std::vector<double> val_mse;
};

/// Backpropagation-through-time training with the Adamax optimizer.
/// Deterministic for a fixed seed. Throws on divergence (NaN loss).
TrainResult train(const TrainingSet& dataset, const TrainOptions& options);

void save_weights(const RnnWeights& w, const std::string& path);
RnnWeights load_weights(const std::string& path);

/// Loss curves as CSV (epoch, train_mse, val_mse).
void save_loss_curve(const TrainResult& result, const std::string& path);

/// Training sequences as a binary checkpoint (alternating input/target
/// matrices, one pair per sequence, rows = timesteps).
void save_training_set(const TrainingSet& set, const std::string& path);
TrainingSet load_training_set(const std::string& path);
/// Concatenates the sequences of `extra` onto `base`.
void merge_training_sets(TrainingSet& base, const TrainingSet& extra);

}  // namespace snav::rnn

#endif
