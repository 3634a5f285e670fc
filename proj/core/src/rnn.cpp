#include "snav/rnn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "snav/checkpoint.hpp"
#include "snav/psd.hpp"
#include "snav/rng.hpp"

namespace snav::rnn {

RnnWeights RnnWeights::init(int input_width, int hidden_width, std::uint64_t seed) {
    Rng rng(seed);
    auto uniform_matrix = [&](int rows, int cols, double scale) {
        Eigen::MatrixXd m(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
        return m;
    };
    RnnWeights w;
    w.w_in = uniform_matrix(hidden_width, input_width, 1.0 / std::sqrt(input_width));
    w.w_rec = uniform_matrix(hidden_width, hidden_width, 1.0 / std::sqrt(hidden_width));
    w.b_h = Eigen::VectorXd::Zero(hidden_width);
    w.w_out = uniform_matrix(4, hidden_width, 1.0 / std::sqrt(hidden_width));
    w.b_out = Eigen::VectorXd::Zero(4);
    w.in_mean = Eigen::VectorXd::Zero(input_width);
    w.in_scale = Eigen::VectorXd::Ones(input_width);
    w.out_mean = Eigen::VectorXd::Zero(4);
    w.out_scale = Eigen::VectorXd::Ones(4);
    return w;
}

void RnnWeights::validate() const {
    const int h = hidden_width();
    const int i = input_width();
    if (w_rec.rows() != h || w_rec.cols() != h || b_h.size() != h ||
        w_out.cols() != h || w_out.rows() != 4 || b_out.size() != 4 ||
        in_mean.size() != i || in_scale.size() != i || out_mean.size() != 4 ||
        out_scale.size() != 4)
        throw std::invalid_argument("RnnWeights: inconsistent dimensions");
    if (!w_in.allFinite() || !w_rec.allFinite() || !w_out.allFinite())
        throw std::invalid_argument("RnnWeights: non-finite values");
}

Eigen::Matrix2d make_psd(const Eigen::Matrix2d& m) {
    if (!m.allFinite()) throw std::invalid_argument("make_psd: non-finite entries");
    return project_psd(m, 1e-9);
}

namespace {

Eigen::VectorXd normalize_input(const RnnWeights& w, const Eigen::VectorXd& x) {
    return (x - w.in_mean).cwiseQuotient(w.in_scale);
}

Eigen::Matrix2d denormalize_output(const RnnWeights& w, const Eigen::Vector4d& y) {
    const Eigen::Vector4d raw = y.cwiseProduct(w.out_scale.head<4>()) + w.out_mean.head<4>();
    Eigen::Matrix2d m;
    m << raw(0), raw(1), raw(2), raw(3);
    return make_psd(m);
}

}  // namespace

std::vector<Eigen::Matrix2d> forward(const RnnWeights& w,
                                     const std::vector<Eigen::VectorXd>& input_sequence,
                                     int future_steps) {
    w.validate();
    if (input_sequence.empty())
        throw std::invalid_argument("rnn::forward: empty input sequence");
    for (const auto& x : input_sequence)
        if (x.size() != w.input_width())
            throw std::invalid_argument("rnn::forward: input width mismatch");
    Eigen::VectorXd h = Eigen::VectorXd::Zero(w.hidden_width());
    for (const auto& x : input_sequence) {
        h = (w.w_in * normalize_input(w, x) + w.w_rec * h + w.b_h).array().tanh();
    }
    // Closed-loop rollout holding the last input.
    const Eigen::VectorXd held = normalize_input(w, input_sequence.back());
    std::vector<Eigen::Matrix2d> out;
    out.reserve(future_steps);
    for (int k = 0; k < future_steps; ++k) {
        h = (w.w_in * held + w.w_rec * h + w.b_h).array().tanh();
        out.push_back(denormalize_output(w, w.w_out * h + w.b_out));
    }
    return out;
}

std::vector<Eigen::Matrix2d> evaluate_sequence(
    const RnnWeights& w, const std::vector<Eigen::VectorXd>& input_sequence) {
    w.validate();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(w.hidden_width());
    std::vector<Eigen::Matrix2d> out;
    out.reserve(input_sequence.size());
    for (const auto& x : input_sequence) {
        if (x.size() != w.input_width())
            throw std::invalid_argument("rnn::evaluate_sequence: input width mismatch");
        h = (w.w_in * normalize_input(w, x) + w.w_rec * h + w.b_h).array().tanh();
        out.push_back(denormalize_output(w, w.w_out * h + w.b_out));
    }
    return out;
}

double loss_and_gradients(const RnnWeights& w, const TrainingSequence& seq,
                          RnnGradients* grads) {
    const int T = static_cast<int>(seq.inputs.size());
    if (T == 0 || seq.targets.size() != seq.inputs.size())
        throw std::invalid_argument("loss_and_gradients: malformed sequence");
    const int H = w.hidden_width();

    std::vector<Eigen::VectorXd> xs(T), hs(T);
    std::vector<Eigen::Vector4d> ys(T), dys(T);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    double loss = 0.0;
    const double inv = 1.0 / (4.0 * T);
    for (int t = 0; t < T; ++t) {
        xs[t] = normalize_input(w, seq.inputs[t]);
        h = (w.w_in * xs[t] + w.w_rec * h + w.b_h).array().tanh();
        hs[t] = h;
        ys[t] = w.w_out * h + w.b_out;
        const Eigen::Vector4d target_norm =
            (seq.targets[t] - w.out_mean.head<4>()).cwiseQuotient(w.out_scale.head<4>());
        const Eigen::Vector4d err = ys[t] - target_norm;
        loss += inv * err.squaredNorm();
        dys[t] = 2.0 * inv * err;
    }
    if (!grads) return loss;

    grads->w_in = Eigen::MatrixXd::Zero(H, w.input_width());
    grads->w_rec = Eigen::MatrixXd::Zero(H, H);
    grads->b_h = Eigen::VectorXd::Zero(H);
    grads->w_out = Eigen::MatrixXd::Zero(4, H);
    grads->b_out = Eigen::VectorXd::Zero(4);

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    for (int t = T - 1; t >= 0; --t) {
        grads->w_out += dys[t] * hs[t].transpose();
        grads->b_out += dys[t];
        Eigen::VectorXd dh = w.w_out.transpose() * dys[t] + dh_next;
        // Through tanh: da = dh * (1 - h^2).
        const Eigen::VectorXd da =
            dh.cwiseProduct(Eigen::VectorXd::Ones(H) - hs[t].cwiseProduct(hs[t]));
        grads->w_in += da * xs[t].transpose();
        grads->b_h += da;
        if (t > 0) grads->w_rec += da * hs[t - 1].transpose();
        dh_next = w.w_rec.transpose() * da;
    }
    return loss;
}

namespace {

struct AdamaxState {
    Eigen::MatrixXd m, u;
    void init(Eigen::Index rows, Eigen::Index cols) {
        m = Eigen::MatrixXd::Zero(rows, cols);
        u = Eigen::MatrixXd::Zero(rows, cols);
    }
    void step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad,
              double lr, double bias_correction) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * grad;
        u = (beta2 * u).cwiseMax(grad.cwiseAbs());
        param -= (lr / bias_correction) *
                 m.cwiseQuotient(u + Eigen::MatrixXd::Constant(u.rows(), u.cols(), eps));
    }
};

void fit_normalization(RnnWeights& w, const TrainingSet& data) {
    const int iw = w.input_width();
    Eigen::VectorXd in_sum = Eigen::VectorXd::Zero(iw), in_sq = Eigen::VectorXd::Zero(iw);
    Eigen::Vector4d out_sum = Eigen::Vector4d::Zero(), out_sq = Eigen::Vector4d::Zero();
    double n = 0.0;
    for (const auto& seq : data.sequences) {
        for (size_t t = 0; t < seq.inputs.size(); ++t) {
            in_sum += seq.inputs[t];
            in_sq += seq.inputs[t].cwiseProduct(seq.inputs[t]);
            out_sum += seq.targets[t];
            out_sq += seq.targets[t].cwiseProduct(seq.targets[t]);
            n += 1.0;
        }
    }
    if (n < 1.0) throw std::invalid_argument("rnn::train: empty dataset");
    w.in_mean = in_sum / n;
    w.in_scale = ((in_sq / n) - w.in_mean.cwiseProduct(w.in_mean))
                     .cwiseMax(0.0)
                     .cwiseSqrt()
                     .cwiseMax(1e-8);
    const Eigen::Vector4d om = out_sum / n;
    const Eigen::Vector4d ov = ((out_sq / n) - om.cwiseProduct(om))
                                   .cwiseMax(0.0)
                                   .cwiseSqrt()
                                   .cwiseMax(1e-8);
    w.out_mean = om;
    w.out_scale = ov;
}

}  // namespace

TrainResult train(const TrainingSet& dataset, const TrainOptions& options) {
    if (dataset.sequences.empty())
        throw std::invalid_argument("rnn::train: empty dataset");
    const int input_width = static_cast<int>(dataset.sequences.front().inputs.front().size());

    TrainResult result;
    result.weights = RnnWeights::init(input_width, options.hidden_width, options.seed);
    fit_normalization(result.weights, dataset);
    RnnWeights& w = result.weights;

    // Hold out the tail sequences for validation.
    const int total = static_cast<int>(dataset.sequences.size());
    int val_count = static_cast<int>(std::floor(options.validation_fraction * total));
    val_count = std::min(val_count, total - 1);
    const int train_count = total - val_count;

    AdamaxState s_win, s_wrec, s_bh, s_wout, s_bout;
    s_win.init(w.w_in.rows(), w.w_in.cols());
    s_wrec.init(w.w_rec.rows(), w.w_rec.cols());
    s_bh.init(w.b_h.size(), 1);
    s_wout.init(w.w_out.rows(), w.w_out.cols());
    s_bout.init(w.b_out.size(), 1);

    Rng order_rng(options.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<int> order(train_count);
    for (int i = 0; i < train_count; ++i) order[i] = i;

    long long update_count = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        // Deterministic reshuffle each epoch.
        for (int i = train_count - 1; i > 0; --i) {
            const int j = static_cast<int>(order_rng.uniform_int(i + 1));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        for (int i : order) {
            RnnGradients g;
            const double loss = loss_and_gradients(w, dataset.sequences[i], &g);
            if (!std::isfinite(loss))
                throw std::runtime_error("rnn::train: divergence (NaN loss) at epoch " +
                                         std::to_string(epoch));
            epoch_loss += loss;
            ++update_count;
            const double bc = 1.0 - std::pow(0.9, static_cast<double>(update_count));
            s_win.step(w.w_in, g.w_in, options.learning_rate, bc);
            s_wrec.step(w.w_rec, g.w_rec, options.learning_rate, bc);
            s_bh.step(w.b_h, g.b_h, options.learning_rate, bc);
            s_wout.step(w.w_out, g.w_out, options.learning_rate, bc);
            s_bout.step(w.b_out, g.b_out, options.learning_rate, bc);
        }
        result.train_mse.push_back(epoch_loss / train_count);
        double val_loss = 0.0;
        for (int i = train_count; i < total; ++i)
            val_loss += loss_and_gradients(w, dataset.sequences[i], nullptr);
        result.val_mse.push_back(val_count > 0 ? val_loss / val_count
                                               : result.train_mse.back());
    }
    return result;
}

void save_weights(const RnnWeights& w, const std::string& path) {
    io::write_checkpoint(path, io::kKindRnn,
                         {w.w_in, w.w_rec, w.b_h, w.w_out, w.b_out, w.in_mean,
                          w.in_scale, w.out_mean, w.out_scale});
}

RnnWeights load_weights(const std::string& path) {
    const io::Checkpoint ck = io::read_checkpoint(path);
    if (ck.kind != io::kKindRnn || ck.matrices.size() != 9)
        throw std::runtime_error("load_weights: not an RNN checkpoint: " + path);
    RnnWeights w;
    w.w_in = ck.matrices[0];
    w.w_rec = ck.matrices[1];
    w.b_h = ck.matrices[2];
    w.w_out = ck.matrices[3];
    w.b_out = ck.matrices[4];
    w.in_mean = ck.matrices[5];
    w.in_scale = ck.matrices[6];
    w.out_mean = ck.matrices[7];
    w.out_scale = ck.matrices[8];
    w.validate();
    return w;
}

void save_loss_curve(const TrainResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_loss_curve: cannot open " + path);
    out << "epoch,train_mse,val_mse\n";
    out.precision(17);
    for (size_t e = 0; e < result.train_mse.size(); ++e)
        out << e << "," << result.train_mse[e] << "," << result.val_mse[e] << "\n";
}


void save_training_set(const TrainingSet& set, const std::string& path) {
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(set.sequences.size() * 2);
    for (const auto& seq : set.sequences) {
        if (seq.inputs.empty() || seq.inputs.size() != seq.targets.size())
            throw std::invalid_argument("save_training_set: malformed sequence");
        Eigen::MatrixXd in(seq.inputs.size(), seq.inputs.front().size());
        Eigen::MatrixXd tg(seq.targets.size(), 4);
        for (size_t t = 0; t < seq.inputs.size(); ++t) {
            in.row(t) = seq.inputs[t].transpose();
            tg.row(t) = seq.targets[t].transpose();
        }
        mats.push_back(std::move(in));
        mats.push_back(std::move(tg));
    }
    io::write_checkpoint(path, io::kKindDataset, mats);
}

TrainingSet load_training_set(const std::string& path) {
    const io::Checkpoint ck = io::read_checkpoint(path);
    if (ck.kind != io::kKindDataset)
        throw std::runtime_error("load_training_set: not a dataset file: " + path);
    if (ck.matrices.size() % 2 != 0)
        throw std::runtime_error("load_training_set: odd matrix count in " + path);
    TrainingSet set;
    for (size_t i = 0; i + 1 < ck.matrices.size(); i += 2) {
        const Eigen::MatrixXd& in = ck.matrices[i];
        const Eigen::MatrixXd& tg = ck.matrices[i + 1];
        if (in.rows() != tg.rows() || tg.cols() != 4)
            throw std::runtime_error("load_training_set: shape mismatch in " + path);
        TrainingSequence seq;
        for (Eigen::Index t = 0; t < in.rows(); ++t) {
            seq.inputs.push_back(in.row(t).transpose());
            seq.targets.push_back(tg.row(t).transpose());
        }
        set.sequences.push_back(std::move(seq));
    }
    return set;
}

void merge_training_sets(TrainingSet& base, const TrainingSet& extra) {
    base.sequences.insert(base.sequences.end(), extra.sequences.begin(),
                          extra.sequences.end());
}

}  // namespace snav::rnn

