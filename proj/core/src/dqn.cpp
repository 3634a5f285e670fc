#include "snav/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "snav/checkpoint.hpp"

namespace snav::dqn {

Eigen::VectorXd QNetwork::forward(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd h1 = (w1 * x + b1).cwiseMax(0.0);
    const Eigen::VectorXd h2 = (w2 * h1 + b2).cwiseMax(0.0);
    return w3 * h2 + b3;
}

Eigen::MatrixXd QNetwork::forward_batch(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd h1 = ((w1 * x).colwise() + b1).cwiseMax(0.0);
    const Eigen::MatrixXd h2 = ((w2 * h1).colwise() + b2).cwiseMax(0.0);
    return (w3 * h2).colwise() + b3;
}

QNetwork QNetwork::init(int input_dim, int hidden, int output_dim, std::uint64_t seed) {
    Rng rng(seed);
    auto he = [&](int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        const double sd = std::sqrt(2.0 / cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian(0.0, sd);
        return m;
    };
    QNetwork net;
    net.w1 = he(hidden, input_dim);
    net.w2 = he(hidden, hidden);
    net.w3 = he(output_dim, hidden);
    net.b1 = Eigen::VectorXd::Zero(hidden);
    net.b2 = Eigen::VectorXd::Zero(hidden);
    net.b3 = Eigen::VectorXd::Zero(output_dim);
    return net;
}

void QNetwork::validate() const {
    if (w1.rows() != b1.size() || w2.rows() != b2.size() || w3.rows() != b3.size() ||
        w2.cols() != w1.rows() || w3.cols() != w2.rows())
        throw std::invalid_argument("QNetwork: inconsistent layer shapes");
    if (!w1.allFinite() || !w2.allFinite() || !w3.allFinite() || !b1.allFinite() ||
        !b2.allFinite() || !b3.allFinite())
        throw std::invalid_argument("QNetwork: non-finite weights");
}

long argmax_action(const Eigen::VectorXd& q) {
    long best = 0;
    for (long i = 1; i < q.size(); ++i)
        if (q(i) > q(best)) best = i;  // strict: ties keep the lowest index
    return best;
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);
        next_ = (next_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
    if (data_.empty()) throw std::logic_error("ReplayBuffer: sampling empty buffer");
    return data_[rng.uniform_int(data_.size())];
}

namespace {

struct AdamState {
    Eigen::MatrixXd m, v;
    explicit AdamState(const Eigen::MatrixXd& shape)
        : m(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())),
          v(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())) {}
};

void adam_step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamState& st,
               double lr, long t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    st.m = b1 * st.m + (1.0 - b1) * grad;
    st.v = b2 * st.v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    param.noalias() -=
        (lr / bc1) * (st.m.array() / ((st.v.array() / bc2).sqrt() + eps)).matrix();
}

struct Optimizer {
    AdamState w1, w2, w3, b1, b2, b3;
    long t = 0;
    explicit Optimizer(const QNetwork& n)
        : w1(n.w1), w2(n.w2), w3(n.w3), b1(n.b1), b2(n.b2), b3(n.b3) {}
};

/// One Adam update of `net` on a replay minibatch using `target` for
/// bootstrapped targets. Returns the batch MSE.
double update_batch(QNetwork& net, const QNetwork& target, Optimizer& opt,
                    const std::vector<const Transition*>& batch, double gamma,
                    double lr) {
    const int n = static_cast<int>(batch.size());
    const int in_dim = net.input_dim();
    Eigen::MatrixXd x(in_dim, n), xn(in_dim, n);
    for (int i = 0; i < n; ++i) {
        x.col(i) = batch[i]->state;
        xn.col(i) = batch[i]->next_state;
    }
    // Forward with activations kept for backprop.
    const Eigen::MatrixXd z1 = (net.w1 * x).colwise() + net.b1;
    const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
    const Eigen::MatrixXd z2 = (net.w2 * h1).colwise() + net.b2;
    const Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
    const Eigen::MatrixXd q = (net.w3 * h2).colwise() + net.b3;

    // Double-DQN targets: the online network picks the next action, the
    // target network scores it. Plain max-over-target overestimates badly
    // here because the joint action space is large.
    const Eigen::MatrixXd qn = target.forward_batch(xn);
    const Eigen::MatrixXd qn_online = net.forward_batch(xn);
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), n);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double y = batch[i]->reward;
        if (!batch[i]->terminal) y += gamma * qn(argmax_action(qn_online.col(i)), i);
        const double err = q(batch[i]->action, i) - y;
        loss += err * err;
        dq(batch[i]->action, i) = 2.0 * err / n;
    }
    loss /= n;

    const Eigen::MatrixXd g_w3 = dq * h2.transpose();
    const Eigen::VectorXd g_b3 = dq.rowwise().sum();
    Eigen::MatrixXd dh2 = net.w3.transpose() * dq;
    dh2 = dh2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd g_w2 = dh2 * h1.transpose();
    const Eigen::VectorXd g_b2 = dh2.rowwise().sum();
    Eigen::MatrixXd dh1 = net.w2.transpose() * dh2;
    dh1 = dh1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd g_w1 = dh1 * x.transpose();
    const Eigen::VectorXd g_b1 = dh1.rowwise().sum();

    opt.t += 1;
    adam_step(net.w1, g_w1, opt.w1, lr, opt.t);
    adam_step(net.w2, g_w2, opt.w2, lr, opt.t);
    adam_step(net.w3, g_w3, opt.w3, lr, opt.t);
    Eigen::MatrixXd b;
    b = net.b1;
    adam_step(b, g_b1, opt.b1, lr, opt.t);
    net.b1 = b;
    b = net.b2;
    adam_step(b, g_b2, opt.b2, lr, opt.t);
    net.b2 = b;
    b = net.b3;
    adam_step(b, g_b3, opt.b3, lr, opt.t);
    net.b3 = b;
    return loss;
}

}  // namespace

DqnTrainResult train_dqn(const DqnConfig& config) {
    if (config.n_robots < 1) throw std::invalid_argument("train_dqn: need robots");
    std::vector<dyn::RobotKind> kinds = config.kinds;
    if (kinds.empty()) kinds.assign(config.n_robots, dyn::RobotKind::UGV);
    if (static_cast<int>(kinds.size()) != config.n_robots)
        throw std::invalid_argument("train_dqn: kinds size mismatch");

    const int in_dim = encoded_dim(config.n_robots, config.encode);
    const long n_actions = JointAction::action_count(config.n_robots);
    Rng rng(config.seed);
    QNetwork net =
        QNetwork::init(in_dim, config.hidden, static_cast<int>(n_actions), config.seed + 1);
    QNetwork target = net;
    Optimizer opt(net);
    ReplayBuffer buffer(config.buffer_capacity);

    const double decay_episodes =
        std::max(1.0, config.epsilon_decay_fraction * config.episodes);
    long updates = 0;

    DqnTrainResult result;
    result.episode_returns.reserve(config.episodes);

    for (int ep = 0; ep < config.episodes; ++ep) {
        GridEnv env = random_episode_env(rng, config.n_robots, config.obstacle_cells,
                                         kinds, config.step_cap, config.wall_features);
        const double frac = std::min(1.0, ep / decay_episodes);
        const double eps =
            config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start);
        Eigen::VectorXd state = encode_state(env, config.encode);
        double ep_return = 0.0;
        for (;;) {
            long action;
            if (rng.uniform() < eps) {
                action = static_cast<long>(rng.uniform_int(n_actions));
            } else {
                action = argmax_action(net.forward(state));
            }
            StepResult step = step_env(env, JointAction::decode(action, config.n_robots),
                                       config.reward, config.encode);
            double r = 0.0;
            for (const double ri : step.rewards) r += ri;
            ep_return += r;
            // Step-cap truncation is not a true terminal state: keep the
            // bootstrap so Q-values stay horizon-independent.
            const bool terminal_for_target = step.collision || env.all_done();
            buffer.push(Transition{state, step.state, action, r, terminal_for_target});
            state = step.state;

            if (buffer.size() >= config.warmup) {
                std::vector<const Transition*> batch(config.batch_size);
                for (auto& b : batch) b = &buffer.sample(rng);
                update_batch(net, target, opt, batch, config.reward.discount,
                             config.learning_rate);
                ++updates;
                if (updates % config.target_sync_steps == 0) target = net;
            }
            if (step.terminal) break;
        }
        result.episode_returns.push_back(ep_return);
    }

    for (int start = 0; start + config.curve_window <=
                        static_cast<int>(result.episode_returns.size());
         start += config.curve_window) {
        double s = 0.0;
        for (int i = 0; i < config.curve_window; ++i) s += result.episode_returns[start + i];
        result.reward_curve.push_back(s / config.curve_window);
    }
    result.net = std::move(net);
    return result;
}

GreedyResult run_greedy(const QNetwork& net, GridEnv env, const RewardConfig& reward,
                        const EncodeOptions& opt) {
    GreedyResult res;
    res.paths.resize(env.robots.size());
    for (int i = 0; i < env.n_robots(); ++i) res.paths[i].push_back(env.robots[i]);
    Eigen::VectorXd state = encode_state(env, opt);
    for (;;) {
        const long action = argmax_action(net.forward(state));
        StepResult step =
            step_env(env, JointAction::decode(action, env.n_robots()), reward, opt);
        for (int i = 0; i < env.n_robots(); ++i) res.paths[i].push_back(env.robots[i]);
        state = step.state;
        res.steps = env.steps;
        if (step.collision) {
            res.collision = true;
            return res;
        }
        if (step.terminal) {
            res.success = env.all_done();
            return res;
        }
    }
}

std::vector<Eigen::Vector2d> next_targets(const QNetwork& net, const GridEnv& env,
                                          const sim::WorldMap& map,
                                          const EncodeOptions& opt) {
    const long action = argmax_action(net.forward(encode_state(env, opt)));
    const JointAction joint = JointAction::decode(action, env.n_robots());
    std::vector<Eigen::Vector2d> targets;
    targets.reserve(env.robots.size());
    for (int i = 0; i < env.n_robots(); ++i) {
        GridCell c = env.robots[i];
        if (!env.done[i]) {
            const GridCell d = move_delta(joint.moves[i]);
            if (env.in_grid(c.x + d.x, c.y + d.y)) c = {c.x + d.x, c.y + d.y};
        }
        targets.push_back(map.cell_center(c.x, c.y));
    }
    return targets;
}

void save_qnet(const QNetwork& net, const std::string& path) {
    net.validate();
    io::write_checkpoint(path, io::kKindDqn,
                         {net.w1, net.b1, net.w2, net.b2, net.w3, net.b3});
}

QNetwork load_qnet(const std::string& path) {
    const io::Checkpoint ck = io::read_checkpoint(path);
    if (ck.kind != io::kKindDqn)
        throw std::runtime_error("load_qnet: checkpoint is not a Q-network: " + path);
    if (ck.matrices.size() != 6)
        throw std::runtime_error("load_qnet: wrong matrix count in " + path);
    QNetwork net;
    net.w1 = ck.matrices[0];
    net.b1 = ck.matrices[1];
    net.w2 = ck.matrices[2];
    net.b2 = ck.matrices[3];
    net.w3 = ck.matrices[4];
    net.b3 = ck.matrices[5];
    net.validate();
    return net;
}

void save_reward_curve(const DqnTrainResult& result, int window, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_reward_curve: cannot open " + path);
    out << "episode,mean_return\n";
    for (std::size_t i = 0; i < result.reward_curve.size(); ++i)
        out << (i + 1) * static_cast<std::size_t>(window) << "," << result.reward_curve[i]
            << "\n";
}

}  // namespace snav::dqn
