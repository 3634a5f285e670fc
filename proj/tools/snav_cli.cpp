// Command-line front end: map generation, data collection, training,
// episode runs, planner benchmarks, and plotting.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "snav/dqn.hpp"
#include "snav/harness.hpp"
#include "snav/planners.hpp"
#include "snav/rnn.hpp"
#include "snav/svg.hpp"
#include "snav/world.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace snav;

namespace {

/// Machine-readable error record on stderr, used for every nonzero exit.
int fail(const std::string& op, const std::string& message) {
    json err;
    err["error"] = message;
    err["operation"] = op;
    std::cerr << err.dump() << std::endl;
    return 1;
}

int cmd_gen_maps(int count, std::uint64_t seed, const std::string& out_dir,
                 int obstacle_cells, int landmarks, bool walls) {
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        Rng rng(seed + static_cast<std::uint64_t>(i));
        sim::MapGenParams params;
        params.obstacle_cells = obstacle_cells;
        params.landmark_count = landmarks;
        params.walls = walls;
        sim::WorldMap map = sim::generate_random_map(rng, params);
        map.seed = seed + static_cast<std::uint64_t>(i);
        const std::string path =
            (fs::path(out_dir) / ("map_" + std::to_string(i) + ".txt")).string();
        sim::save_map(map, path);
        std::cout << path << "\n";
    }
    return 0;
}

int cmd_collect(const std::vector<std::string>& map_files, const std::string& sensor,
                int steps, std::uint64_t seed, int seq_len, const std::string& out) {
    const run::SensorKind kind = run::sensor_from_name(sensor);
    rnn::TrainingSet all;
    for (std::size_t i = 0; i < map_files.size(); ++i) {
        const sim::WorldMap map = sim::load_map(map_files[i]);
        const rnn::TrainingSet set = run::collect_rnn_data(
            map, kind, steps, seed + static_cast<std::uint64_t>(i), seq_len);
        rnn::merge_training_sets(all, set);
        std::cout << map_files[i] << ": " << set.sequences.size() << " sequences\n";
    }
    if (all.sequences.empty()) return fail("collect-rnn-data", "no sequences collected");
    rnn::save_training_set(all, out);
    std::cout << "wrote " << all.sequences.size() << " sequences to " << out << "\n";
    return 0;
}

int cmd_train_rnn(const std::vector<std::string>& data_files, int epochs, double lr,
                  int hidden, std::uint64_t seed, const std::string& out,
                  const std::string& curve) {
    rnn::TrainingSet set;
    for (const auto& f : data_files) rnn::merge_training_sets(set, rnn::load_training_set(f));
    rnn::TrainOptions opt;
    opt.epochs = epochs;
    opt.learning_rate = lr;
    opt.hidden_width = hidden;
    opt.seed = seed;
    const rnn::TrainResult result = rnn::train(set, opt);
    rnn::save_weights(result.weights, out);
    if (!curve.empty()) rnn::save_loss_curve(result, curve);
    std::cout << "final train mse " << result.train_mse.back() << ", weights in " << out
              << "\n";
    return 0;
}

int cmd_train_dqn(int robots, int episodes, std::uint64_t seed, const std::string& out,
                  const std::string& curve, int hidden, int obstacle_cells, bool walls) {
    dqn::DqnConfig cfg;
    cfg.n_robots = robots;
    cfg.episodes = episodes;
    cfg.seed = seed;
    cfg.hidden = hidden;
    cfg.obstacle_cells = obstacle_cells;
    cfg.wall_features = walls;
    const dqn::DqnTrainResult result = dqn::train_dqn(cfg);
    dqn::save_qnet(result.net, out);
    if (!curve.empty()) dqn::save_reward_curve(result, cfg.curve_window, curve);
    double first = 0.0, last = 0.0;
    const int n = static_cast<int>(result.episode_returns.size());
    const int w = std::min(1000, n);
    for (int i = 0; i < w; ++i) {
        first += result.episode_returns[i] / w;
        last += result.episode_returns[n - 1 - i] / w;
    }
    std::cout << "mean return first-" << w << " " << first << ", last-" << w << " " << last
              << ", weights in " << out << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    const run::RunConfig config = run::load_run_config(config_path);
    fs::create_directories(out_dir);
    // Config snapshot first so failed runs are still reproducible.
    run::save_run_config(config, (fs::path(out_dir) / "config.json").string());
    const run::EpisodeMetrics metrics = run::run_episode(config);
    run::write_metrics_csv(metrics, (fs::path(out_dir) / "metrics.csv").string());
    run::write_timing_csv(metrics, (fs::path(out_dir) / "timing.csv").string());
    run::write_summary_csv(metrics, (fs::path(out_dir) / "summary.csv").string());
    if (!metrics.records.empty())
        run::write_timing_report_csv(run::timing_report(metrics),
                                     (fs::path(out_dir) / "timing_report.csv").string());
    if (metrics.aborted) {
        std::ofstream err_out((fs::path(out_dir) / "error.json").string());
        json err;
        err["error"] = metrics.abort_reason;
        err["operation"] = "run";
        err_out << err.dump(2) << "\n";
        return fail("run", "episode aborted: " + metrics.abort_reason);
    }
    std::cout << "success=" << metrics.success << " collision=" << metrics.collision
              << " steps=" << metrics.steps << " time_to_goal=" << metrics.time_to_goal
              << "\n";
    return 0;
}

int cmd_benchmark(const std::string& map_file, int trials, std::uint64_t seed,
                  const std::vector<double>& start, const std::vector<double>& goal,
                  const std::string& dqn_ckpt, const std::string& out) {
    const sim::WorldMap map = sim::load_map(map_file);
    std::optional<dqn::QNetwork> qnet;
    if (!dqn_ckpt.empty()) qnet = dqn::load_qnet(dqn_ckpt);
    const auto rows = run::benchmark_planners(
        map, {start.at(0), start.at(1)}, {goal.at(0), goal.at(1)}, trials, seed,
        qnet ? &*qnet : nullptr);
    run::write_benchmark_csv(rows, out);
    for (const auto& r : rows)
        std::cout << r.planner << ": length " << r.mean_length << " +- " << r.std_length
                  << ", time " << r.mean_time_ms << " ms, success " << r.success_rate
                  << "\n";
    return 0;
}

int cmd_plot(const std::string& input, const std::string& out, std::string kind) {
    const svg::CsvTable table = svg::read_csv(input);
    if (kind == "auto") {
        if (table.column_index("dist_to_goal") >= 0) kind = "distance";
        else if (table.column_index("mean_return") >= 0) kind = "reward";
        else if (table.column_index("train_mse") >= 0) kind = "loss";
        else if (table.column_index("mean_s") >= 0) kind = "timing";
        else return fail("plot", "cannot infer plot kind from columns of " + input);
    }
    std::vector<svg::Series> series;
    svg::ChartOptions opt;
    if (kind == "distance") {
        const auto steps = table.column("step");
        const auto robots = table.column("robot");
        const auto dist = table.column("dist_to_goal");
        int max_robot = 0;
        for (const double r : robots) max_robot = std::max(max_robot, static_cast<int>(r));
        for (int r = 0; r <= max_robot; ++r) {
            svg::Series s;
            s.label = "robot " + std::to_string(r);
            for (std::size_t i = 0; i < steps.size(); ++i) {
                if (static_cast<int>(robots[i]) != r) continue;
                s.x.push_back(steps[i]);
                s.y.push_back(dist[i]);
            }
            series.push_back(std::move(s));
        }
        opt.title = "Distance to goal";
        opt.x_label = "timestep";
        opt.y_label = "distance (m)";
    } else if (kind == "reward") {
        svg::Series s;
        s.label = "mean return";
        s.x = table.column("episode");
        s.y = table.column("mean_return");
        series.push_back(std::move(s));
        opt.title = "Training reward";
        opt.x_label = "episode";
        opt.y_label = "mean return";
    } else if (kind == "loss") {
        svg::Series tr, va;
        tr.label = "train";
        tr.x = table.column("epoch");
        tr.y = table.column("train_mse");
        va.label = "validation";
        va.x = tr.x;
        va.y = table.column("val_mse");
        series.push_back(std::move(tr));
        series.push_back(std::move(va));
        opt.title = "Training loss";
        opt.x_label = "epoch";
        opt.y_label = "MSE";
    } else if (kind == "timing") {
        const auto means = table.column("mean_s");
        svg::Series s;
        s.label = "mean time";
        for (std::size_t i = 0; i < means.size(); ++i) {
            s.x.push_back(static_cast<double>(i));
            s.y.push_back(means[i]);
        }
        series.push_back(std::move(s));
        opt.title = "Component timing";
        opt.x_label = "component index";
        opt.y_label = "seconds";
    } else {
        return fail("plot", "unknown plot kind: " + kind);
    }
    svg::write_line_chart(series, opt, out);
    std::cout << "wrote " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot navigation stack: simulation, training and evaluation"};
    app.require_subcommand(1);

    // gen-maps
    auto* gen = app.add_subcommand("gen-maps", "Generate random world maps");
    int gen_count = 4, gen_cells = 6, gen_landmarks = 12;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "maps";
    bool gen_walls = false;
    gen->add_option("--count", gen_count, "Number of maps");
    gen->add_option("--seed", gen_seed, "Base seed");
    gen->add_option("--out-dir", gen_out, "Output directory");
    gen->add_option("--obstacle-cells", gen_cells, "Blocked cells per map");
    gen->add_option("--landmarks", gen_landmarks, "Feature landmarks per map");
    gen->add_flag("--walls", gen_walls, "Include short wall segments");

    // collect-rnn-data
    auto* col = app.add_subcommand("collect-rnn-data",
                                   "Drive a robot and record covariance training data");
    std::vector<std::string> col_maps;
    std::string col_sensor = "lidar", col_out = "rnn_data.bin";
    int col_steps = 2000, col_seq = 25;
    std::uint64_t col_seed = 0;
    col->add_option("--maps", col_maps, "Map files")->required()->expected(-1);
    col->add_option("--sensor", col_sensor, "lidar or features");
    col->add_option("--steps", col_steps, "Timesteps per map");
    col->add_option("--seed", col_seed, "Seed");
    col->add_option("--seq-len", col_seq, "Training sequence length");
    col->add_option("--out", col_out, "Output dataset file");

    // train-rnn
    auto* trn = app.add_subcommand("train-rnn", "Train the covariance predictor");
    std::vector<std::string> trn_data;
    int trn_epochs = 500, trn_hidden = 32;
    double trn_lr = 2e-3;
    std::uint64_t trn_seed = 0;
    std::string trn_out = "rnn.ckpt", trn_curve;
    trn->add_option("--data", trn_data, "Dataset files")->required()->expected(-1);
    trn->add_option("--epochs", trn_epochs, "Epochs");
    trn->add_option("--lr", trn_lr, "Learning rate");
    trn->add_option("--hidden", trn_hidden, "Hidden width");
    trn->add_option("--seed", trn_seed, "Seed");
    trn->add_option("--out", trn_out, "Weights checkpoint");
    trn->add_option("--curve", trn_curve, "Loss-curve CSV");

    // train-dqn
    auto* tdq = app.add_subcommand("train-dqn", "Train the grid planner");
    int tdq_robots = 2, tdq_episodes = 12000, tdq_hidden = 96, tdq_cells = 6;
    std::uint64_t tdq_seed = 0;
    std::string tdq_out = "dqn.ckpt", tdq_curve;
    bool tdq_walls = false;
    tdq->add_option("--robots", tdq_robots, "Number of robots");
    tdq->add_option("--episodes", tdq_episodes, "Training episodes");
    tdq->add_option("--seed", tdq_seed, "Seed");
    tdq->add_option("--hidden", tdq_hidden, "Hidden width");
    tdq->add_option("--obstacle-cells", tdq_cells, "Blocked cells per episode");
    tdq->add_flag("--walls", tdq_walls, "Wall-style obstacles");
    tdq->add_option("--out", tdq_out, "Weights checkpoint");
    tdq->add_option("--curve", tdq_curve, "Reward-curve CSV");

    // run
    auto* runc = app.add_subcommand("run", "Run one episode from a config file");
    std::string run_config, run_out = "run_out";
    runc->add_option("--config", run_config, "Run config JSON")->required();
    runc->add_option("--out-dir", run_out, "Run directory");

    // benchmark
    auto* ben = app.add_subcommand("benchmark", "Compare global planners on a map");
    std::string ben_map, ben_dqn, ben_out = "benchmark.csv";
    int ben_trials = 100;
    std::uint64_t ben_seed = 0;
    std::vector<double> ben_start{0.5, 0.5}, ben_goal{9.5, 9.5};
    ben->add_option("--map", ben_map, "Map file")->required();
    ben->add_option("--trials", ben_trials, "Trials");
    ben->add_option("--seed", ben_seed, "Seed");
    ben->add_option("--start", ben_start, "Start x y")->expected(2);
    ben->add_option("--goal", ben_goal, "Goal x y")->expected(2);
    ben->add_option("--dqn", ben_dqn, "Optional Q-network checkpoint");
    ben->add_option("--out", ben_out, "Output CSV");

    // plot
    auto* plt = app.add_subcommand("plot", "Render a CSV as an SVG chart");
    std::string plt_in, plt_out = "plot.svg", plt_kind = "auto";
    plt->add_option("--input", plt_in, "Input CSV")->required();
    plt->add_option("--out", plt_out, "Output SVG");
    plt->add_option("--kind", plt_kind, "distance | reward | loss | timing | auto");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_maps(gen_count, gen_seed, gen_out, gen_cells, gen_landmarks,
                                gen_walls);
        if (col->parsed())
            return cmd_collect(col_maps, col_sensor, col_steps, col_seed, col_seq, col_out);
        if (trn->parsed())
            return cmd_train_rnn(trn_data, trn_epochs, trn_lr, trn_hidden, trn_seed,
                                 trn_out, trn_curve);
        if (tdq->parsed())
            return cmd_train_dqn(tdq_robots, tdq_episodes, tdq_seed, tdq_out, tdq_curve,
                                 tdq_hidden, tdq_cells, tdq_walls);
        if (runc->parsed()) return cmd_run(run_config, run_out);
        if (ben->parsed())
            return cmd_benchmark(ben_map, ben_trials, ben_seed, ben_start, ben_goal,
                                 ben_dqn, ben_out);
        if (plt->parsed()) return cmd_plot(plt_in, plt_out, plt_kind);
    } catch (const std::exception& e) {
        return fail(app.get_subcommands().empty() ? "snav"
                                                  : app.get_subcommands()[0]->get_name(),
                    e.what());
    }
    return fail("snav", "no subcommand");
}
