#include "snav/smpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace snav::smpc {

BeliefSequence BeliefSequence::constant(const Eigen::Matrix2d& sigma, int length) {
    BeliefSequence b;
    b.covariances.assign(length, sigma);
    return b;
}

void SmpcProblem::validate() const {
    if (params.horizon < 1) throw std::invalid_argument("SmpcProblem: horizon must be >= 1");
    const int n = model.state_dim();
    const int m = model.control_dim();
    if (params.Q.rows() != n || params.P.rows() != n || params.R.rows() != m)
        throw std::invalid_argument("SmpcProblem: weight dimension mismatch");
    if (reference.empty())
        throw std::invalid_argument("SmpcProblem: reference must not be empty");
    for (const auto& o : obstacles) o.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(0.5 * (params.R + params.R.transpose()));
    if (er.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("SmpcProblem: R must be positive definite");
}

namespace {

Eigen::Matrix2d sigma_at(const BeliefSequence& belief, int k) {
    if (belief.covariances.empty()) return Eigen::Matrix2d::Zero();
    const int idx = std::min<int>(k, belief.length() - 1);
    return belief.covariances[idx];
}

double margin(const SmpcParams& params, const Eigen::Vector2d& a,
              const Eigen::Matrix2d& sigma, double delta) {
    if (params.ignore_uncertainty) return 0.0;
    if (params.fixed_margin >= 0.0) return params.fixed_margin;
    return chance_margin(a, sigma, delta);
}

const Eigen::VectorXd& reference_at(const SmpcProblem& p, int k) {
    const int idx = std::min<int>(k - 1, static_cast<int>(p.reference.size()) - 1);
    return p.reference[idx];
}

std::vector<Eigen::VectorXd> rollout(const SmpcProblem& p, const dyn::RobotState& x0,
                                     const std::vector<Eigen::VectorXd>& controls) {
    std::vector<Eigen::VectorXd> states;
    states.reserve(controls.size());
    dyn::RobotState s = x0;
    for (const auto& u : controls) {
        s = p.model.step(s, dyn::ControlInput{u});
        states.push_back(s.values);
    }
    return states;
}

/// Whether obstacle j constrains the robot at predicted altitude z.
bool obstacle_active(const SmpcProblem& p, const Obstacle& obs, double z) {
    if (p.model.kind == dyn::RobotKind::UGV) return true;
    if (std::isinf(obs.height)) return true;
    return z < obs.height + p.params.robot_radius;
}

unsigned mask_for(const BinaryAssignment& assignment, int obstacle_idx, int k, int N,
                  bool per_timestep) {
    if (assignment.empty()) return 0;
    return per_timestep ? assignment[obstacle_idx * N + k - 1] : assignment[obstacle_idx];
}

struct CondensedModel {
    // x_k = d[k] + Gamma[k] * U for k = 1..N
    std::vector<Eigen::VectorXd> d;
    std::vector<Eigen::MatrixXd> Gamma;
};

/// First-order expansion around the iterate (x_hat, u_hat):
///   x_{k+1} ~= f(x_hat, u_hat) + A (x_k - x_hat) + B (u_k - u_hat)
/// condensed into x_k = d[k] + Gamma[k] U over the stacked controls.
CondensedModel condense(const SmpcProblem& p, const dyn::RobotState& x0,
                        const std::vector<Eigen::VectorXd>& traj_guess,
                        const std::vector<Eigen::VectorXd>& ctrl_guess) {
    const int N = p.params.horizon;
    const int n = p.model.state_dim();
    const int m = p.model.control_dim();
    CondensedModel cm;
    cm.d.resize(N + 1);
    cm.Gamma.resize(N + 1);
    cm.d[0] = x0.values;
    cm.Gamma[0] = Eigen::MatrixXd::Zero(n, N * m);
    dyn::RobotState lin_point = x0;
    for (int k = 0; k < N; ++k) {
        if (k > 0 && !traj_guess.empty()) {
            lin_point.values = traj_guess[std::min<int>(k - 1, traj_guess.size() - 1)];
        }
        const Eigen::VectorXd u_hat = ctrl_guess.empty()
                                          ? Eigen::VectorXd::Zero(m)
                                          : ctrl_guess[std::min<int>(k, ctrl_guess.size() - 1)];
        auto [A, B] = p.model.linearize(lin_point, u_hat);
        const Eigen::VectorXd resid =
            p.model.step(lin_point, dyn::ControlInput{u_hat}).values -
            A * lin_point.values - B * u_hat;
        cm.d[k + 1] = resid + A * cm.d[k];
        cm.Gamma[k + 1] = A * cm.Gamma[k];
        cm.Gamma[k + 1].block(0, k * m, n, m) += B;
    }
    return cm;
}

struct QpRows {
    std::vector<Eigen::RowVectorXd> rows;  // over U only
    std::vector<double> rhs;
    std::vector<bool> elastic;
};

void add_row(QpRows& q, const Eigen::RowVectorXd& row, double rhs, bool elastic) {
    q.rows.push_back(row);
    q.rhs.push_back(rhs);
    q.elastic.push_back(elastic);
}

}  // namespace

AssignmentEnumeration enumerate_binary_assignments(const std::vector<Obstacle>& obstacles,
                                                   int horizon, bool per_timestep,
                                                   int cap) {
    AssignmentEnumeration out;
    // Slots: one per polygon obstacle (shared) or per polygon obstacle and
    // timestep. Circles contribute a fixed zero mask.
    std::vector<int> slot_sizes;  // number of nonempty subsets per slot
    std::vector<int> edge_counts;
    const int slots_per_obstacle = per_timestep ? horizon : 1;
    for (const auto& o : obstacles) {
        const int e = o.is_circle() ? 0 : o.polygon().edge_count();
        for (int s = 0; s < slots_per_obstacle; ++s) {
            edge_counts.push_back(e);
            slot_sizes.push_back(e == 0 ? 1 : (1 << e) - 1);
        }
    }
    double total = 1.0;
    for (int s : slot_sizes) total *= s;
    if (total > static_cast<double>(cap)) {
        out.truncated = true;
        return out;
    }
    // Odometer over slots; subsets enumerated in increasing-popcount order
    // so cheaper (fewer-edge) assignments come first.
    std::vector<std::vector<unsigned>> slot_masks(slot_sizes.size());
    for (size_t s = 0; s < slot_sizes.size(); ++s) {
        if (edge_counts[s] == 0) {
            slot_masks[s] = {0u};
            continue;
        }
        for (unsigned msk = 1; msk < (1u << edge_counts[s]); ++msk)
            slot_masks[s].push_back(msk);
        std::stable_sort(slot_masks[s].begin(), slot_masks[s].end(),
                         [](unsigned a, unsigned b) {
                             return std::popcount(a) < std::popcount(b);
                         });
    }
    std::vector<size_t> idx(slot_sizes.size(), 0);
    while (true) {
        BinaryAssignment a(slot_sizes.size());
        for (size_t s = 0; s < idx.size(); ++s) a[s] = slot_masks[s][idx[s]];
        out.assignments.push_back(std::move(a));
        size_t s = 0;
        for (; s < idx.size(); ++s) {
            if (++idx[s] < slot_masks[s].size()) break;
            idx[s] = 0;
        }
        if (s == idx.size()) break;
    }
    return out;
}

double rollout_objective(const SmpcProblem& p, const dyn::RobotState& x0,
                         const std::vector<Eigen::VectorXd>& controls) {
    const int N = p.params.horizon;
    const auto states = rollout(p, x0, controls);
    double obj = 0.0;
    for (int k = 1; k <= N; ++k) {
        const Eigen::VectorXd e = states[k - 1] - reference_at(p, k);
        const Eigen::MatrixXd& W = (k == N) ? p.params.P : p.params.Q;
        obj += e.dot(W * e);
        obj += controls[k - 1].dot(p.params.R * controls[k - 1]);
    }
    return obj;
}

double max_constraint_violation(const SmpcProblem& p, const dyn::RobotState& x0,
                                const SmpcSolution& sol) {
    const int N = p.params.horizon;
    const int xi = p.model.x_index();
    const int yi = p.model.y_index();
    const int zi = p.model.z_index();
    double worst = 0.0;
    for (int k = 1; k <= N; ++k) {
        const Eigen::VectorXd& x = sol.states[k - 1];
        const Eigen::VectorXd& u = sol.controls[k - 1];
        for (int c = 0; c < x.size(); ++c) {
            if (std::isfinite(p.model.state_limit(c)))
                worst = std::max(worst, std::abs(x(c)) - p.model.state_limit(c));
        }
        for (int c = 0; c < u.size(); ++c) {
            if (std::isfinite(p.model.control_limit(c)))
                worst = std::max(worst, std::abs(u(c)) - p.model.control_limit(c));
        }
        const Eigen::Vector2d pos(x(xi), x(yi));
        const double z = zi >= 0 ? x(zi) : 0.0;
        const Eigen::Matrix2d sigma = sigma_at(p.belief, k);
        for (size_t j = 0; j < p.obstacles.size(); ++j) {
            const Obstacle& obs = p.obstacles[j];
            if (!obstacle_active(p, obs, z)) continue;
            if (obs.is_circle()) {
                Eigen::Vector2d a = pos - obs.circle().center;
                const double dist = a.norm();
                a = dist > 1e-12 ? Eigen::Vector2d(a / dist) : Eigen::Vector2d(1.0, 0.0);
                const double c = margin(p.params, a, sigma, obs.risk_delta);
                worst = std::max(worst,
                                 circular_constraint_residual(
                                     pos.x(), pos.y(), obs.circle(),
                                     p.params.robot_radius + obs.circle().radius, c));
            } else {
                const unsigned msk = mask_for(sol.binaries, static_cast<int>(j), k, N,
                                              p.params.per_timestep_binaries);
                const ConvexPolygon& poly = obs.polygon();
                for (int e = 0; e < poly.edge_count(); ++e) {
                    if (!(msk & (1u << e))) continue;
                    const Eigen::Vector2d n = poly.outward_normal(e);
                    const double sd = n.dot(pos - poly.edge_start(e));
                    const double c = margin(p.params, n, sigma, obs.risk_delta);
                    worst = std::max(worst, (p.params.robot_radius + c) - sd);
                }
            }
        }
    }
    return worst;
}

namespace {

struct SqpOutcome {
    std::vector<Eigen::VectorXd> controls;
    std::vector<Eigen::VectorXd> states;
    bool converged = false;
    bool diverged = false;
    int passes = 0;
    int qp_iterations = 0;
};

SqpOutcome sqp_solve(const SmpcProblem& p, const dyn::RobotState& x0,
                     const BinaryAssignment& assignment,
                     const std::vector<Eigen::VectorXd>& warm) {
    const int N = p.params.horizon;
    const int n = p.model.state_dim();
    const int m = p.model.control_dim();
    const int nu = N * m;
    const int xi = p.model.x_index();
    const int yi = p.model.y_index();
    const int zi = p.model.z_index();

    SqpOutcome out;
    out.controls = warm;
    out.states = rollout(p, x0, out.controls);

    const double slack_lin = 1e5;
    const double slack_quad = 1e3;

    for (int pass = 0; pass < p.params.sqp_max_passes; ++pass) {
        out.passes = pass + 1;
        const CondensedModel cm = condense(p, x0, out.states, out.controls);

        // Quadratic cost over U.
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nu, nu);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(nu);
        for (int k = 1; k <= N; ++k) {
            const Eigen::MatrixXd& W = (k == N) ? p.params.P : p.params.Q;
            H.noalias() += 2.0 * cm.Gamma[k].transpose() * W * cm.Gamma[k];
            g.noalias() += 2.0 * cm.Gamma[k].transpose() * W * (cm.d[k] - reference_at(p, k));
        }
        for (int k = 0; k < N; ++k)
            H.block(k * m, k * m, m, m) += 2.0 * p.params.R;

        QpRows q;
        // Control box (hard; always feasible at U = 0).
        for (int k = 0; k < N; ++k) {
            for (int c = 0; c < m; ++c) {
                if (!std::isfinite(p.model.control_limit(c))) continue;
                Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nu);
                row(k * m + c) = 1.0;
                add_row(q, row, p.model.control_limit(c), false);
                add_row(q, -row, p.model.control_limit(c), false);
            }
        }
        // State box (elastic).
        for (int k = 1; k <= N; ++k) {
            for (int c = 0; c < n; ++c) {
                if (!std::isfinite(p.model.state_limit(c))) continue;
                const Eigen::RowVectorXd row = cm.Gamma[k].row(c);
                add_row(q, row, p.model.state_limit(c) - cm.d[k](c), true);
                add_row(q, -row, p.model.state_limit(c) + cm.d[k](c), true);
            }
        }
        // Obstacle rows (elastic), linearized at the current iterate.
        for (int k = 1; k <= N; ++k) {
            const Eigen::VectorXd& xh = out.states[k - 1];
            const Eigen::Vector2d ph(xh(xi), xh(yi));
            const double zh = zi >= 0 ? xh(zi) : 0.0;
            const Eigen::Matrix2d sigma = sigma_at(p.belief, k);
            Eigen::MatrixXd Pk(2, nu);
            Pk.row(0) = cm.Gamma[k].row(xi);
            Pk.row(1) = cm.Gamma[k].row(yi);
            const Eigen::Vector2d p0(cm.d[k](xi), cm.d[k](yi));
            for (size_t j = 0; j < p.obstacles.size(); ++j) {
                const Obstacle& obs = p.obstacles[j];
                if (!obstacle_active(p, obs, zh)) continue;
                if (obs.is_circle()) {
                    Eigen::Vector2d a = ph - obs.circle().center;
                    const double dist = a.norm();
                    a = dist > 1e-9 ? Eigen::Vector2d(a / dist) : Eigen::Vector2d(1.0, 0.0);
                    const double c = margin(p.params, a, sigma, obs.risk_delta);
                    const double rhs = a.dot(obs.circle().center) +
                                       p.params.robot_radius + obs.circle().radius + c;
                    add_row(q, Eigen::RowVectorXd(-(a.transpose() * Pk)),
                            a.dot(p0) - rhs, true);
                } else {
                    const unsigned msk = mask_for(assignment, static_cast<int>(j), k, N,
                                                  p.params.per_timestep_binaries);
                    const ConvexPolygon& poly = obs.polygon();
                    for (int e = 0; e < poly.edge_count(); ++e) {
                        if (!(msk & (1u << e))) continue;
                        const Eigen::Vector2d nrm = poly.outward_normal(e);
                        const double c = margin(p.params, nrm, sigma, obs.risk_delta);
                        const double rhs =
                            nrm.dot(poly.edge_start(e)) + p.params.robot_radius + c;
                        add_row(q, Eigen::RowVectorXd(-(nrm.transpose() * Pk)),
                                nrm.dot(p0) - rhs, true);
                    }
                }
            }
        }

        // Assemble with one slack per elastic row.
        int ne = 0;
        for (bool e : q.elastic) ne += e ? 1 : 0;
        const int nz = nu + ne;
        const int nrows = static_cast<int>(q.rows.size()) + ne;
        Eigen::MatrixXd Hx = Eigen::MatrixXd::Zero(nz, nz);
        Hx.topLeftCorner(nu, nu) = H;
        Hx.bottomRightCorner(ne, ne) =
            slack_quad * Eigen::MatrixXd::Identity(ne, ne);
        Eigen::VectorXd gx = Eigen::VectorXd::Zero(nz);
        gx.head(nu) = g;
        gx.tail(ne).setConstant(slack_lin);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nrows, nz);
        Eigen::VectorXd h(nrows);
        int r = 0, s = 0;
        for (size_t i = 0; i < q.rows.size(); ++i) {
            G.row(r).head(nu) = q.rows[i];
            if (q.elastic[i]) G(r, nu + s) = -1.0;
            h(r) = q.rhs[i];
            ++r;
            if (q.elastic[i]) ++s;
        }
        for (int i = 0; i < ne; ++i) {
            G(r, nu + i) = -1.0;
            h(r) = 0.0;
            ++r;
        }

        const QpResult qp = solve_qp(Hx, gx, G, h, p.params.qp_tol, 100);
        out.qp_iterations += qp.iterations;
        if (!qp.x.allFinite()) {
            out.diverged = true;
            return out;
        }

        double shift = 0.0;
        std::vector<Eigen::VectorXd> new_controls(N);
        for (int k = 0; k < N; ++k) {
            new_controls[k] = qp.x.segment(k * m, m);
            shift = std::max(shift,
                             (new_controls[k] - out.controls[k]).lpNorm<Eigen::Infinity>());
        }
        out.controls = std::move(new_controls);
        out.states = rollout(p, x0, out.controls);
        if (shift < p.params.sqp_tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// Cold-start control seeds for the SQP. A zero-control iterate is a
/// stationary point for the unicycle (heading changes have no first-order
/// position effect at v = 0), so the unicycle gets two steer-then-drive
/// rollouts toward the first reference point: a distance-scaled one for
/// nearby references and a saturated one that escapes the slow
/// turn-in-place local minimum when the reference is further out.
std::vector<std::vector<Eigen::VectorXd>> cold_start_seeds(const SmpcProblem& p,
                                                           const dyn::RobotState& x0) {
    const int N = p.params.horizon;
    const int m = p.model.control_dim();
    std::vector<std::vector<Eigen::VectorXd>> seeds;
    if (p.model.kind != dyn::RobotKind::UGV) {
        seeds.emplace_back(N, Eigen::VectorXd::Zero(m));
        return seeds;
    }
    for (const bool full_speed : {false, true}) {
        std::vector<Eigen::VectorXd> controls(N, Eigen::VectorXd::Zero(m));
        dyn::RobotState sim = x0;
        const Eigen::VectorXd ref = reference_at(p, 1);
        for (int k = 0; k < N; ++k) {
            const double dx = ref(0) - sim.values(0);
            const double dy = ref(1) - sim.values(1);
            const double dist = std::hypot(dx, dy);
            const double err =
                dist > 1e-9 ? dyn::normalize_angle(std::atan2(dy, dx) - sim.values(2))
                            : 0.0;
            Eigen::VectorXd u(2);
            u(1) = std::clamp(4.0 * err, -p.model.control_limit(1),
                              p.model.control_limit(1));
            u(0) = (full_speed ? p.model.control_limit(0)
                               : std::clamp(dist, 0.0, p.model.control_limit(0))) *
                   std::max(0.0, std::cos(err));
            controls[k] = u;
            sim = p.model.step(sim, dyn::ControlInput{u});
        }
        seeds.push_back(std::move(controls));
    }
    return seeds;
}

/// Heuristic: for each polygon slot pick the single edge with the largest
/// signed clearance from the reference position (the edge the robot most
/// naturally stays outside of).
BinaryAssignment nearest_edge_assignment(const SmpcProblem& p, const dyn::RobotState& x0) {
    const int N = p.params.horizon;
    const int slots_per = p.params.per_timestep_binaries ? N : 1;
    BinaryAssignment a;
    const Eigen::Vector2d pos(x0.values(p.model.x_index()), x0.values(p.model.y_index()));
    for (const auto& obs : p.obstacles) {
        for (int s = 0; s < slots_per; ++s) {
            if (obs.is_circle()) {
                a.push_back(0);
                continue;
            }
            const ConvexPolygon& poly = obs.polygon();
            int best = 0;
            double best_sd = -std::numeric_limits<double>::infinity();
            for (int e = 0; e < poly.edge_count(); ++e) {
                const double sd = poly.outward_normal(e).dot(pos - poly.edge_start(e));
                if (sd > best_sd) {
                    best_sd = sd;
                    best = e;
                }
            }
            a.push_back(1u << best);
        }
    }
    return a;
}

/// True when every per-slot mask of `a` is a superset of the corresponding
/// mask of `b` (then a's feasible set is contained in b's).
bool dominated_by(const BinaryAssignment& a, const BinaryAssignment& b) {
    for (size_t s = 0; s < a.size(); ++s)
        if ((a[s] & b[s]) != b[s]) return false;
    return true;
}

}  // namespace

SmpcSolution solve(const SmpcProblem& p, const dyn::RobotState& x0,
                   const std::vector<Eigen::VectorXd>* warm_start) {
    p.validate();
    if (!x0.values.allFinite())
        throw std::invalid_argument("smpc::solve: initial state must be finite");
    const int N = p.params.horizon;

    AssignmentEnumeration en = enumerate_binary_assignments(
        p.obstacles, N, p.params.per_timestep_binaries, p.params.assignment_cap);
    bool fallback = false;
    if (en.truncated) {
        en.assignments = {nearest_edge_assignment(p, x0)};
        fallback = true;
    }

    // Order candidates by how close the zero-input trajectory already is to
    // satisfying the selected edges (cheap lower-bound heuristic).
    const Eigen::Vector2d pos0(x0.values(p.model.x_index()), x0.values(p.model.y_index()));
    auto heuristic = [&](const BinaryAssignment& a) {
        double score = 0.0;
        int slot = 0;
        const int slots_per = p.params.per_timestep_binaries ? N : 1;
        for (const auto& obs : p.obstacles) {
            for (int s = 0; s < slots_per; ++s, ++slot) {
                if (obs.is_circle()) continue;
                const ConvexPolygon& poly = obs.polygon();
                const unsigned msk = a[slot];
                for (int e = 0; e < poly.edge_count(); ++e) {
                    if (!(msk & (1u << e))) continue;
                    const double sd =
                        poly.outward_normal(e).dot(pos0 - poly.edge_start(e));
                    score += std::max(0.0, p.params.robot_radius - sd);
                    score += 1e-3;  // prefer fewer enforced edges
                }
            }
        }
        return score;
    };
    std::stable_sort(en.assignments.begin(), en.assignments.end(),
                     [&](const BinaryAssignment& a, const BinaryAssignment& b) {
                         return heuristic(a) < heuristic(b);
                     });

    SmpcSolution best;
    best.status = SolveStatus::Infeasible;
    best.heuristic_fallback = fallback;
    double best_violation = std::numeric_limits<double>::infinity();
    bool any_diverged = false;
    std::vector<BinaryAssignment> feasible_masks;

    std::vector<std::vector<Eigen::VectorXd>> seeds;
    if (warm_start)
        seeds.push_back(*warm_start);
    else
        seeds = cold_start_seeds(p, x0);

    for (const auto& assignment : en.assignments) {
        bool skip = false;
        for (const auto& fm : feasible_masks) {
            if (!assignment.empty() && dominated_by(assignment, fm)) {
                skip = true;
                break;
            }
        }
        if (skip) continue;

        best.assignments_tried++;
        bool pushed_mask = false;
        for (const auto& seed : seeds) {
            SqpOutcome sq = sqp_solve(p, x0, assignment, seed);
            best.qp_iterations += sq.qp_iterations;
            if (sq.diverged) {
                any_diverged = true;
                continue;
            }
            SmpcSolution cand;
            cand.states = sq.states;
            cand.controls = sq.controls;
            cand.binaries = assignment;
            cand.objective = rollout_objective(p, x0, sq.controls);
            cand.max_violation = max_constraint_violation(p, x0, cand);
            const bool feasible = cand.max_violation <= p.params.feas_tol;
            if (feasible) {
                if (!pushed_mask) {
                    feasible_masks.push_back(assignment);
                    pushed_mask = true;
                }
                const bool better =
                    best.status == SolveStatus::Infeasible ||
                    best.status == SolveStatus::IterationLimit ||
                    cand.objective < best.objective - p.params.objective_tol;
                if (better) {
                    const SolveStatus st = (sq.converged && !fallback)
                                               ? SolveStatus::Optimal
                                               : SolveStatus::Feasible;
                    const int tried = best.assignments_tried;
                    const int qpit = best.qp_iterations;
                    best = std::move(cand);
                    best.status = st;
                    best.sqp_passes = sq.passes;
                    best.assignments_tried = tried;
                    best.qp_iterations = qpit;
                    best.heuristic_fallback = fallback;
                }
            } else if (best.status == SolveStatus::Infeasible &&
                       cand.max_violation < best_violation) {
                best_violation = cand.max_violation;
                const int tried = best.assignments_tried;
                const int qpit = best.qp_iterations;
                best = std::move(cand);
                best.status = SolveStatus::Infeasible;
                best.sqp_passes = sq.passes;
                best.assignments_tried = tried;
                best.qp_iterations = qpit;
                best.heuristic_fallback = fallback;
            }
        }
        if (!feasible_masks.empty() && best.assignments_tried >= p.params.candidate_limit)
            break;
        if (best.assignments_tried >= p.params.attempt_limit) break;
    }

    if (best.status == SolveStatus::Infeasible && any_diverged)
        best.status = SolveStatus::IterationLimit;
    if (best.states.empty()) {
        // No iterate at all (every SQP diverged); report the zero-control rollout.
        best.controls.assign(N, Eigen::VectorXd::Zero(p.model.control_dim()));
        best.states = rollout(p, x0, best.controls);
        best.objective = rollout_objective(p, x0, best.controls);
        best.status = SolveStatus::IterationLimit;
    }
    for (const auto& obs : p.obstacles) best.joint_risk_bound += obs.risk_delta;
    return best;
}

}  // namespace snav::smpc
