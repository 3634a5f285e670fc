#ifndef SNAV_SMPC_HPP
#define SNAV_SMPC_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "snav/chance.hpp"
#include "snav/dynamics.hpp"
#include "snav/obstacle.hpp"
#include "snav/qp.hpp"
#include "snav/riccati.hpp"

namespace snav::smpc {

/// Mean states and covariances over the prediction horizon, indices
/// k .. k+N+1. Covariances are the planar position blocks used by the
/// chance constraints.
struct BeliefSequence {
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::Matrix2d> covariances;

    static BeliefSequence constant(const Eigen::Matrix2d& sigma, int length);
    static BeliefSequence zero(int length) {
        return constant(Eigen::Matrix2d::Zero(), length);
    }
    int length() const { return static_cast<int>(covariances.size()); }
};

enum class SolveStatus { Optimal, Feasible, Infeasible, IterationLimit };

struct SmpcParams {
    int horizon = 8;
    Eigen::MatrixXd Q, R, P;
    double robot_radius = 0.3;
    bool per_timestep_binaries = false;
    int assignment_cap = 10000;
    /// Stop trying further binary assignments once a feasible solution
    /// exists and this many candidates have been solved (anytime behavior
    /// for the closed loop; leave at the default for exhaustive search).
    int candidate_limit = 1 << 30;
    /// Hard cap on candidates solved even without a feasible one (the
    /// least-violating candidate so far is returned). Heuristic ordering
    /// makes the first candidates the most promising.
    int attempt_limit = 1 << 30;
    int sqp_max_passes = 5;
    double qp_tol = 1e-9;
    double sqp_tol = 1e-6;
    double feas_tol = 1e-6;
    double objective_tol = 1e-8;
    // Ablation knobs: ignore_uncertainty forces c = 0 (plain MPC); a
    // non-negative fixed_margin replaces the chance margin with a constant
    // inflation (naive stochastic MPC).
    bool ignore_uncertainty = false;
    double fixed_margin = -1.0;
};

struct SmpcProblem {
    dyn::DynamicsModel model;
    SmpcParams params;
    /// Reference states for indices 1..N; the last entry is held if the
    /// list is shorter than the horizon.
    std::vector<Eigen::VectorXd> reference;
    std::vector<Obstacle> obstacles;
    BeliefSequence belief;

    void validate() const;
};

/// One binary edge selection: a bitmask over a polygon's edges (bit i set
/// means line constraint i is enforced). Circles carry no binaries and the
/// mask is 0. In shared mode there is one mask per obstacle; in
/// per-timestep mode the masks are laid out obstacle-major:
/// mask[j * N + k].
using BinaryAssignment = std::vector<unsigned>;

struct SmpcSolution {
    std::vector<Eigen::VectorXd> states;    // x_{k+1} .. x_{k+N}
    std::vector<Eigen::VectorXd> controls;  // u_k .. u_{k+N-1}
    BinaryAssignment binaries;
    double objective = 0.0;
    SolveStatus status = SolveStatus::Infeasible;
    double max_violation = 0.0;
    int assignments_tried = 0;
    int sqp_passes = 0;
    int qp_iterations = 0;
    bool heuristic_fallback = false;
    /// Conservative joint risk bound: sum of delta_j over active obstacles.
    double joint_risk_bound = 0.0;
};

struct AssignmentEnumeration {
    std::vector<BinaryAssignment> assignments;
    bool truncated = false;  // cap exceeded; caller should fall back
};

/// All binary assignments satisfying the per-obstacle coverage constraint
/// (at least one enforced edge per polygon obstacle). Shared mode yields
/// prod_j (2^{E_j} - 1) assignments; per-timestep mode raises each factor
/// to the N-th power. Enumeration stops at `cap`.
AssignmentEnumeration enumerate_binary_assignments(const std::vector<Obstacle>& obstacles,
                                                   int horizon,
                                                   bool per_timestep = false,
                                                   int cap = 10000);

/// Chance-constrained solve of the full problem: SQP over re-linearized
/// dynamics and circle constraints, outer enumeration over polygon edge
/// binaries, elastic inner QPs.
SmpcSolution solve(const SmpcProblem& problem, const dyn::RobotState& x0,
                   const std::vector<Eigen::VectorXd>* warm_start = nullptr);

/// Independent re-evaluation of every constraint of `solution` against the
/// problem's exact geometry; returns the maximum violation (<= 0 when
/// feasible). Used by tests and by solve() itself to grade candidates.
double max_constraint_violation(const SmpcProblem& problem, const dyn::RobotState& x0,
                                const SmpcSolution& solution);

/// True (non-linearized) objective of a control sequence rolled out through
/// the model from x0.
double rollout_objective(const SmpcProblem& problem, const dyn::RobotState& x0,
                         const std::vector<Eigen::VectorXd>& controls);

}  // namespace snav::smpc

#endif
