#ifndef SNAV_DYNAMICS_HPP
#define SNAV_DYNAMICS_HPP

#include <Eigen/Dense>
#include <utility>

namespace snav::dyn {

enum class RobotKind { UGV, UAV };

constexpr int kUgvStateDim = 3;    // [x, y, theta]
constexpr int kUgvControlDim = 2;  // [v, omega]
constexpr int kUavStateDim = 10;   // [x, vx, th1, w1, y, vy, th2, w2, z, vz]
constexpr int kUavControlDim = 3;

constexpr double kGravity = 9.81;

/// Semantic state vector for one robot.
struct RobotState {
    Eigen::VectorXd values;
    RobotKind kind = RobotKind::UGV;

    double x() const { return values(0); }
    double y() const { return kind == RobotKind::UGV ? values(1) : values(4); }
    double z() const { return kind == RobotKind::UAV ? values(8) : 0.0; }
    Eigen::Vector2d position() const { return {x(), y()}; }
};

struct ControlInput {
    Eigen::VectorXd values;
};

/// Wrap an angle into (-pi, pi].
double normalize_angle(double theta);

/// Euler-discretized unicycle step.
RobotState step_ugv(const RobotState& state, const ControlInput& u, double dt);

/// Unicycle coefficient matrices at the given heading: A = I3,
/// B = [[cos(th) dt, 0], [sin(th) dt, 0], [0, dt]].
std::pair<Eigen::Matrix3d, Eigen::Matrix<double, 3, 2>> linearize_ugv(
    const RobotState& state, double dt);

/// Hover-linearized quadrotor step x' = A x + B u (gravity compensated,
/// unit mass and inertia).
RobotState step_uav(const RobotState& state, const ControlInput& u, double dt);

/// Discrete-time model of one robot kind: limits, noise, and the (possibly
/// state-dependent) coefficient matrices.
struct DynamicsModel {
    RobotKind kind = RobotKind::UGV;
    double dt = 0.1;
    Eigen::MatrixXd A;  // constant for UAV; identity for UGV
    Eigen::MatrixXd B;  // UAV only; UGV uses linearize()
    Eigen::VectorXd state_limit;    // component-wise |x| bound, inf allowed
    Eigen::VectorXd control_limit;  // component-wise |u| bound
    Eigen::VectorXd process_noise_var;

    static DynamicsModel ugv(double dt = 0.1);
    static DynamicsModel uav(double dt = 0.1);

    int state_dim() const { return kind == RobotKind::UGV ? kUgvStateDim : kUavStateDim; }
    int control_dim() const { return kind == RobotKind::UGV ? kUgvControlDim : kUavControlDim; }
    int x_index() const { return 0; }
    int y_index() const { return kind == RobotKind::UGV ? 1 : 4; }
    int z_index() const { return kind == RobotKind::UAV ? 8 : -1; }

    /// Coefficient matrices at the given state (UGV: B evaluated at theta).
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(const RobotState& state) const;

    /// Exact discrete Jacobians at a state/control pair. For the UGV this
    /// adds the position-heading coupling (-v sin(th) dt, v cos(th) dt) to
    /// A, which vanishes at v = 0; the UAV model is already linear.
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize(
        const RobotState& state, const Eigen::VectorXd& control) const;

    /// Deterministic step (no process noise).
    RobotState step(const RobotState& state, const ControlInput& u) const;
};

/// Continuous-time quadrotor matrices used to build the discrete model;
/// exposed for the matrix-exponential oracle in tests.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> uav_continuous_matrices();

}  // namespace snav::dyn

#endif
