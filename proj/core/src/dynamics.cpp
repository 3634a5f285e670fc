#include "snav/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace snav::dyn {

double normalize_angle(double theta) {
    double t = std::fmod(theta + M_PI, 2.0 * M_PI);
    if (t <= 0.0) t += 2.0 * M_PI;
    return t - M_PI;
}

RobotState step_ugv(const RobotState& state, const ControlInput& u, double dt) {
    if (state.kind != RobotKind::UGV || state.values.size() != kUgvStateDim)
        throw std::invalid_argument("step_ugv: state must be a 3-vector UGV state");
    if (u.values.size() != kUgvControlDim)
        throw std::invalid_argument("step_ugv: control must be [v, omega]");
    const double th = state.values(2);
    const double v = u.values(0);
    const double w = u.values(1);
    RobotState out = state;
    out.values(0) += v * std::cos(th) * dt;
    out.values(1) += v * std::sin(th) * dt;
    out.values(2) = normalize_angle(th + w * dt);
    return out;
}

std::pair<Eigen::Matrix3d, Eigen::Matrix<double, 3, 2>> linearize_ugv(
    const RobotState& state, double dt) {
    if (state.kind != RobotKind::UGV)
        throw std::invalid_argument("linearize_ugv: UGV state required");
    const double th = state.values(2);
    Eigen::Matrix<double, 3, 2> B;
    B << std::cos(th) * dt, 0.0,
         std::sin(th) * dt, 0.0,
         0.0, dt;
    return {Eigen::Matrix3d::Identity(), B};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> uav_continuous_matrices() {
    // Per-axis chains: x: pos->vel->tilt->tilt rate (input u0), same for y
    // with opposite tilt sign, z: pos->vel (input u2). Unit mass/inertia,
    // gravity compensated so zero input is hover.
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(kUavStateDim, kUavStateDim);
    Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(kUavStateDim, kUavControlDim);
    Ac(0, 1) = 1.0;        // x' = vx
    Ac(1, 2) = kGravity;   // vx' = g th1
    Ac(2, 3) = 1.0;        // th1' = w1
    Bc(3, 0) = 1.0;        // w1' = u0
    Ac(4, 5) = 1.0;        // y' = vy
    Ac(5, 6) = -kGravity;  // vy' = -g th2
    Ac(6, 7) = 1.0;        // th2' = w2
    Bc(7, 1) = 1.0;        // w2' = u1
    Ac(8, 9) = 1.0;        // z' = vz
    Bc(9, 2) = 1.0;        // vz' = u2 (thrust offset from hover)
    return {Ac, Bc};
}

RobotState step_uav(const RobotState& state, const ControlInput& u, double dt) {
    if (state.kind != RobotKind::UAV || state.values.size() != kUavStateDim)
        throw std::invalid_argument("step_uav: state must be a 10-vector UAV state");
    if (u.values.size() != kUavControlDim)
        throw std::invalid_argument("step_uav: control must be a 3-vector thrust");
    auto [Ac, Bc] = uav_continuous_matrices();
    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(kUavStateDim, kUavStateDim) + dt * Ac;
    const Eigen::MatrixXd B = dt * Bc;
    RobotState out = state;
    out.values = A * state.values + B * u.values;
    return out;
}

DynamicsModel DynamicsModel::ugv(double dt) {
    if (dt <= 0.0) throw std::invalid_argument("DynamicsModel: dt must be positive");
    DynamicsModel m;
    m.kind = RobotKind::UGV;
    m.dt = dt;
    m.A = Eigen::Matrix3d::Identity();
    m.B.resize(0, 0);
    const double inf = std::numeric_limits<double>::infinity();
    m.state_limit = Eigen::Vector3d(inf, inf, inf);
    m.control_limit = Eigen::Vector2d(1.0, 2.0);
    m.process_noise_var = Eigen::Vector3d(1e-4, 1e-4, 1e-5);
    return m;
}

DynamicsModel DynamicsModel::uav(double dt) {
    if (dt <= 0.0) throw std::invalid_argument("DynamicsModel: dt must be positive");
    DynamicsModel m;
    m.kind = RobotKind::UAV;
    m.dt = dt;
    auto [Ac, Bc] = uav_continuous_matrices();
    m.A = Eigen::MatrixXd::Identity(kUavStateDim, kUavStateDim) + dt * Ac;
    m.B = dt * Bc;
    const double inf = std::numeric_limits<double>::infinity();
    m.state_limit = Eigen::VectorXd::Constant(kUavStateDim, inf);
    m.state_limit(1) = 1.5;                     // vx
    m.state_limit(5) = 1.5;                     // vy
    m.state_limit(9) = 1.5;                     // vz
    m.state_limit(2) = 0.5;                     // th1
    m.state_limit(6) = 0.5;                     // th2
    m.control_limit = Eigen::Vector3d(4.0, 4.0, 4.0);
    m.process_noise_var = Eigen::VectorXd::Constant(kUavStateDim, 0.0);
    m.process_noise_var(0) = 1e-4;
    m.process_noise_var(4) = 1e-4;
    m.process_noise_var(8) = 1e-4;
    return m;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> DynamicsModel::linearize(
    const RobotState& state) const {
    if (kind == RobotKind::UGV) {
        auto [A, B] = linearize_ugv(state, dt);
        return {Eigen::MatrixXd(A), Eigen::MatrixXd(B)};
    }
    return {A, B};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> DynamicsModel::linearize(
    const RobotState& state, const Eigen::VectorXd& control) const {
    auto [Ax, Bx] = linearize(state);
    if (kind == RobotKind::UGV) {
        const double th = state.values(2);
        const double v = control.size() > 0 ? control(0) : 0.0;
        Ax(0, 2) = -v * std::sin(th) * dt;
        Ax(1, 2) = v * std::cos(th) * dt;
    }
    return {Ax, Bx};
}

RobotState DynamicsModel::step(const RobotState& state, const ControlInput& u) const {
    return kind == RobotKind::UGV ? step_ugv(state, u, dt) : step_uav(state, u, dt);
}

}  // namespace snav::dyn
