#pragma once

#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace mtdc::mmc {

using Eigen::Vector2d;
using Eigen::Vector3d;

struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
};

/// Arm-aggregated converter on an ac per-unit base (peak phase voltage, time in s).
/// Reactances are given in pu and converted with l = X / omega.
struct MmcParams {
    double r_a = 0.003;          // arm resistance, pu
    double x_a = 0.15;           // arm reactance, pu
    double r_f = 0.006;          // transformer resistance, pu
    double x_f = 0.18;           // transformer reactance, pu
    int n_submodules = 200;
    double c_i = 5e-3;           // submodule capacitance, F
    double z_base_ac = 121.0;    // ohm, V_ac^2 / S
    double v_dc = 400.0 / (220.0 * std::numbers::sqrt2 / std::numbers::sqrt3);  // dc pole-to-pole on the ac peak base
    double v_grid = 1.0;         // grid voltage magnitude (d axis)
    double omega = 2.0 * std::numbers::pi * 50.0;
    double w_ref_per_unit = 1.0; // energy reference as a multiple of w_nominal()

    PiGains grid;
    PiGains circulating;
    PiGains zero;
    PiGains energy;

    double l_a() const { return x_a / omega; }
    /// Grid-loop inductance and resistance: half the arm plus the transformer.
    double l_g() const { return (0.5 * x_a + x_f) / omega; }
    double r_g() const { return 0.5 * r_a + r_f; }
    double c_eq() const { return c_i / n_submodules * z_base_ac; }  // pu*s
    /// Zero-sequence energy with every arm capacitor at v_dc.
    double w_nominal() const { return c_eq() * v_dc * v_dc; }
    double w_ref() const { return w_ref_per_unit * w_nominal(); }
};

/// Pole-zero cancelling PI for l di/dt = -r i + u + d: closed loop 1 / (1 + s / (2 pi f)).
PiGains cancelling_pi(double l, double r, double bandwidth_hz);

/// Critically damped energy loop with natural frequency 2 pi f.
PiGains energy_gains(double bandwidth_hz);

/// Defaults: grid current 500 Hz, circulating 300 Hz, zero sequence with a 1.2 ms
/// closed-loop time constant, energy 30 Hz.
MmcParams default_params();

struct MmcState {
    Vector2d i_g = Vector2d::Zero();
    Vector2d i_sig = Vector2d::Zero();
    double i_sig_z = 0.0;
    double w = 0.0;
    Vector2d phi_g = Vector2d::Zero();
    Vector2d phi_sig = Vector2d::Zero();
    double phi_z = 0.0;
    double phi_w = 0.0;

    static constexpr int size = 12;
    Eigen::VectorXd to_vector() const;
    static MmcState from_vector(const Eigen::VectorXd& v);
};

/// J with J (d, q) = (-q, d); multiply by omega for J_omega.
inline Vector2d rotate(const Vector2d& x) { return {-x[1], x[0]}; }

/// Park transform, amplitude invariant. `sign` is +1 for the grid frame (theta = omega t)
/// and -1 for the circulating frame (theta = -2 omega t).
Vector3d dqz_from_abc(const Vector3d& abc, double theta, double sign);
Vector3d abc_from_dqz(const Vector3d& dqz, double theta, double sign);

struct ArmInputs {
    Vector2d e_dq = Vector2d::Zero();
    Vector2d u_sig_dq = Vector2d::Zero();
    double u_sig_z = 0.0;
    Vector2d v_dq = Vector2d::Zero();
};

struct ArmDerivatives {
    Vector2d di_g;
    Vector2d di_sig;
    double di_sig_z;
    double dw;
};

/// dq-frame current and energy dynamics for given converter voltages.
ArmDerivatives arm_to_dq_derivatives(const MmcState& s, const ArmInputs& in, const MmcParams& p);

template <class T>
struct PiOutput {
    T u;
    T dphi;
};

/// u = kp (i_ref - i) + ki phi - d,  dphi/dt = i_ref - i.
template <class T>
PiOutput<T> pi_step(const T& phi, const T& i_ref, const T& i_meas, const T& d, const PiGains& g) {
    const T err = i_ref - i_meas;
    return {T(g.kp * err + g.ki * phi - d), err};
}

struct EnergyOutput {
    double i_ref;
    double dphi_w;
};

/// i_ref = (kpw (w_ref - w) + kiw phi_w + P_d) / (2 u_sig_z). Throws DomainError when
/// |u_sig_z| is below kMinZeroVoltage.
EnergyOutput energy_controller(double w_ref, double w, double phi_w, double p_d, double u_sig_z, const PiGains& g);
inline constexpr double kMinZeroVoltage = 1e-3;

struct Setpoints {
    double p = 0.0;  // active power towards the ac grid, pu
    double q = 0.0;  // reactive current reference on the q axis, pu
};

/// Controller outputs and full state derivative of the closed loop.
struct ClosedLoop {
    ArmInputs inputs;
    Vector2d i_g_ref;
    double i_z_ref;
    double p_d;
    Eigen::VectorXd derivative;
};

ClosedLoop closed_loop(const MmcState& s, const Setpoints& sp, const MmcParams& p);

/// Steady state at zero power: no current, energy at its reference.
MmcState idle_state(const MmcParams& p);

struct PowerStep {
    double t = 0.0;
    double p = 0.0;
};

struct MmcTrace {
    std::vector<double> t;
    std::vector<MmcState> x;
    std::vector<double> i_dc;  // zero-sequence circulating current
    std::vector<double> p_dc;  // 2 u_sig_z i_sig_z
    std::vector<double> p_ac;  // P_d
};

/// Closed-loop RK4 simulation with fixed step dt, sampled every `every` steps.
MmcTrace simulate_mmc(const MmcParams& p, const MmcState& x0, const std::vector<PowerStep>& steps, double t_end,
                      double dt = 1e-6, int every = 10);

struct FirstOrderFit {
    double tau = 0.0;
    double y0 = 0.0;
    double delta = 0.0;
    double rms_residual = 0.0;  // RMS(y - fit) / |delta|
};

/// Fits y(t) = y0 + delta (1 - exp(-(t - t_step) / tau)) on samples with t >= t_step.
/// y0 is the last sample before the step; delta is solved by least squares for each tau.
FirstOrderFit fit_first_order(const std::vector<double>& t, const std::vector<double>& y, double t_step,
                              double tau_min = 1e-5, double tau_max = 0.1);

inline constexpr double kReductionResidualMax = 0.10;

struct StepExperiment {
    double p_step = 0.0;
    FirstOrderFit fit;
    double i_dc_final = 0.0;
    double w_deviation_max = 0.0;  // max |w - w_ref| / w_ref over the run
    MmcTrace trace;
};

/// Power step 0 -> p_step at t_step, window `window` after the step.
StepExperiment step_experiment(const MmcParams& p, double p_step, double t_step = 5e-3, double window = 40e-3,
                               double dt = 1e-6);

} // namespace mtdc::mmc
