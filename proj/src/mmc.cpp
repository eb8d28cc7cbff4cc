#include "mtdc/mmc.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mtdc/errors.hpp"

namespace mtdc::mmc {

using Eigen::VectorXd;

PiGains cancelling_pi(double l, double r, double bandwidth_hz) {
    const double wc = 2.0 * std::numbers::pi * bandwidth_hz;
    return {l * wc, r * wc};
}

PiGains energy_gains(double bandwidth_hz) {
    const double wn = 2.0 * std::numbers::pi * bandwidth_hz;
    return {2.0 * wn, wn * wn};
}

MmcParams default_params() {
    MmcParams p;
    p.grid = cancelling_pi(p.l_g(), p.r_g(), 500.0);
    p.circulating = cancelling_pi(p.l_a(), p.r_a, 300.0);
    p.zero = cancelling_pi(p.l_a(), p.r_a, 1.0 / (2.0 * std::numbers::pi * 1.2e-3));
    p.energy = energy_gains(30.0);
    return p;
}

VectorXd MmcState::to_vector() const {
    VectorXd v(size);
    v << i_g, i_sig, i_sig_z, w, phi_g, phi_sig, phi_z, phi_w;
    return v;
}

MmcState MmcState::from_vector(const VectorXd& v) {
    MmcState s;
    s.i_g = v.segment<2>(0);
    s.i_sig = v.segment<2>(2);
    s.i_sig_z = v[4];
    s.w = v[5];
    s.phi_g = v.segment<2>(6);
    s.phi_sig = v.segment<2>(8);
    s.phi_z = v[10];
    s.phi_w = v[11];
    return s;
}

Vector3d dqz_from_abc(const Vector3d& abc, double theta, double sign) {
    Vector3d out = Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
        const double th = theta - 2.0 * std::numbers::pi * k / 3.0;
        out[0] += abc[k] * std::cos(th);
        out[1] += abc[k] * std::sin(th);
    }
    out[0] *= 2.0 / 3.0;
    out[1] *= sign * 2.0 / 3.0;
    out[2] = abc.mean();
    return out;
}

Vector3d abc_from_dqz(const Vector3d& dqz, double theta, double sign) {
    Vector3d out;
    for (int k = 0; k < 3; ++k) {
        const double th = theta - 2.0 * std::numbers::pi * k / 3.0;
        out[k] = dqz[0] * std::cos(th) + sign * dqz[1] * std::sin(th) + dqz[2];
    }
    return out;
}

ArmDerivatives arm_to_dq_derivatives(const MmcState& s, const ArmInputs& in, const MmcParams& p) {
    ArmDerivatives d;
    const double la = p.l_a();
    const double lg = p.l_g();
    d.di_g = (-p.r_g() * s.i_g + lg * p.omega * rotate(s.i_g) + in.e_dq - in.v_dq) / lg;
    d.di_sig = (-p.r_a * s.i_sig + 2.0 * la * p.omega * rotate(s.i_sig) - in.u_sig_dq) / la;
    d.di_sig_z = (-p.r_a * s.i_sig_z - in.u_sig_z + 0.5 * p.v_dc) / la;
    // Exact arm power balance; the circulating term vanishes once i_sig_dq is suppressed.
    d.dw = 2.0 * in.u_sig_z * s.i_sig_z + in.u_sig_dq.dot(s.i_sig) - 0.5 * in.e_dq.dot(s.i_g);
    return d;
}

EnergyOutput energy_controller(double w_ref, double w, double phi_w, double p_d, double u_sig_z, const PiGains& g) {
    if (!(std::abs(u_sig_z) >= kMinZeroVoltage)) throw DomainError("mmc zero-sequence", u_sig_z);
    const double err = w_ref - w;
    return {(g.kp * err + g.ki * phi_w + p_d) / (2.0 * u_sig_z), err};
}

ClosedLoop closed_loop(const MmcState& s, const Setpoints& sp, const MmcParams& p) {
    ClosedLoop out;
    const Vector2d v_dq(p.v_grid, 0.0);
    out.inputs.v_dq = v_dq;

    out.i_g_ref = Vector2d(2.0 * sp.p / p.v_grid, sp.q);
    const Vector2d d_g = p.l_g() * p.omega * rotate(s.i_g) - v_dq;
    const auto grid = pi_step<Vector2d>(s.phi_g, out.i_g_ref, s.i_g, d_g, p.grid);
    out.inputs.e_dq = grid.u;

    const Vector2d d_sig = 2.0 * p.l_a() * p.omega * rotate(s.i_sig);
    const auto circ = pi_step<Vector2d>(s.phi_sig, Vector2d::Zero(), s.i_sig, d_sig, p.circulating);
    out.inputs.u_sig_dq = -circ.u;

    out.p_d = 0.5 * out.inputs.e_dq.dot(s.i_g);
    const double u_z_est = 0.5 * p.v_dc - p.r_a * s.i_sig_z;
    const auto energy = energy_controller(p.w_ref(), s.w, s.phi_w, out.p_d, u_z_est, p.energy);
    out.i_z_ref = energy.i_ref;

    const auto zero = pi_step<double>(s.phi_z, out.i_z_ref, s.i_sig_z, 0.5 * p.v_dc, p.zero);
    out.inputs.u_sig_z = -zero.u;

    const auto d = arm_to_dq_derivatives(s, out.inputs, p);
    out.derivative.resize(MmcState::size);
    out.derivative << d.di_g, d.di_sig, d.di_sig_z, d.dw, grid.dphi, circ.dphi, zero.dphi, energy.dphi_w;
    return out;
}

MmcState idle_state(const MmcParams& p) {
    MmcState s;
    s.w = p.w_ref();
    return s;
}

MmcTrace simulate_mmc(const MmcParams& p, const MmcState& x0, const std::vector<PowerStep>& steps, double t_end,
                      double dt, int every) {
    MmcTrace tr;
    VectorXd x = x0.to_vector();
    const long n = static_cast<long>(std::llround(t_end / dt));
    auto setpoint_at = [&](double t) {
        Setpoints sp;
        for (const auto& s : steps)
            if (t >= s.t - 1e-12) sp.p = s.p;
        return sp;
    };
    auto f = [&](const VectorXd& y, const Setpoints& sp) { return closed_loop(MmcState::from_vector(y), sp, p).derivative; };
    auto sample = [&](double t) {
        const auto s = MmcState::from_vector(x);
        const auto cl = closed_loop(s, setpoint_at(t), p);
        tr.t.push_back(t);
        tr.x.push_back(s);
        tr.i_dc.push_back(s.i_sig_z);
        tr.p_dc.push_back(2.0 * cl.inputs.u_sig_z * s.i_sig_z);
        tr.p_ac.push_back(cl.p_d);
    };
    sample(0.0);
    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        // Setpoints are held over a step, taken at its start.
        const Setpoints sp = setpoint_at(t);
        const VectorXd k1 = f(x, sp);
        const VectorXd k2 = f(x + 0.5 * dt * k1, sp);
        const VectorXd k3 = f(x + 0.5 * dt * k2, sp);
        const VectorXd k4 = f(x + dt * k3, sp);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            std::ostringstream msg;
            msg << "MMC simulation diverged at t = " << t + dt;
            throw StiffnessError(msg.str(), t + dt, x);
        }
        if ((k + 1) % every == 0 || k + 1 == n) sample(static_cast<double>(k + 1) * dt);
    }
    return tr;
}

FirstOrderFit fit_first_order(const std::vector<double>& t, const std::vector<double>& y, double t_step,
                              double tau_min, double tau_max) {
    FirstOrderFit out;
    std::vector<double> ts, ys;
    double y0 = y.empty() ? 0.0 : y.front();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_step - 1e-12)
            y0 = y[i];
        else {
            ts.push_back(t[i] - t_step);
            ys.push_back(y[i]);
        }
    }
    out.y0 = y0;
    if (ts.size() < 3) {
        out.rms_residual = std::numeric_limits<double>::infinity();
        return out;
    }

    // For fixed tau the model is linear in delta.
    auto solve = [&](double tau, double& delta) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double b = 1.0 - std::exp(-ts[i] / tau);
            num += b * (ys[i] - y0);
            den += b * b;
        }
        delta = den > 0.0 ? num / den : 0.0;
        double sse = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double r = ys[i] - y0 - delta * (1.0 - std::exp(-ts[i] / tau));
            sse += r * r;
        }
        return sse;
    };

    // Coarse log grid, then golden-section refinement around the best point.
    const int grid = 200;
    const double la = std::log(tau_min), lb = std::log(tau_max);
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        double delta = 0.0;
        const double sse = solve(std::exp(la + (lb - la) * i / grid), delta);
        if (sse < best_sse) {
            best_sse = sse;
            best = i;
        }
    }
    double a = la + (lb - la) * std::max(0, best - 1) / grid;
    double b = la + (lb - la) * std::min(grid, best + 1) / grid;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double dummy = 0.0;
    double fc = solve(std::exp(c), dummy), fd = solve(std::exp(d), dummy);
    for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = solve(std::exp(c), dummy);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = solve(std::exp(d), dummy);
        }
    }
    out.tau = std::exp(0.5 * (a + b));
    const double sse = solve(out.tau, out.delta);
    const double rms = std::sqrt(sse / static_cast<double>(ts.size()));
    out.rms_residual = out.delta != 0.0 ? rms / std::abs(out.delta) : std::numeric_limits<double>::infinity();
    return out;
}

StepExperiment step_experiment(const MmcParams& p, double p_step, double t_step, double window, double dt) {
    StepExperiment ex;
    ex.p_step = p_step;
    ex.trace = simulate_mmc(p, idle_state(p), {{t_step, p_step}}, t_step + window, dt);
    ex.fit = fit_first_order(ex.trace.t, ex.trace.i_dc, t_step);
    ex.i_dc_final = ex.trace.i_dc.back();
    for (const auto& s : ex.trace.x) ex.w_deviation_max = std::max(ex.w_deviation_max, std::abs(s.w - p.w_ref()) / p.w_ref());
    return ex;
}

} // namespace mtdc::mmc
