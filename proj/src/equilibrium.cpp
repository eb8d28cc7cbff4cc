#include "mtdc/equilibrium.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mtdc/errors.hpp"

namespace mtdc {

VectorXd EquilibriumResult::state() const {
    VectorXd x(i_e.size() + i_c.size() + v_p.size());
    x << i_e, i_c, v_p;
    return x;
}

ReducedSystem reduce(const AssembledSystem& sys, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("ball radius delta must lie in (0, 1)");

    ReducedSystem red;
    red.delta = delta;
    red.s = sys.S;
    red.k_droop = sys.K_droop;
    red.power_ids = sys.power_ids;
    red.r_inv = sys.R.cwiseInverse();
    red.k_p = sys.K_P;
    red.kv_vv = sys.K_V * sys.V_V;

    red.phi_p = sys.K_P.transpose() * red.r_inv.asDiagonal() * sys.K_P;
    red.phi_p.diagonal() += sys.G_c;
    // The congruence form is symmetric in exact arithmetic; remove rounding asymmetry.
    red.phi_p = (0.5 * (red.phi_p + red.phi_p.transpose())).eval();
    red.e_p = sys.K_P.transpose() * red.r_inv.asDiagonal() * red.kv_vv;

    red.phi_p_llt.compute(red.phi_p);
    if (red.phi_p_llt.info() != Eigen::Success)
        throw ValidationError("Phi_P is not positive definite; is every power node connected?");

    // Sign check against the full system: at an arbitrary admissible V, the third
    // equilibrium equation evaluated with the lifted currents must equal the reduced residual.
    const VectorXd v = VectorXd::Ones(red.size()) + VectorXd::LinSpaced(red.size(), 0.0, 0.01);
    const VectorXd x = lift_state(red, v);
    const VectorXd full = unscaled_rhs(x, sys).tail(red.size());
    const VectorXd reduced = reduced_residual(red, v);
    const double scale = 1.0 + red.phi_p.cwiseAbs().maxCoeff() + red.e_p.cwiseAbs().maxCoeff();
    if ((full - reduced).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw Error("reduced system is inconsistent with the network equations (sign convention)");
    return red;
}

ContractionBound contraction_constant(const ReducedSystem& red) {
    ContractionBound out;
    const double shrink = (1.0 - red.delta) * (1.0 - red.delta);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(red.phi_p, Eigen::EigenvaluesOnly);
    const double inv_norm_2 = 1.0 / eig.eigenvalues().minCoeff();
    out.xi = red.s.norm() / shrink;
    out.alpha = inv_norm_2 * out.xi;

    const MatrixXd inv = red.phi_p_llt.solve(MatrixXd::Identity(red.size(), red.size()));
    const double inv_norm_inf = inv.cwiseAbs().rowwise().sum().maxCoeff();
    out.xi_inf = red.s.cwiseAbs().maxCoeff() / shrink;
    out.alpha_inf = inv_norm_inf * out.xi_inf;
    return out;
}

VectorXd fixed_point_map(const ReducedSystem& red, const VectorXd& v) {
    return red.phi_p_llt.solve(injection_current(v, red.s, red.k_droop, &red.power_ids) - red.e_p);
}

VectorXd reduced_residual(const ReducedSystem& red, const VectorXd& v) {
    return injection_current(v, red.s, red.k_droop, &red.power_ids) - red.phi_p * v - red.e_p;
}

VectorXd lift_state(const ReducedSystem& red, const VectorXd& v_p) {
    const VectorXd i_e = red.r_inv.cwiseProduct(red.k_p * v_p + red.kv_vv);
    const VectorXd i_c = injection_current(v_p, red.s, red.k_droop, &red.power_ids);
    VectorXd x(i_e.size() + i_c.size() + v_p.size());
    x << i_e, i_c, v_p;
    return x;
}

double equilibrium_residual(const AssembledSystem& sys, const VectorXd& x) {
    return unscaled_rhs(x, sys).cwiseAbs().maxCoeff();
}

namespace {

bool inside_ball(const VectorXd& v, double delta) {
    return ((v.array() - 1.0).abs() <= delta).all();
}

} // namespace

EquilibriumResult solve_fixed_point(const ReducedSystem& red, const VectorXd& v0, const FixedPointOptions& opts) {
    const auto bound = contraction_constant(red);
    if (bound.alpha >= 1.0 && !opts.force) {
        std::ostringstream msg;
        msg << "contraction constant alpha = " << bound.alpha << " >= 1 at delta = " << red.delta
            << "; existence and uniqueness are not certified";
        throw CertificationError(msg.str(), bound.alpha);
    }
    if (!inside_ball(v0, red.delta)) throw DivergenceError("initial point lies outside the ball", 0);

    EquilibriumResult out;
    out.alpha = bound.alpha;
    out.alpha_inf = bound.alpha_inf;
    out.delta = red.delta;

    VectorXd v = v0;
    for (int k = 1; k <= opts.max_iter; ++k) {
        VectorXd next = fixed_point_map(red, v);
        const VectorXd step = next - v;
        if (k == 1) out.self_map_ok = step.cwiseAbs().maxCoeff() <= (1.0 - bound.alpha_inf) * red.delta;
        out.iterations.push_back({k, step.norm(), step.cwiseAbs().maxCoeff(), next});
        v = std::move(next);
        if (!v.allFinite() || !inside_ball(v, red.delta)) {
            std::ostringstream msg;
            msg << "iterate " << k << " left the ball |v - 1| <= " << red.delta;
            throw DivergenceError(msg.str(), k);
        }
        if (out.iterations.back().error_max <= opts.tol) {
            out.converged = true;
            break;
        }
    }

    out.v_p = v;
    const VectorXd x = lift_state(red, v);
    const Index be = red.k_p.rows();
    out.i_e = x.head(be);
    out.i_c = x.segment(be, v.size());
    // Residuals of the three equilibrium equations, computed from the lifted state.
    const VectorXd r1 = -out.i_e.cwiseQuotient(red.r_inv) + red.k_p * v + red.kv_vv;
    const VectorXd r2 = -out.i_c + injection_current(v, red.s, red.k_droop, &red.power_ids);
    const VectorXd r3 = reduced_residual(red, v);
    out.residual_norm = std::max({r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff(), r3.cwiseAbs().maxCoeff()});
    return out;
}

EquilibriumResult solve_fixed_point(const ReducedSystem& red, const FixedPointOptions& opts) {
    return solve_fixed_point(red, VectorXd::Ones(red.size()), opts);
}

VectorXd newton_oracle(const ReducedSystem& red, const VectorXd& v0, double tol, int max_iter) {
    VectorXd v = v0;
    VectorXd f = reduced_residual(red, v);
    for (int k = 0; k < max_iter; ++k) {
        MatrixXd jac = -red.phi_p;
        jac.diagonal() += injection_jacobian_diagonal(v, red.s);
        const VectorXd dv = jac.partialPivLu().solve(-f);

        double step = 1.0;
        VectorXd trial;
        VectorXd f_trial;
        for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
            trial = v + step * dv;
            if ((trial.array().abs() < kVoltageFloor).any()) continue;
            f_trial = reduced_residual(red, trial);
            if (f_trial.norm() <= (1.0 - 1e-4 * step) * f.norm() || f.norm() < 1e-300) break;
        }
        if (f_trial.size() == 0) throw OracleFailure("Newton line search left the admissible voltage region");
        const double moved = (trial - v).cwiseAbs().maxCoeff();
        v = trial;
        f = f_trial;
        if (moved <= tol) return v;
    }
    throw OracleFailure("Newton oracle did not converge in " + std::to_string(max_iter) + " iterations");
}

std::vector<VectorXd> random_starts(const ReducedSystem& red, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0 - red.delta, 1.0 + red.delta);
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        VectorXd v(red.size());
        for (Index k = 0; k < v.size(); ++k) v[k] = u(rng);
        out.push_back(std::move(v));
    }
    return out;
}

MultiStartResult multi_start_picard(const ReducedSystem& red, const std::vector<VectorXd>& starts,
                                    const FixedPointOptions& opts, Execution execution) {
    const int n = static_cast<int>(starts.size());
    MultiStartResult out;
    out.solutions.resize(starts.size());
    out.iterations.assign(starts.size(), 0);
    out.failures.assign(starts.size(), std::string());

#pragma omp parallel for schedule(dynamic) if (execution == Execution::parallel)
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const auto r = solve_fixed_point(red, starts[k], opts);
            out.solutions[k] = r.v_p;
            out.iterations[k] = static_cast<int>(r.iterations.size());
            if (!r.converged) out.failures[k] = "no convergence within the iteration limit";
        } catch (const std::exception& e) {
            out.failures[k] = e.what();
        }
    }

    std::vector<std::size_t> ok;
    for (std::size_t k = 0; k < starts.size(); ++k)
        if (out.failures[k].empty()) ok.push_back(k);
    out.converged = static_cast<int>(ok.size());
    for (std::size_t a = 0; a < ok.size(); ++a)
        for (std::size_t b = a + 1; b < ok.size(); ++b)
            out.max_pairwise_distance = std::max(
                out.max_pairwise_distance, (out.solutions[ok[a]] - out.solutions[ok[b]]).cwiseAbs().maxCoeff());
    return out;
}

} // namespace mtdc
