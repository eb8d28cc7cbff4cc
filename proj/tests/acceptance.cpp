// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "mtdc/equilibrium.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/integrators.hpp"
#include "mtdc/mmc.hpp"
#include "mtdc/simulator.hpp"
#include "mtdc/stability.hpp"
#include "support/fixtures.hpp"
#include "support/mmc_abc.hpp"
#include "support/random_grid.hpp"

using namespace mtdc;

namespace {

// Pinned tolerances.
constexpr double kDelta = 0.5;
constexpr double kAlphaLo = 0.001, kAlphaHi = 0.05;
constexpr double kAlphaRuntime = 1.0;        // s, criteria 1-3
constexpr double kDecayFactor = 1.05;
constexpr double kPicardTarget = 1e-10;
constexpr std::size_t kPicardMaxIter = 6;
constexpr double kVpTol = 5e-3;
constexpr double kNewtonTol = 1e-8;
constexpr double kEquilibriumResidual = 1e-9;
constexpr double kLmiRuntime = 30.0;
constexpr double kSettleTol = 1e-3;
constexpr double kSimRuntime = 60.0;
constexpr double kAbcTol = 1e-8;
constexpr double kRlTol = 1e-6;
constexpr double kIntegratorTol = 1e-8;
constexpr double kTauLo = 0.6e-3, kTauHi = 1.8e-3;
constexpr double kFitRms = 0.10;
constexpr int kRandomGrids = 50;
constexpr std::uint64_t kSeed = 20240601;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("%s %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void criterion_1_to_4() {
    const auto t0 = Clock::now();
    const auto sys = testing::case4();
    const auto red = reduce(sys, kDelta);
    const auto bound = contraction_constant(red);
    const auto r = solve_fixed_point(red);
    const double t_solve = seconds_since(t0);

    report(1, "equilibrium certificate",
           bound.alpha < 1.0 && bound.alpha >= kAlphaLo && bound.alpha <= kAlphaHi && t_solve < kAlphaRuntime,
           fmt("alpha=%.6g in [%g, %g], %.3f s", bound.alpha, kAlphaLo, kAlphaHi, t_solve));

    bool decay = r.converged;
    for (std::size_t k = 1; k < r.iterations.size(); ++k)
        decay = decay && r.iterations[k].error <= kDecayFactor * bound.alpha * r.iterations[k - 1].error;
    const double last = r.iterations.empty() ? 1.0 : r.iterations.back().error;
    report(2, "contraction decay", decay && last < kPicardTarget && r.iterations.size() <= kPicardMaxIter && t_solve < kAlphaRuntime,
           fmt("%zu iterations, final error %.2e, ratio bound %s", r.iterations.size(), last, decay ? "held" : "violated"));

    const auto t1 = Clock::now();
    const Eigen::Vector3d expected(1.0014, 1.0001, 0.9998);
    const double vp_err = (r.v_p - expected).cwiseAbs().maxCoeff();
    const bool ordered = r.v_p[0] > r.v_p[1] && r.v_p[1] > 1.0 && 1.0 > r.v_p[2];
    double newton_err = 1.0;
    try {
        newton_err = (newton_oracle(red, Eigen::VectorXd::Ones(3)) - r.v_p).cwiseAbs().maxCoeff();
    } catch (const OracleFailure&) {
    }
    const double t_vp = t_solve + seconds_since(t1);
    report(3, "equilibrium value", vp_err < kVpTol && ordered && newton_err < kNewtonTol && t_vp < kAlphaRuntime,
           fmt("V_P=(%.5f, %.5f, %.5f), max dev %.2e, ordering %s, Newton diff %.1e, %.3f s", r.v_p[0], r.v_p[1], r.v_p[2],
               vp_err, ordered ? "ok" : "wrong", newton_err, t_vp));

    const double residual = equilibrium_residual(sys, r.state());
    auto spec = testing::case4_spec();
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> scale(0.2, 5.0);
    for (auto& e : spec.edges) {
        for (auto& b : e.branches) b.l_per_km *= scale(rng);
        e.shunt.c_per_km *= scale(rng);
    }
    for (auto& n : spec.nodes)
        if (n.is_power()) {
            n.power().tau_s *= scale(rng);
            n.power().c_conv *= scale(rng);
        }
    const auto moved = solve_fixed_point(reduce(assemble(spec), kDelta)).state();
    const bool invariant = (moved - r.state()).cwiseAbs().maxCoeff() == 0.0;
    report(4, "lifted equilibrium", residual < kEquilibriumResidual && invariant,
           fmt("residual %.2e, L/C/tau perturbation %s", residual, invariant ? "bit-identical" : "changed the state"));
}

void criterion_5() {
    const auto t0 = Clock::now();
    const auto sys = testing::case4();
    const auto inc = make_incremental_model(sys, testing::equilibrium_state(sys), kDelta);
    const auto cert = certify(inc);
    const double t = seconds_since(t0);
    int boundary = 0, hurwitz = 0;
    for (std::size_t i = 0; i < cert.sample_points.size(); ++i) {
        if (cert.sample_points[i].norm() == 0.0) continue;
        ++boundary;
        if (cert.spectral_abscissas[i] < 0.0) ++hurwitz;
    }
    const bool center_ok = !cert.psi_eigenvalues.empty() && cert.sample_points.front().norm() == 0.0 &&
                           cert.psi_eigenvalues.front().maxCoeff() < 0.0;
    const bool pass = boundary == 6 && hurwitz == 6 && cert.lmi.feasible && cert.min_eig_q > 0.0 && cert.max_eig_psi < 0.0 &&
                      center_ok && verify_certificate(cert) && t < kLmiRuntime;
    report(5, "stability certificate", pass,
           fmt("%d/%d boundary Jacobians Hurwitz, min eig Q %.3e, max eig Psi %.3e (centre %s), n=%ld, %.2f s", hurwitz,
               boundary, cert.min_eig_q, cert.max_eig_psi, center_ok ? "negative" : "not negative",
               static_cast<long>(sys.dimension()), t));
}

struct BlackStartRun {
    AssembledSystem sys;
    Scenario sc;
    SimulationTrace trace;
    double seconds = 0.0;
};

BlackStartRun black_start(IntegratorKind kind) {
    BlackStartRun b{testing::case4(), load_scenario_file(testing::data_path("scenario4.json")), {}, 0.0};
    SimulationOptions so;
    so.integrator = kind;
    so.dt_out = b.sc.dt_out;
    const auto t0 = Clock::now();
    b.trace = simulate(b.sys, b.sc.schedule, black_start_state(b.sys, b.sc.initial_voltage), b.sc.t_end, so);
    b.seconds = seconds_since(t0);
    return b;
}

void criterion_6(const BlackStartRun& b) {
    const auto final_sys = final_configuration(b.sys, b.sc.schedule);
    const VectorXd x0 = solve_fixed_point(reduce(final_sys, kDelta)).state();
    const auto settle = settle_check(b.trace, x0, 9.0, kSettleTol);
    bool continuous = b.trace.events.size() == 6;
    for (const auto& ev : b.trace.events) continuous = continuous && (ev.x_after - ev.x_before).cwiseAbs().maxCoeff() == 0.0;
    const auto cert = certify(make_incremental_model(final_sys, x0, kDelta));
    const auto w = lyapunov_monitor(b.trace, cert.Q, final_sys, x0, kDelta, 7.7);
    const bool pass = settle.pass && continuous && cert.status == CertificateStatus::certified && w.non_increasing &&
                      b.seconds < kSimRuntime;
    report(6, "simulation settle", pass,
           fmt("distance over [9, 12] s %.2e, %zu events %s, W violations %d over %zu samples, %.2f s", settle.distance,
               b.trace.events.size(), continuous ? "continuous" : "discontinuous", w.violations, w.w.size(), b.seconds));
}

double rl_closed_form_error() {
    const double l = 0.02, r = 0.5, v0 = 1.0, v1 = 1.3;
    double v = v0;
    OdeSystem s;
    s.f = [&](const VectorXd& y) { return VectorXd::Constant(1, (-r * y[0] + v) / l); };
    s.jacobian = [&](const VectorXd&) { return MatrixXd::Constant(1, 1, -r / l); };
    double worst = 0.0;
    auto exact = [&](double t) { return v1 / r + (v0 / r - v1 / r) * std::exp(-t * r / l); };
    std::vector<double> stops;
    for (int k = 1; k <= 250; ++k) stops.push_back(k * 1e-3);
    IntegrationStats st;
    v = v1;
    rosenbrock_integrate(s, VectorXd::Constant(1, v0 / r), 0.0, stops,
                         [&](double t, const VectorXd& y) { worst = std::max(worst, std::abs(y[0] - exact(t)) / exact(t)); }, {}, st);
    return worst;
}

double linear_grid_error() {
    auto spec = load_grid_file(testing::data_path("case2.json"));
    spec.nodes[1].power().p_ref = 0.0;
    const auto sys = assemble(spec);
    const VectorXd x_init = testing::equilibrium_state(sys);
    EventSchedule sched;
    sched.events.push_back({0.01, SetVoltageRef{"s", 1.1}});
    SimulationOptions so;
    so.dt_out = 1e-4;
    const auto trace = simulate(sys, sched, x_init, 0.05, so);
    const MatrixXd a = sys.m_diag.cwiseInverse().asDiagonal() * sys.Phi;
    VectorXd x_star = x_init;
    x_star[sys.vp_offset()] = 1.1;
    x_star[0] = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        const double t = trace.t[i];
        const VectorXd exact = t <= 0.01 ? x_init : VectorXd(x_star + (a * (t - 0.01)).exp() * (x_init - x_star));
        worst = std::max(worst, (trace.x[i] - exact).cwiseAbs().maxCoeff() / 0.1);
    }
    return worst;
}

void criterion_7(const BlackStartRun& implicit_run) {
    const auto p = mmc::default_params();
    const std::vector<mmc::PowerStep> steps{{10e-3, 0.4}, {60e-3, -0.2}};
    const auto dq = mmc::simulate_mmc(p, mmc::idle_state(p), steps, 0.1, 1e-6, 100);
    const auto abc = testing::MmcAbcOracle(p).run(steps, 0.1, 1e-6, 100);
    double frames = dq.x.size() == abc.size() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(abc.size(), dq.x.size()); ++i)
        frames = std::max(frames, (dq.x[i].to_vector() - abc[i].to_vector()).cwiseAbs().maxCoeff());

    const double rl = rl_closed_form_error();
    const double lin = linear_grid_error();

    const auto rk = black_start(IntegratorKind::rk);
    const double integ = (rk.trace.final_state() - implicit_run.trace.final_state()).cwiseAbs().maxCoeff();

    const auto red = reduce(testing::case4(), kDelta);
    FixedPointOptions fp;
    const auto ms = multi_start_picard(red, random_starts(red, 100, kSeed), fp);

    const bool pass = frames < kAbcTol && rl < kRlTol && lin < kRlTol && integ < kIntegratorTol && ms.converged == 100 &&
                      ms.max_pairwise_distance < 10.0 * fp.tol;
    report(7, "oracle equivalences", pass,
           fmt("abc vs dq %.2e, RL closed form %.2e, linear grid vs expm %.2e, implicit vs RK4 final %.2e, "
               "100 Picard starts spread %.2e",
               frames, rl, lin, integ, ms.max_pairwise_distance));
}

void criterion_8() {
    const auto p = mmc::default_params();
    bool pass = true;
    std::string detail;
    for (double step : {0.4, -0.4}) {
        const auto e = mmc::step_experiment(p, step);
        const bool ok = e.fit.tau >= kTauLo && e.fit.tau <= kTauHi && e.fit.rms_residual < kFitRms;
        pass = pass && ok;
        detail += fmt("%+.1f pu: tau %.4f ms, RMS %.3f; ", step, e.fit.tau * 1e3, e.fit.rms_residual);
    }
    detail.resize(detail.size() - 2);
    report(8, "MMC reduction", pass, detail);
}

void criterion_9() {
    std::mt19937_64 rng(kSeed);
    testing::RandomGridOptions go;
    go.min_nodes = 4;
    go.max_nodes = 8;
    go.branch_count = 3;
    go.p_max = 0.5;
    int contracting = 0, picard_ok = 0, hurwitz_sets = 0, certified = 0, reported_infeasible = 0, errors = 0;
    std::string first_problem;
    const auto t0 = Clock::now();
    for (int g = 0; g < kRandomGrids; ++g) {
        try {
            const auto sys = assemble(load_grid_json(testing::random_grid_json(rng, go)));
            const auto red = reduce(sys, kDelta);
            if (!(contraction_constant(red).alpha < 1.0)) continue;
            ++contracting;
            const auto r = solve_fixed_point(red);
            const double diff = (newton_oracle(red, VectorXd::Ones(red.phi_p.rows())) - r.v_p).cwiseAbs().maxCoeff();
            if (r.converged && diff < kNewtonTol)
                ++picard_ok;
            else if (first_problem.empty())
                first_problem = fmt("grid %d: Picard/Newton diff %.2e", g, diff);

            CertifyOptions co;
            co.lmi.stop_at_feasible = true;
            const auto cert = certify(make_incremental_model(sys, r.state(), kDelta), co);
            if (cert.status == CertificateStatus::failed) continue;
            ++hurwitz_sets;
            if (cert.status == CertificateStatus::certified && verify_certificate(cert))
                ++certified;
            else if (!cert.lmi.feasible && std::isfinite(cert.lmi.margin) && !cert.lmi.message.empty())
                ++reported_infeasible;
            else if (first_problem.empty())
                first_problem = fmt("grid %d: certificate neither verified nor reported infeasible", g);
        } catch (const std::exception& e) {
            ++errors;
            if (first_problem.empty()) first_problem = fmt("grid %d: %s", g, e.what());
        }
    }
    const bool pass = errors == 0 && picard_ok == contracting && certified + reported_infeasible == hurwitz_sets;
    std::string detail = fmt("%d grids, %d with alpha<1 (%d Picard=Newton), %d Hurwitz sample sets (%d certified, %d "
                             "reported infeasible), %.2f s",
                             kRandomGrids, contracting, picard_ok, hurwitz_sets, certified, reported_infeasible,
                             seconds_since(t0));
    if (!first_problem.empty()) detail += "; " + first_problem;
    report(9, "randomized robustness", pass, detail);
}

void guarded(int id, const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("threw: ") + e.what());
    }
}

} // namespace

int main() {
    guarded(1, "equilibrium criteria", criterion_1_to_4);
    guarded(5, "stability certificate", criterion_5);
    BlackStartRun implicit_run;
    bool have_run = false;
    guarded(6, "simulation settle", [&] {
        implicit_run = black_start(IntegratorKind::implicit);
        have_run = true;
        criterion_6(implicit_run);
    });
    guarded(7, "oracle equivalences", [&] {
        if (!have_run) throw std::runtime_error("black-start run unavailable");
        criterion_7(implicit_run);
    });
    guarded(8, "MMC reduction", criterion_8);
    guarded(9, "randomized robustness", criterion_9);
    std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
