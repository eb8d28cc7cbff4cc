#include "mtdc/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtdc/assembly.hpp"
#include "mtdc/equilibrium.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/grid.hpp"
#include "mtdc/mmc.hpp"
#include "mtdc/report.hpp"
#include "mtdc/simulator.hpp"
#include "mtdc/stability.hpp"

namespace mtdc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonArgs {
    std::string grid;
    double delta = 0.5;
    double tol = 1e-12;
    int max_iter = 50;
    std::vector<std::string> droop;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
};

struct PowerflowArgs {
    bool force = false;
    int starts = 0;
};

struct StabilityArgs {
    double delta_a = 0.0;  // 0: same as delta
    int random_points = 0;
};

struct SimulateArgs {
    std::vector<std::string> paths;
    std::string integrator = "implicit";
    double dt_out = 0.0;  // 0: scenario value
};

struct MmcArgs {
    double step = 0.4;
    double window = 40e-3;
    double dt = 1e-6;
};

struct LoadedGrid {
    GridSpec spec;
    AssembledSystem sys;
    std::string fingerprint;
};

double parse_gain(const std::string& text, const std::string& flag) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
        throw ValidationError(flag + ": '" + text + "' is not a number");
    return v;
}

LoadedGrid load(const std::string& path, const std::vector<std::string>& droop) {
    LoadedGrid g;
    g.spec = load_grid_file(path);
    for (const auto& d : droop) {
        const auto eq = d.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("--droop expects <node>=<gain>, got '" + d + "'");
        set_droop_gain(g.spec, d.substr(0, eq), parse_gain(d.substr(eq + 1), "--droop"));
    }
    g.sys = assemble(g.spec);
    g.fingerprint = io::grid_fingerprint(g.spec);
    return g;
}

std::string artifact(const CommonArgs& c, const std::string& name) { return (fs::path(c.out_dir) / name).generic_string(); }

json named(const std::vector<std::string>& names, const VectorXd& v, Index offset = 0) {
    json out = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = v[offset + static_cast<Index>(i)];
    return out;
}

json stage_doc(const std::string& stage, const CommonArgs& c, const LoadedGrid* g) {
    json doc;
    doc["stage"] = stage;
    if (g) {
        doc["grid"] = c.grid;
        doc["fingerprint"] = g->fingerprint;
    }
    doc["artifacts"] = json::array();
    return doc;
}

void finish(json& doc, const std::string& status, int code, const CommonArgs& c, const std::string& file) {
    doc["status"] = status;
    doc["exit_code"] = code;
    io::write_json(fs::path(c.out_dir) / file, doc);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- powerflow --------------------------------------------------------------

int cmd_powerflow(const CommonArgs& c, const PowerflowArgs& a, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g = load(c.grid, c.droop);
    const auto red = reduce(g.sys, c.delta);
    const auto bound = contraction_constant(red);

    json doc = stage_doc("powerflow", c, &g);
    doc["delta"] = c.delta;
    doc["tol"] = c.tol;
    doc["max_iter"] = c.max_iter;
    doc["alpha"] = bound.alpha;
    doc["alpha_inf"] = bound.alpha_inf;
    doc["xi"] = bound.xi;
    doc["xi_inf"] = bound.xi_inf;
    out << "alpha = " << bound.alpha << " (infinity norm " << bound.alpha_inf << "), delta = " << c.delta << '\n';

    if (bound.alpha >= 1.0 && !a.force) {
        doc["diagnostic"] = "alpha >= 1: the contraction hypothesis fails; rerun with --force to iterate anyway";
        out << "alpha >= 1, not certified\n";
        finish(doc, "alpha_ge_1", kExitNegative, c, "powerflow.json");
        return kExitNegative;
    }

    FixedPointOptions opts;
    opts.tol = c.tol;
    opts.max_iter = c.max_iter;
    opts.force = a.force;
    EquilibriumResult res;
    try {
        res = solve_fixed_point(red, opts);
    } catch (const DivergenceError& e) {
        doc["diagnostic"] = e.what();
        doc["diverged_at_iteration"] = e.iteration();
        out << "diverged: " << e.what() << '\n';
        finish(doc, "diverged", kExitNegative, c, "powerflow.json");
        return kExitNegative;
    }

    const auto names = g.sys.state_names();
    const std::vector<std::string> branch_names(names.begin(), names.begin() + g.sys.n_branch_states());
    doc["converged"] = res.converged;
    doc["self_map_ok"] = res.self_map_ok;
    doc["iterations"] = static_cast<int>(res.iterations.size());
    doc["residual_norm"] = res.residual_norm;
    doc["V_P"] = named(g.sys.power_ids, res.v_p);
    doc["I_E"] = named(branch_names, res.i_e);
    doc["I_c"] = named(g.sys.power_ids, res.i_c);
    json trace = json::array();
    std::vector<std::vector<double>> rows;
    for (const auto& it : res.iterations) {
        trace.push_back({{"iteration", it.iteration}, {"error", it.error}, {"error_max", it.error_max}});
        std::vector<double> row{static_cast<double>(it.iteration), it.error, it.error_max};
        for (Index k = 0; k < it.iterate.size(); ++k) row.push_back(it.iterate[k]);
        rows.push_back(std::move(row));
    }
    doc["trace"] = std::move(trace);

    std::vector<std::string> header{"iteration", "error", "error_max"};
    for (const auto& id : g.sys.power_ids) header.push_back("V_" + id);
    io::write_csv(fs::path(c.out_dir) / "powerflow_trace.csv", header, rows);
    doc["artifacts"].push_back("powerflow_trace.csv");

    if (a.starts > 0) {
        const auto starts = random_starts(red, a.starts, c.seed);
        const auto ms = multi_start_picard(red, starts, opts);
        doc["uniqueness"] = {{"starts", a.starts},
                             {"seed", c.seed},
                             {"converged", ms.converged},
                             {"max_pairwise_distance", ms.max_pairwise_distance}};
        out << "uniqueness probe: " << ms.converged << "/" << a.starts
            << " starts converged, max pairwise distance " << ms.max_pairwise_distance << '\n';
    }

    const bool ok = res.converged && bound.alpha < 1.0;
    const std::string status = ok ? "certified" : (res.converged ? "converged_uncertified" : "not_converged");
    out << status << " after " << res.iterations.size() << " iterations, residual " << res.residual_norm << '\n';
    for (std::size_t k = 0; k < g.sys.power_ids.size(); ++k)
        out << "  V_" << g.sys.power_ids[k] << " = " << std::setprecision(8) << res.v_p[static_cast<Index>(k)] << '\n';
    out << std::setprecision(6) << "time " << seconds_since(t0) << " s\n";
    const int code = ok ? kExitOk : kExitNegative;
    finish(doc, status, code, c, "powerflow.json");
    return code;
}

// ---- stability --------------------------------------------------------------

int cmd_stability(const CommonArgs& c, const StabilityArgs& a, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g = load(c.grid, c.droop);
    json doc = stage_doc("stability", c, &g);

    const auto red = reduce(g.sys, c.delta);
    FixedPointOptions fp;
    fp.tol = c.tol;
    fp.max_iter = c.max_iter;
    const auto eq = solve_fixed_point(red, fp);
    doc["alpha"] = eq.alpha;
    doc["V_P"] = named(g.sys.power_ids, eq.v_p);
    if (!eq.converged) {
        doc["diagnostic"] = "equilibrium iteration did not converge";
        finish(doc, "no_equilibrium", kExitNegative, c, "stability.json");
        return kExitNegative;
    }

    const double delta_a = a.delta_a > 0.0 ? a.delta_a : c.delta;
    const auto inc = make_incremental_model(g.sys, eq.state(), delta_a);
    CertifyOptions co;
    co.random_points = a.random_points;
    co.seed = c.seed;
    const auto cert = certify(inc, co);
    const bool verified = cert.status == CertificateStatus::certified && verify_certificate(cert);

    doc["delta_a"] = delta_a;
    doc["random_points"] = a.random_points;
    doc["seed"] = c.seed;
    doc["verified"] = verified;
    doc["min_eig_q"] = cert.min_eig_q;
    doc["max_eig_psi"] = cert.max_eig_psi;
    doc["lmi"] = {{"feasible", cert.lmi.feasible},     {"all_hurwitz", cert.lmi.all_hurwitz},
                  {"margin", cert.lmi.margin},         {"newton_steps", cert.lmi.newton_steps},
                  {"barrier_stages", cert.lmi.barrier_stages}, {"message", cert.lmi.message}};
    doc["q_eigenvalues"] = io::to_json(cert.q_eigenvalues);
    json points = json::array();
    for (std::size_t j = 0; j < cert.sample_points.size(); ++j) {
        json p;
        p["z_VP"] = io::to_json(cert.sample_points[j]);
        p["spectral_abscissa"] = cert.spectral_abscissas[j];
        if (j < cert.psi_eigenvalues.size()) {
            p["psi_eigenvalues"] = io::to_json(cert.psi_eigenvalues[j]);
            p["max_eig_psi"] = cert.psi_eigenvalues[j].maxCoeff();
        }
        points.push_back(std::move(p));
    }
    doc["points"] = std::move(points);

    if (cert.Q.size() > 0) {
        const auto labels = g.sys.state_names();
        io::write_matrix_csv(fs::path(c.out_dir) / "stability_Q.csv", cert.Q, labels);
        doc["artifacts"].push_back("stability_Q.csv");
        if (!cert.psi.empty()) {
            io::write_matrix_csv(fs::path(c.out_dir) / "stability_psi0.csv", cert.psi.front(), labels);
            doc["artifacts"].push_back("stability_psi0.csv");
        }
    }

    const std::string status = to_string(cert.status);
    out << "status " << status << (verified ? " (verified)" : "") << ", " << cert.sample_points.size()
        << " sample points\n"
        << "  min eig Q   = " << cert.min_eig_q << "\n  max eig Psi = " << cert.max_eig_psi << '\n'
        << "  " << cert.lmi.message << '\n'
        << "time " << seconds_since(t0) << " s\n";
    const int code = verified ? kExitOk : kExitNegative;
    finish(doc, status, code, c, "stability.json");
    return code;
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(CommonArgs c, const SimulateArgs& a, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string scenario_path;
    if (a.paths.size() == 2) {
        c.grid = a.paths[0];
        scenario_path = a.paths[1];
    } else {
        scenario_path = a.paths[0];
    }
    const auto sc = load_scenario_file(scenario_path);
    if (c.grid.empty()) {
        if (!sc.grid) throw ValidationError("scenario names no grid; pass the grid file before the scenario");
        c.grid = sc.grid->generic_string();
    }
    const auto g = load(c.grid, c.droop);
    json doc = stage_doc("simulation", c, &g);
    doc["scenario"] = scenario_path;

    VectorXd x_init;
    if (sc.initial == InitialCondition::black_start) {
        x_init = black_start_state(g.sys, sc.initial_voltage);
    } else {
        for (const auto& ev : sc.schedule.events)
            if (std::holds_alternative<CloseLine>(ev.action))
                throw ValidationError("an equilibrium start needs every line closed at t = 0");
        const auto start = final_configuration(g.sys, EventSchedule{{}, sc.schedule.initial_power_refs});
        FixedPointOptions fp;
        fp.tol = c.tol;
        fp.max_iter = c.max_iter;
        x_init = solve_fixed_point(reduce(start, c.delta), fp).state();
    }

    SimulationOptions so;
    so.integrator = a.integrator == "rk" ? IntegratorKind::rk : IntegratorKind::implicit;
    so.dt_out = a.dt_out > 0.0 ? a.dt_out : sc.dt_out;
    const auto trace = simulate(g.sys, sc.schedule, x_init, sc.t_end, so);

    const auto final_sys = final_configuration(g.sys, sc.schedule);
    FixedPointOptions fp;
    fp.tol = c.tol;
    fp.max_iter = c.max_iter;
    const auto eq = solve_fixed_point(reduce(final_sys, c.delta), fp);
    const VectorXd x0 = eq.state();
    const auto settle = settle_check(trace, x0, sc.settle_after, sc.settle_tol);

    const auto inc = make_incremental_model(final_sys, x0, c.delta);
    const auto cert = certify(inc);
    const bool certified = cert.status == CertificateStatus::certified;
    const double t_last = sc.schedule.events.empty() ? 0.0 : sc.schedule.events.back().t;
    LyapunovSeries lyap;
    if (certified) lyap = lyapunov_monitor(trace, cert.Q, final_sys, x0, c.delta, t_last);

    const auto names = g.sys.state_names();
    std::vector<std::string> header{"t"};
    header.insert(header.end(), names.begin(), names.end());
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.t.size());
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        std::vector<double> row{trace.t[i]};
        row.insert(row.end(), trace.x[i].data(), trace.x[i].data() + trace.x[i].size());
        rows.push_back(std::move(row));
    }
    io::write_csv(fs::path(c.out_dir) / "simulation.csv", header, rows);
    doc["artifacts"].push_back("simulation.csv");
    if (certified) {
        std::vector<std::vector<double>> wrows;
        for (std::size_t i = 0; i < lyap.t.size(); ++i) wrows.push_back({lyap.t[i], lyap.w[i], lyap.in_ball[i] ? 1.0 : 0.0});
        io::write_csv(fs::path(c.out_dir) / "simulation_w.csv", {"t", "W", "in_ball"}, wrows);
        doc["artifacts"].push_back("simulation_w.csv");
    }

    doc["integrator"] = a.integrator;
    doc["t_end"] = sc.t_end;
    doc["dt_out"] = so.dt_out;
    doc["samples"] = trace.t.size();
    doc["stats"] = {{"accepted", trace.stats.accepted}, {"rejected", trace.stats.rejected}, {"jacobians", trace.stats.jacobians}};
    json events = json::array();
    for (const auto& ev : trace.events)
        events.push_back({{"t", ev.t}, {"event", ev.description}, {"state_jump", (ev.x_after - ev.x_before).cwiseAbs().maxCoeff()}});
    doc["events"] = std::move(events);
    doc["warnings"] = trace.warnings;
    doc["x0"] = named(names, x0);
    doc["final_state"] = named(names, trace.final_state());
    doc["settle"] = {{"pass", settle.pass},       {"distance", settle.distance}, {"t_worst", settle.t_worst},
                     {"t_after", sc.settle_after}, {"tol", sc.settle_tol}};
    json ly = {{"certified", certified}, {"t_after", t_last}};
    if (certified) {
        ly["non_increasing"] = lyap.non_increasing;
        ly["violations"] = lyap.violations;
        ly["max_increase"] = lyap.max_increase;
        ly["out_of_ball"] = lyap.out_of_ball;
        if (!lyap.w.empty()) {
            ly["w_first"] = lyap.w.front();
            ly["w_last"] = lyap.w.back();
        }
    }
    doc["lyapunov"] = std::move(ly);

    out << trace.t.size() << " samples, " << trace.events.size() << " events, " << trace.stats.accepted
        << " accepted steps\n";
    for (const auto& w : trace.warnings) out << "warning: " << w << '\n';
    out << "settle distance " << settle.distance << " after t = " << sc.settle_after << " s: "
        << (settle.pass ? "pass" : "FAIL") << '\n';
    if (certified)
        out << "W after t = " << t_last << " s: " << (lyap.non_increasing ? "non-increasing" : "INCREASES") << " ("
            << lyap.violations << " violations, " << lyap.out_of_ball << " samples outside the ball)\n";
    else
        out << "final equilibrium not certified: " << cert.lmi.message << '\n';
    out << "time " << seconds_since(t0) << " s\n";

    const bool ok = settle.pass && certified && lyap.non_increasing;
    const std::string status = ok ? "settled" : (settle.pass ? "settled_w_unverified" : "not_settled");
    const int code = ok ? kExitOk : kExitNegative;
    finish(doc, status, code, c, "simulation.json");
    return code;
}

// ---- mmc-verify -------------------------------------------------------------

int cmd_mmc(const CommonArgs& c, const MmcArgs& a, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = mmc::default_params();
    const double t_step = 5e-3;
    const auto ex = mmc::step_experiment(p, a.step, t_step, a.window, a.dt);
    const bool valid = std::isfinite(ex.fit.rms_residual) && ex.fit.rms_residual < mmc::kReductionResidualMax;

    json doc = stage_doc("mmc", c, nullptr);
    doc["p_step"] = a.step;
    doc["t_step"] = t_step;
    doc["window"] = a.window;
    doc["dt"] = a.dt;
    doc["tau_est"] = ex.fit.tau;
    doc["rms_residual"] = ex.fit.rms_residual;
    doc["reduction_valid"] = valid;
    doc["fit"] = {{"y0", ex.fit.y0}, {"delta", ex.fit.delta}};
    doc["i_dc_final"] = ex.i_dc_final;
    doc["w_deviation_max"] = ex.w_deviation_max;
    doc["params"] = {{"r_a", p.r_a}, {"x_a", p.x_a}, {"r_f", p.r_f}, {"x_f", p.x_f},
                     {"n_submodules", p.n_submodules}, {"c_i", p.c_i}, {"z_base_ac", p.z_base_ac},
                     {"v_dc", p.v_dc}, {"omega", p.omega}, {"w_ref", p.w_ref()}};
    auto gains = [](const mmc::PiGains& g) { return json{{"kp", g.kp}, {"ki", g.ki}}; };
    doc["gains"] = {{"grid", gains(p.grid)}, {"circulating", gains(p.circulating)}, {"zero", gains(p.zero)},
                    {"energy", gains(p.energy)}};

    std::vector<std::vector<double>> rows;
    const auto& tr = ex.trace;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const double fit = tr.t[i] < t_step ? ex.fit.y0
                                            : ex.fit.y0 + ex.fit.delta * (1.0 - std::exp(-(tr.t[i] - t_step) / ex.fit.tau));
        const auto& s = tr.x[i];
        rows.push_back({tr.t[i], tr.i_dc[i], fit, tr.p_dc[i], tr.p_ac[i], s.w, s.i_g[0], s.i_g[1], s.i_sig[0], s.i_sig[1]});
    }
    io::write_csv(fs::path(c.out_dir) / "mmc.csv",
                  {"t", "i_dc", "i_dc_fit", "p_dc", "p_ac", "w", "i_gd", "i_gq", "i_sig_d", "i_sig_q"}, rows);
    doc["artifacts"].push_back("mmc.csv");

    out << "step " << a.step << " pu: tau = " << ex.fit.tau * 1e3 << " ms, rms residual " << ex.fit.rms_residual
        << (valid ? " (reduction valid)" : " (reduction NOT valid)") << '\n'
        << "time " << seconds_since(t0) << " s\n";
    const int code = valid ? kExitOk : kExitNegative;
    finish(doc, valid ? "valid" : "invalid", code, c, "mmc.json");
    return code;
}

// ---- report -----------------------------------------------------------------

int cmd_report(const CommonArgs& c, std::ostream& out, std::ostream& err) {
    io::ReportProblems problems;
    const auto report = io::collect_report(c.out_dir, problems);
    if (!problems.empty()) {
        for (const auto& s : problems.missing_stages)
            err << "missing stage: " << s << " (" << artifact(c, io::stage_file(s)) << ")\n";
        for (const auto& s : problems.missing_artifacts) err << "missing artifact: " << s << '\n';
        for (const auto& s : problems.other) err << s << '\n';
        return kExitError;
    }
    const auto table = io::summary_table(report);
    io::write_json(fs::path(c.out_dir) / "report.json", io::to_json(report));
    std::ofstream txt(fs::path(c.out_dir) / "report.txt", std::ios::binary);
    txt << table;
    if (!txt) throw std::runtime_error("cannot write report.txt");
    out << table;
    for (const auto& s : report.stages)
        if (s.exit_code != kExitOk) return kExitNegative;
    return kExitOk;
}

void add_grid_options(CLI::App* sub, CommonArgs& c, bool with_grid) {
    if (with_grid) sub->add_option("grid", c.grid, "Grid configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--delta", c.delta, "Ball radius around 1 pu")->capture_default_str();
    sub->add_option("--tol", c.tol, "Fixed-point stopping tolerance (max-norm step)")->capture_default_str();
    sub->add_option("--max-iter", c.max_iter, "Fixed-point iteration limit")->capture_default_str();
    sub->add_option("--droop", c.droop, "Override a droop gain, <node>=<gain>; repeatable");
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Equilibrium, stability and time-domain tools for multi-terminal HVDC grids", "mtdc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mtdc 1.0");

    CommonArgs common;
    app.add_option("--out-dir", common.out_dir, "Folder for JSON/CSV artifacts")->capture_default_str();
    app.add_option("--seed", common.seed, "Seed for randomized probes")->capture_default_str();

    PowerflowArgs pfa;
    auto* pf = app.add_subcommand("powerflow", "Certify and solve the equilibrium by fixed-point iteration");
    add_grid_options(pf, common, true);
    pf->add_flag("--force", pfa.force, "Iterate even when alpha >= 1");
    pf->add_option("--starts", pfa.starts, "Random Picard starts for a uniqueness probe")->capture_default_str();
    pf->add_option("--seed", common.seed, "Seed for the random starts");
    pf->add_option("--out-dir", common.out_dir, "Folder for artifacts");

    StabilityArgs sta;
    auto* st = app.add_subcommand("stability", "Sample Jacobians on the ball and solve the common-Lyapunov LMI");
    add_grid_options(st, common, true);
    st->add_option("--delta-a", sta.delta_a, "Certification radius (default: --delta)");
    st->add_option("--random-points", sta.random_points, "Extra random points on the ball boundary")->capture_default_str();
    st->add_option("--seed", common.seed, "Seed for the random points");
    st->add_option("--out-dir", common.out_dir, "Folder for artifacts");

    SimulateArgs sia;
    auto* si = app.add_subcommand("simulate", "Run an event scenario and check settling and W monotonicity");
    si->add_option("paths", sia.paths, "[grid] scenario")->required()->expected(1, 2)->check(CLI::ExistingFile);
    add_grid_options(si, common, false);
    si->add_option("--integrator", sia.integrator, "implicit (Rosenbrock) or rk (fixed-step RK4)")
        ->check(CLI::IsMember({"implicit", "rk"}))
        ->capture_default_str();
    si->add_option("--dt-out", sia.dt_out, "Output sample interval (default: scenario value)");
    si->add_option("--out-dir", common.out_dir, "Folder for artifacts");

    MmcArgs ma;
    auto* mv = app.add_subcommand("mmc-verify", "Fit the first-order reduction to a detailed MMC power step");
    mv->add_option("--step", ma.step, "Power step, pu")->capture_default_str();
    mv->add_option("--window", ma.window, "Fit window after the step, s")->capture_default_str();
    mv->add_option("--dt", ma.dt, "RK4 step, s")->capture_default_str();
    mv->add_option("--out-dir", common.out_dir, "Folder for artifacts");

    auto* rp = app.add_subcommand("report", "Combine the stage reports in --out-dir");
    rp->add_option("--out-dir", common.out_dir, "Folder holding the stage reports");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*pf) return cmd_powerflow(common, pfa, out);
        if (*st) return cmd_stability(common, sta, out);
        if (*si) return cmd_simulate(common, sia, out);
        if (*mv) return cmd_mmc(common, ma, out);
        if (*rp) return cmd_report(common, out, err);
    } catch (const CertificationError& e) {
        err << "not certified: " << e.what() << " (alpha = " << e.alpha() << ")\n";
        return kExitNegative;
    } catch (const DivergenceError& e) {
        err << "diverged: " << e.what() << '\n';
        return kExitNegative;
    } catch (const StiffnessError& e) {
        err << "integration failed at t = " << e.time() << " s: " << e.what() << "\nstate:";
        for (Index k = 0; k < e.state().size(); ++k) err << ' ' << e.state()[k];
        err << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

} // namespace mtdc::cli
