#include "mtdc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "mtdc/errors.hpp"
#include "mtdc/stability.hpp"

namespace mtdc {

using namespace detail;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::ptrdiff_t find_id(const std::vector<std::string>& ids, const std::string& id) {
    auto it = std::find(ids.begin(), ids.end(), id);
    return it == ids.end() ? -1 : std::distance(ids.begin(), it);
}

std::string fmt(double v) {
    std::ostringstream o;
    o << v;
    return o.str();
}

// Time-varying part of the network between two events.
struct Configuration {
    VectorXd row_mask;  // 1 for conducting branch rows, 0 for open lines
    VectorXd P_ref;
    VectorXd S;
    VectorXd V_V;
    VectorXd E0;
};

void apply(const EventAction& action, const AssembledSystem& sys, Configuration& cfg) {
    std::visit(overloaded{
                   [&](const CloseLine& c) {
                       const auto e = find_id(sys.edge_ids, c.edge);
                       for (int b = 0; b < sys.branch_count; ++b) cfg.row_mask[sys.branch_state(e, b)] = 1.0;
                   },
                   [&](const SetPowerRef& p) {
                       cfg.P_ref[find_id(sys.power_ids, p.node)] = p.p_ref;
                       cfg.S = power_offset(cfg.P_ref, sys.V_ref, sys.K_droop);
                   },
                   [&](const SetVoltageRef& v) {
                       cfg.V_V[find_id(sys.voltage_ids, v.node)] = v.v_set;
                       cfg.E0.head(sys.n_branch_states()) = sys.K_V * cfg.V_V;
                   },
               },
               action);
}

Configuration initial_configuration(const AssembledSystem& sys, const EventSchedule& schedule) {
    Configuration cfg;
    cfg.row_mask = VectorXd::Ones(sys.n_branch_states());
    cfg.P_ref = sys.P_ref;
    cfg.V_V = sys.V_V;
    cfg.E0 = sys.E0;
    for (const auto& [id, p] : schedule.initial_power_refs) cfg.P_ref[find_id(sys.power_ids, id)] = p;
    cfg.S = power_offset(cfg.P_ref, sys.V_ref, sys.K_droop);
    for (const auto& ev : schedule.events)
        if (const auto* c = std::get_if<CloseLine>(&ev.action)) {
            const auto e = find_id(sys.edge_ids, c->edge);
            for (int b = 0; b < sys.branch_count; ++b) cfg.row_mask[sys.branch_state(e, b)] = 0.0;
        }
    return cfg;
}

double clamp_voltage(double v) {
    if (std::abs(v) >= kVoltageFloor) return v;
    return v < 0.0 ? -kVoltageFloor : kVoltageFloor;
}

} // namespace

std::string describe(const EventAction& a) {
    return std::visit(overloaded{
                          [](const CloseLine& c) { return "close line " + c.edge; },
                          [](const SetPowerRef& p) { return "P_ref[" + p.node + "] -> " + fmt(p.p_ref); },
                          [](const SetVoltageRef& v) { return "V_set[" + v.node + "] -> " + fmt(v.v_set); },
                      },
                      a);
}

void validate_schedule(const EventSchedule& schedule, const AssembledSystem& sys) {
    double last = -std::numeric_limits<double>::infinity();
    std::set<std::string> closed;
    for (const auto& [id, p] : schedule.initial_power_refs) {
        if (find_id(sys.power_ids, id) < 0) throw ValidationError("initial power reference for unknown power node '" + id + "'");
        if (!std::isfinite(p)) throw ValidationError("initial power reference must be finite");
    }
    for (const auto& ev : schedule.events) {
        if (!std::isfinite(ev.t) || ev.t < 0.0) throw ValidationError("event times must be finite and >= 0");
        if (ev.t < last) throw ValidationError("event times must be non-decreasing");
        last = ev.t;
        std::visit(overloaded{
                       [&](const CloseLine& c) {
                           if (find_id(sys.edge_ids, c.edge) < 0) throw ValidationError("event closes unknown line '" + c.edge + "'");
                           if (!closed.insert(c.edge).second) throw ValidationError("line '" + c.edge + "' is closed twice");
                       },
                       [&](const SetPowerRef& p) {
                           if (find_id(sys.power_ids, p.node) < 0)
                               throw ValidationError("power reference event for unknown power node '" + p.node + "'");
                           if (!std::isfinite(p.p_ref)) throw ValidationError("power reference must be finite");
                       },
                       [&](const SetVoltageRef& v) {
                           if (find_id(sys.voltage_ids, v.node) < 0)
                               throw ValidationError("voltage reference event for unknown voltage node '" + v.node + "'");
                           if (!(v.v_set > 0.0)) throw ValidationError("voltage reference must be > 0");
                       },
                   },
                   ev.action);
    }
}

Scenario load_scenario(const json& j, const std::filesystem::path& base_dir) {
    require_object(j, "");
    reject_unknown_keys(j, "", {"schema", "name", "description", "grid", "t_end", "dt_out", "initial",
                                "initial_power_refs", "events", "settle"});
    if (j.contains("schema") && j["schema"] != 1) throw ParseError("/schema", "unsupported schema version");
    Scenario sc;
    if (auto g = j.find("grid"); g != j.end()) {
        if (!g->is_string()) throw ParseError("/grid", "expected a file path");
        std::filesystem::path p = g->get<std::string>();
        sc.grid = p.is_absolute() ? p : base_dir / p;
    }
    sc.t_end = get_number(j, "", "t_end");
    sc.dt_out = get_number_or(j, "", "dt_out", sc.dt_out);
    if (!(sc.t_end > 0.0)) throw ParseError("/t_end", "must be > 0");
    if (!(sc.dt_out > 0.0)) throw ParseError("/dt_out", "must be > 0");

    if (auto init = j.find("initial"); init != j.end()) {
        require_object(*init, "/initial");
        reject_unknown_keys(*init, "/initial", {"kind", "v_p"});
        const auto kind = init->value("kind", std::string("black_start"));
        if (kind == "black_start")
            sc.initial = InitialCondition::black_start;
        else if (kind == "equilibrium")
            sc.initial = InitialCondition::equilibrium;
        else
            throw ParseError("/initial/kind", "expected \"black_start\" or \"equilibrium\"");
        sc.initial_voltage = get_number_or(*init, "/initial", "v_p", sc.initial_voltage);
    }

    if (auto refs = j.find("initial_power_refs"); refs != j.end()) {
        require_object(*refs, "/initial_power_refs");
        for (const auto& [id, value] : refs->items()) {
            if (!value.is_number()) throw ParseError("/initial_power_refs/" + id, "expected a number");
            sc.schedule.initial_power_refs[id] = value.get<double>();
        }
    }

    if (auto evs = j.find("events"); evs != j.end()) {
        if (!evs->is_array()) throw ParseError("/events", "expected an array");
        for (std::size_t i = 0; i < evs->size(); ++i) {
            const auto& e = (*evs)[i];
            const auto path = child("/events", i);
            require_object(e, path);
            Event ev;
            ev.t = get_number(e, path, "t");
            auto action = e.find("action");
            if (action == e.end() || !action->is_string()) throw ParseError(child(path, "action"), "expected an action name");
            if (*action == "close_line") {
                reject_unknown_keys(e, path, {"t", "action", "edge"});
                ev.action = CloseLine{get_id(e, path, "edge")};
            } else if (*action == "set_power_ref") {
                reject_unknown_keys(e, path, {"t", "action", "node", "p_ref"});
                ev.action = SetPowerRef{get_id(e, path, "node"), get_number(e, path, "p_ref")};
            } else if (*action == "set_voltage_ref") {
                reject_unknown_keys(e, path, {"t", "action", "node", "v_set"});
                ev.action = SetVoltageRef{get_id(e, path, "node"), get_number(e, path, "v_set")};
            } else {
                throw ParseError(child(path, "action"), "expected close_line, set_power_ref or set_voltage_ref");
            }
            sc.schedule.events.push_back(std::move(ev));
        }
    }

    if (auto st = j.find("settle"); st != j.end()) {
        require_object(*st, "/settle");
        reject_unknown_keys(*st, "/settle", {"t_after", "tol"});
        sc.settle_after = get_number_or(*st, "/settle", "t_after", sc.settle_after);
        sc.settle_tol = get_number_or(*st, "/settle", "tol", sc.settle_tol);
    }
    return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("/", std::string("invalid JSON: ") + e.what());
    }
    return load_scenario(j, path.parent_path());
}

VectorXd black_start_state(const AssembledSystem& sys, double v_init) {
    VectorXd x = VectorXd::Zero(sys.dimension());
    x.segment(sys.vp_offset(), sys.n_power()).setConstant(v_init);
    return x;
}

AssembledSystem final_configuration(const AssembledSystem& sys, const EventSchedule& schedule) {
    validate_schedule(schedule, sys);
    Configuration cfg = initial_configuration(sys, schedule);
    for (const auto& ev : schedule.events) apply(ev.action, sys, cfg);
    AssembledSystem out = sys;
    out.P_ref = cfg.P_ref;
    out.S = cfg.S;
    out.V_V = cfg.V_V;
    out.E0 = cfg.E0;
    return out;
}

SimulationTrace simulate(const AssembledSystem& sys, const EventSchedule& schedule, const VectorXd& x_init,
                         double t_end, const SimulationOptions& opts) {
    validate_schedule(schedule, sys);
    if (x_init.size() != sys.dimension() || !x_init.allFinite()) throw ValidationError("initial state is not a finite state vector");
    if (!(t_end > 0.0) || !(opts.dt_out > 0.0)) throw ValidationError("t_end and dt_out must be positive");

    Configuration cfg = initial_configuration(sys, schedule);
    const Index be = sys.n_branch_states();
    const Index np = sys.n_power();
    const Index vp = sys.vp_offset();
    const Index ic = sys.ic_offset();
    for (Index k = 0; k < be; ++k)
        if (cfg.row_mask[k] == 0.0 && x_init[k] != 0.0)
            throw ValidationError("initial state carries current on a line that is open at t = 0");

    const VectorXd m_inv = sys.m_diag.cwiseInverse();
    OdeSystem ode;
    ode.f = [&](const VectorXd& x) {
        VectorXd f = sys.Phi * x + cfg.E0;
        for (Index k = 0; k < np; ++k) f[ic + k] += cfg.S[k] / clamp_voltage(x[vp + k]) + sys.K_droop[k];
        f = f.cwiseProduct(m_inv);
        f.head(be) = f.head(be).cwiseProduct(cfg.row_mask);
        return f;
    };
    ode.jacobian = [&](const VectorXd& x) {
        MatrixXd jm = sys.Phi;
        for (Index k = 0; k < np; ++k) {
            const double v = x[vp + k];
            if (std::abs(v) >= kVoltageFloor) jm(ic + k, vp + k) += -cfg.S[k] / (v * v);
        }
        jm = m_inv.asDiagonal() * jm;
        for (Index k = 0; k < be; ++k)
            if (cfg.row_mask[k] == 0.0) jm.row(k).setZero();
        return jm;
    };

    SimulationTrace trace;
    std::vector<bool> clamped(static_cast<std::size_t>(np), false);
    auto record = [&](double t, const VectorXd& x) {
        trace.t.push_back(t);
        trace.x.push_back(x);
        for (Index k = 0; k < np; ++k) {
            const bool below = std::abs(x[vp + k]) < kVoltageFloor;
            if (below && !clamped[static_cast<std::size_t>(k)])
                trace.warnings.push_back("t = " + fmt(t) + " s: voltage at node " + sys.power_ids[static_cast<std::size_t>(k)] +
                                         " is " + fmt(x[vp + k]) + " pu, below the floor; injection clamped");
            clamped[static_cast<std::size_t>(k)] = below;
        }
    };

    const long n_out = static_cast<long>(std::floor(t_end / opts.dt_out + 1e-9));
    std::vector<double> outputs;
    for (long k = 1; k <= n_out; ++k) outputs.push_back(static_cast<double>(k) * opts.dt_out);
    if (outputs.empty() || outputs.back() < t_end - 1e-12) outputs.push_back(t_end);
    else outputs.back() = std::min(outputs.back(), t_end);

    VectorXd x = x_init;
    std::size_t next_event = 0;
    auto apply_due = [&](double t) {
        while (next_event < schedule.events.size() && schedule.events[next_event].t <= t) {
            const auto& ev = schedule.events[next_event++];
            LoggedEvent log{ev.t, describe(ev.action), x, x};
            apply(ev.action, sys, cfg);
            log.x_after = x;
            trace.events.push_back(std::move(log));
        }
    };

    apply_due(0.0);
    record(0.0, x);

    RosenbrockOptions ropts;
    ropts.rtol = opts.rtol;
    ropts.atol = opts.atol;

    double t = 0.0;
    std::size_t out_idx = 0;
    while (t < t_end) {
        const double seg_end = next_event < schedule.events.size() ? std::min(schedule.events[next_event].t, t_end) : t_end;
        std::vector<double> stops;
        while (out_idx < outputs.size() && outputs[out_idx] < seg_end - 1e-12) stops.push_back(outputs[out_idx++]);
        if (out_idx < outputs.size() && std::abs(outputs[out_idx] - seg_end) <= 1e-12) ++out_idx;
        stops.push_back(seg_end);

        if (opts.integrator == IntegratorKind::implicit)
            x = rosenbrock_integrate(ode, x, t, stops, record, ropts, trace.stats);
        else
            x = rk4_integrate(ode, x, t, stops, record, opts.rk_dt, trace.stats);
        t = seg_end;
        apply_due(t);
    }
    for (; next_event < schedule.events.size(); ++next_event)
        trace.warnings.push_back("event at t = " + fmt(schedule.events[next_event].t) + " s lies beyond t_end and was not applied");
    return trace;
}

SettleResult settle_check(const SimulationTrace& trace, const VectorXd& x0, double t_after, double tol) {
    SettleResult out;
    bool any = false;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        if (trace.t[i] < t_after) continue;
        any = true;
        const double d = (trace.x[i] - x0).cwiseAbs().maxCoeff();
        if (d >= out.distance) {
            out.distance = d;
            out.t_worst = trace.t[i];
        }
    }
    out.pass = any && out.distance < tol;
    return out;
}

LyapunovSeries lyapunov_monitor(const SimulationTrace& trace, const MatrixXd& q, const AssembledSystem& sys,
                                const VectorXd& x0, double delta, double t_after, double rel_slack, double abs_slack) {
    LyapunovSeries out;
    const Index vp = sys.vp_offset();
    const Index np = sys.n_power();
    double prev = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        if (trace.t[i] < t_after) continue;
        const VectorXd& x = trace.x[i];
        const bool inside = (x.segment(vp, np) - x0.segment(vp, np)).cwiseAbs().maxCoeff() <= delta &&
                            (x.segment(vp, np).array().abs() >= kVoltageFloor).all();
        const double w = inside ? lyapunov_value(q, sys, x) : std::numeric_limits<double>::quiet_NaN();
        out.t.push_back(trace.t[i]);
        out.w.push_back(w);
        out.in_ball.push_back(inside);
        if (!inside) {
            ++out.out_of_ball;
            have_prev = false;
            continue;
        }
        if (have_prev && w > prev * (1.0 + rel_slack) + abs_slack) {
            ++out.violations;
            out.max_increase = std::max(out.max_increase, w - prev);
            out.non_increasing = false;
        }
        prev = w;
        have_prev = true;
    }
    return out;
}

} // namespace mtdc
