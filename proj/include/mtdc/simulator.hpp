#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mtdc/assembly.hpp"
#include "mtdc/integrators.hpp"

namespace mtdc {

struct CloseLine {
    std::string edge;
};
struct SetPowerRef {
    std::string node;
    double p_ref = 0.0;
};
struct SetVoltageRef {
    std::string node;
    double v_set = 1.0;
};
using EventAction = std::variant<CloseLine, SetPowerRef, SetVoltageRef>;

struct Event {
    double t = 0.0;
    EventAction action;
};

std::string describe(const EventAction& a);

/// Lines named by a CloseLine event are open until that event; every other line
/// is closed from t = 0. Power references listed in `initial_power_refs`
/// override the grid values at t = 0.
struct EventSchedule {
    std::vector<Event> events;
    std::map<std::string, double> initial_power_refs;
};

/// Throws ValidationError on unordered times, unknown ids, wrong node kinds or a line closed twice.
void validate_schedule(const EventSchedule& schedule, const AssembledSystem& sys);

enum class InitialCondition { black_start, equilibrium };

struct Scenario {
    std::optional<std::filesystem::path> grid;  // resolved against the scenario file's folder
    EventSchedule schedule;
    double t_end = 12.0;
    double dt_out = 1e-3;
    InitialCondition initial = InitialCondition::black_start;
    double initial_voltage = kVoltageFloor;
    double settle_after = 9.0;
    double settle_tol = 1e-3;
};

Scenario load_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Scenario load_scenario_file(const std::filesystem::path& path);

enum class IntegratorKind { implicit, rk };

struct SimulationOptions {
    IntegratorKind integrator = IntegratorKind::implicit;
    double dt_out = 1e-3;
    double rtol = 1e-9;
    double atol = 1e-11;
    double rk_dt = 1e-5;  // upper bound for the explicit fallback
};

struct LoggedEvent {
    double t = 0.0;
    std::string description;
    /// State just before and just after the event is applied.
    VectorXd x_before;
    VectorXd x_after;
};

struct SimulationTrace {
    std::vector<double> t;
    std::vector<VectorXd> x;
    std::vector<LoggedEvent> events;
    std::vector<std::string> warnings;
    IntegrationStats stats;

    const VectorXd& final_state() const { return x.back(); }
};

/// Integrates M x' = Phi x + h0(x) + E0 piecewise between events. Open lines are
/// masked: their current rows have zero derivative and stay exactly at zero.
/// Below the voltage floor the injection uses the clamped voltage and a warning is logged.
SimulationTrace simulate(const AssembledSystem& sys, const EventSchedule& schedule, const VectorXd& x_init,
                         double t_end, const SimulationOptions& opts = {});

/// All currents zero, every power-node voltage at v_init.
VectorXd black_start_state(const AssembledSystem& sys, double v_init = kVoltageFloor);

/// The grid after every event in the schedule has been applied.
AssembledSystem final_configuration(const AssembledSystem& sys, const EventSchedule& schedule);

struct SettleResult {
    bool pass = false;
    double distance = 0.0;  // max over samples of ||x(t) - x0||_inf
    double t_worst = 0.0;
};

SettleResult settle_check(const SimulationTrace& trace, const VectorXd& x0, double t_after, double tol);

struct LyapunovSeries {
    std::vector<double> t;
    std::vector<double> w;
    std::vector<bool> in_ball;
    bool non_increasing = true;
    int violations = 0;
    double max_increase = 0.0;
    int out_of_ball = 0;
};

/// W(t) = f(x)^T Q f(x) on samples with t >= t_after. Consecutive in-ball samples
/// are compared; W_k > W_{k-1} (1 + rel_slack) + abs_slack counts as a violation.
LyapunovSeries lyapunov_monitor(const SimulationTrace& trace, const MatrixXd& q, const AssembledSystem& sys,
                                const VectorXd& x0, double delta, double t_after, double rel_slack = 1e-6,
                                double abs_slack = 1e-20);

} // namespace mtdc
