#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mtdc {

/// Per-unit bases. Cable data is entered in SI per km; everything else is per unit.
struct Bases {
    double p_base_w = 400e6;
    double v_base_dc_v = 400e3;
    double v_base_ac_v = 220e3;

    /// Z_base = V_base_dc^2 / P_base, in ohm.
    double z_base_dc() const { return v_base_dc_v * v_base_dc_v / p_base_w; }
};

struct VoltageNode {
    double v_set = 1.0;
};

struct PowerNode {
    double p_ref = 0.0;
    double v_ref = 1.0;
    double droop_gain = 0.0;  // K_P diagonal entry, pu
    double tau_s = 1.2e-3;    // converter current time constant
    double c_conv = 0.12;     // converter dc capacitance, pu*s
};

struct NodeSpec {
    std::string id;
    std::variant<VoltageNode, PowerNode> kind;

    bool is_power() const { return std::holds_alternative<PowerNode>(kind); }
    bool is_voltage() const { return std::holds_alternative<VoltageNode>(kind); }
    const PowerNode& power() const { return std::get<PowerNode>(kind); }
    PowerNode& power() { return std::get<PowerNode>(kind); }
    const VoltageNode& voltage() const { return std::get<VoltageNode>(kind); }
    VoltageNode& voltage() { return std::get<VoltageNode>(kind); }
};

struct BranchParams {
    double r_per_km = 0.0;  // ohm/km
    double l_per_km = 0.0;  // H/km
};

struct ShuntParams {
    double c_per_km = 0.0;  // F/km
    double g_per_km = 0.0;  // S/km
};

/// One hyper-edge: a cable with `branches.size()` parallel RL sub-branches and a pi shunt.
struct EdgeSpec {
    std::string id;
    std::string from;
    std::string to;
    double length_km = 0.0;
    std::vector<BranchParams> branches;
    ShuntParams shunt;
};

struct GridSpec {
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;
    Bases bases;
    int branch_count = 0;

    std::optional<std::size_t> node_index(std::string_view id) const;
    std::optional<std::size_t> edge_index(std::string_view id) const;
    std::size_t power_node_count() const;
    std::size_t voltage_node_count() const;
    /// Number of states in the assembled system: B*E + 2*P.
    std::size_t state_dimension() const;
};

/// Parses and validates a grid description (schema: docs/grid_schema.md).
/// Throws ParseError on schema violations and ValidationError on model violations.
GridSpec load_grid(std::string_view config_text);
GridSpec load_grid_json(const nlohmann::json& config);
GridSpec load_grid_file(const std::filesystem::path& path);

/// Checks the GridSpec invariants; throws ValidationError.
void validate(const GridSpec& spec);

/// Canonical JSON form (sorted keys, all defaults explicit). Stable across runs.
nlohmann::json to_json(const GridSpec& spec);

/// Overrides the droop gain of a power node. Throws ValidationError for unknown/non-power ids.
void set_droop_gain(GridSpec& spec, std::string_view node_id, double gain);

struct PerUnitBranch {
    double r = 0.0;
    double l = 0.0;  // seconds (H/ohm)
};

struct PerUnitEdge {
    std::vector<PerUnitBranch> branches;
    double c = 0.0;  // total shunt capacitance, pu*s
    double g = 0.0;  // total shunt conductance, pu
};

PerUnitEdge to_per_unit(const EdgeSpec& edge, const Bases& bases);

} // namespace mtdc
