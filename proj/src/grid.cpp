#include "mtdc/grid.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "mtdc/errors.hpp"

namespace mtdc {

using nlohmann::json;

namespace {

using namespace detail;

struct CableType {
    std::vector<BranchParams> branches;
    ShuntParams shunt;
};

std::vector<BranchParams> parse_branches(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path, "expected an array of branches");
    std::vector<BranchParams> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = child(path, i);
        require_object(j[i], p);
        reject_unknown_keys(j[i], p, {"r_ohm_per_km", "l_h_per_km"});
        out.push_back({get_number(j[i], p, "r_ohm_per_km"), get_number(j[i], p, "l_h_per_km")});
    }
    return out;
}

ShuntParams parse_shunt(const json& j, const std::string& path) {
    require_object(j, path);
    reject_unknown_keys(j, path, {"c_f_per_km", "g_s_per_km"});
    return {get_number_or(j, path, "c_f_per_km", 0.0), get_number_or(j, path, "g_s_per_km", 0.0)};
}

std::map<std::string, CableType> parse_cable_types(const json& j, const std::string& path) {
    require_object(j, path);
    std::map<std::string, CableType> out;
    for (const auto& [name, value] : j.items()) {
        const auto p = child(path, name);
        require_object(value, p);
        reject_unknown_keys(value, p, {"branches", "shunt"});
        if (!value.contains("branches")) throw ParseError(child(p, "branches"), "missing required array");
        CableType type;
        type.branches = parse_branches(value["branches"], child(p, "branches"));
        if (value.contains("shunt")) type.shunt = parse_shunt(value["shunt"], child(p, "shunt"));
        out.emplace(name, std::move(type));
    }
    return out;
}

NodeSpec parse_node(const json& j, const std::string& path) {
    require_object(j, path);
    NodeSpec node;
    node.id = get_id(j, path, "id");
    auto kind = j.find("kind");
    if (kind == j.end() || !kind->is_string())
        throw ParseError(child(path, "kind"), "expected \"power\" or \"voltage\"");
    if (*kind == "voltage") {
        reject_unknown_keys(j, path, {"id", "kind", "v_set"});
        node.kind = VoltageNode{get_number(j, path, "v_set")};
    } else if (*kind == "power") {
        reject_unknown_keys(j, path, {"id", "kind", "p_ref", "v_ref", "droop_gain", "tau_s", "c_conv_pu_s"});
        PowerNode p;
        p.p_ref = get_number(j, path, "p_ref");
        p.v_ref = get_number_or(j, path, "v_ref", p.v_ref);
        p.droop_gain = get_number_or(j, path, "droop_gain", p.droop_gain);
        p.tau_s = get_number_or(j, path, "tau_s", p.tau_s);
        p.c_conv = get_number_or(j, path, "c_conv_pu_s", p.c_conv);
        node.kind = p;
    } else {
        throw ParseError(child(path, "kind"), "expected \"power\" or \"voltage\"");
    }
    return node;
}

EdgeSpec parse_edge(const json& j, const std::string& path, const std::map<std::string, CableType>& types,
                    std::size_t index) {
    require_object(j, path);
    reject_unknown_keys(j, path, {"id", "from", "to", "length_km", "cable", "branches", "shunt"});
    EdgeSpec edge;
    edge.from = get_id(j, path, "from");
    edge.to = get_id(j, path, "to");
    edge.id = j.contains("id") ? get_id(j, path, "id") : edge.from + "-" + edge.to + "#" + std::to_string(index);
    edge.length_km = get_number(j, path, "length_km");

    if (auto cable = j.find("cable"); cable != j.end()) {
        if (!cable->is_string()) throw ParseError(child(path, "cable"), "expected a cable type name");
        auto it = types.find(cable->get<std::string>());
        if (it == types.end()) throw ParseError(child(path, "cable"), "unknown cable type '" + cable->get<std::string>() + "'");
        edge.branches = it->second.branches;
        edge.shunt = it->second.shunt;
    }
    if (j.contains("branches")) edge.branches = parse_branches(j["branches"], child(path, "branches"));
    if (j.contains("shunt")) edge.shunt = parse_shunt(j["shunt"], child(path, "shunt"));
    if (edge.branches.empty()) throw ParseError(child(path, "branches"), "edge has no branches (give \"cable\" or \"branches\")");
    return edge;
}

} // namespace

std::optional<std::size_t> GridSpec::node_index(std::string_view id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return i;
    return std::nullopt;
}

std::optional<std::size_t> GridSpec::edge_index(std::string_view id) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].id == id) return i;
    return std::nullopt;
}

std::size_t GridSpec::power_node_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const NodeSpec& n) { return n.is_power(); }));
}

std::size_t GridSpec::voltage_node_count() const { return nodes.size() - power_node_count(); }

std::size_t GridSpec::state_dimension() const {
    return static_cast<std::size_t>(branch_count) * edges.size() + 2 * power_node_count();
}

GridSpec load_grid_json(const json& config) {
    require_object(config, "");
    reject_unknown_keys(config, "", {"schema", "bases", "nodes", "edges", "branch_count", "cable_types", "name", "description"});
    if (auto schema = config.find("schema"); schema != config.end() && (!schema->is_number_integer() || *schema != 1))
        throw ParseError("/schema", "unsupported schema version (expected 1)");

    GridSpec spec;
    if (!config.contains("bases")) throw ParseError("/bases", "missing required object");
    const auto& b = config["bases"];
    require_object(b, "/bases");
    reject_unknown_keys(b, "/bases", {"p_base_w", "v_base_dc_v", "v_base_ac_v"});
    spec.bases.p_base_w = get_number(b, "/bases", "p_base_w");
    spec.bases.v_base_dc_v = get_number(b, "/bases", "v_base_dc_v");
    spec.bases.v_base_ac_v = get_number_or(b, "/bases", "v_base_ac_v", spec.bases.v_base_ac_v);

    auto bc = config.find("branch_count");
    if (bc == config.end() || !bc->is_number_integer())
        throw ParseError("/branch_count", "expected a positive integer");
    spec.branch_count = bc->get<int>();

    std::map<std::string, CableType> types;
    if (config.contains("cable_types")) types = parse_cable_types(config["cable_types"], "/cable_types");

    if (!config.contains("nodes") || !config["nodes"].is_array()) throw ParseError("/nodes", "expected an array");
    for (std::size_t i = 0; i < config["nodes"].size(); ++i)
        spec.nodes.push_back(parse_node(config["nodes"][i], child("/nodes", i)));

    if (!config.contains("edges") || !config["edges"].is_array()) throw ParseError("/edges", "expected an array");
    for (std::size_t i = 0; i < config["edges"].size(); ++i)
        spec.edges.push_back(parse_edge(config["edges"][i], child("/edges", i), types, i));

    validate(spec);
    return spec;
}

GridSpec load_grid(std::string_view config_text) {
    json j;
    try {
        j = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw ParseError("/", std::string("invalid JSON: ") + e.what());
    }
    return load_grid_json(j);
}

GridSpec load_grid_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open grid config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_grid(ss.str());
}

void validate(const GridSpec& spec) {
    const auto& bases = spec.bases;
    if (!(bases.p_base_w > 0) || !(bases.v_base_dc_v > 0) || !(bases.v_base_ac_v > 0))
        throw ValidationError("bases must be positive");
    if (spec.branch_count < 1) throw ValidationError("branch_count must be a positive integer");

    std::set<std::string> ids;
    for (const auto& node : spec.nodes) {
        if (!ids.insert(node.id).second) throw ValidationError("duplicate node id '" + node.id + "'");
        if (node.is_voltage()) {
            if (!(node.voltage().v_set > 0)) throw ValidationError("node '" + node.id + "': v_set must be > 0");
        } else {
            const auto& p = node.power();
            if (!(p.v_ref > 0)) throw ValidationError("node '" + node.id + "': v_ref must be > 0");
            if (!(p.tau_s > 0)) throw ValidationError("node '" + node.id + "': tau_s must be > 0");
            if (!(p.droop_gain >= 0)) throw ValidationError("node '" + node.id + "': droop_gain must be >= 0");
            if (!(p.c_conv > 0)) throw ValidationError("node '" + node.id + "': c_conv_pu_s must be > 0");
        }
    }
    if (spec.voltage_node_count() == 0) throw ValidationError("grid needs at least one voltage-controlled node");
    if (spec.power_node_count() == 0) throw ValidationError("grid needs at least one power-controlled node");

    std::set<std::string> edge_ids;
    for (const auto& edge : spec.edges) {
        const auto where = "edge '" + edge.id + "'";
        if (!edge_ids.insert(edge.id).second) throw ValidationError("duplicate edge id '" + edge.id + "'");
        if (!ids.count(edge.from)) throw ValidationError(where + " references unknown node '" + edge.from + "'");
        if (!ids.count(edge.to)) throw ValidationError(where + " references unknown node '" + edge.to + "'");
        if (edge.from == edge.to) throw ValidationError(where + " is a self-loop");
        if (!(edge.length_km > 0)) throw ValidationError(where + ": length must be > 0");
        if (edge.branches.size() != static_cast<std::size_t>(spec.branch_count))
            throw ValidationError(where + " has " + std::to_string(edge.branches.size()) + " branches, expected " +
                                  std::to_string(spec.branch_count));
        for (const auto& br : edge.branches)
            if (!(br.r_per_km > 0) || !(br.l_per_km > 0)) throw ValidationError(where + ": branch r and l must be > 0");
        if (!(edge.shunt.c_per_km >= 0) || !(edge.shunt.g_per_km >= 0))
            throw ValidationError(where + ": shunt c and g must be >= 0");
    }

    // Connectivity by union-find over node indices.
    std::vector<std::size_t> parent(spec.nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (const auto& edge : spec.edges) parent[find(*spec.node_index(edge.from))] = find(*spec.node_index(edge.to));
    for (std::size_t i = 1; i < spec.nodes.size(); ++i)
        if (find(i) != find(0))
            throw ValidationError("grid is disconnected: node '" + spec.nodes[i].id + "' is not reachable from '" +
                                  spec.nodes[0].id + "'");
}

json to_json(const GridSpec& spec) {
    json j;
    j["schema"] = 1;
    j["bases"] = {{"p_base_w", spec.bases.p_base_w},
                  {"v_base_dc_v", spec.bases.v_base_dc_v},
                  {"v_base_ac_v", spec.bases.v_base_ac_v}};
    j["branch_count"] = spec.branch_count;
    j["nodes"] = json::array();
    for (const auto& node : spec.nodes) {
        if (node.is_voltage()) {
            j["nodes"].push_back({{"id", node.id}, {"kind", "voltage"}, {"v_set", node.voltage().v_set}});
        } else {
            const auto& p = node.power();
            j["nodes"].push_back({{"id", node.id},
                                  {"kind", "power"},
                                  {"p_ref", p.p_ref},
                                  {"v_ref", p.v_ref},
                                  {"droop_gain", p.droop_gain},
                                  {"tau_s", p.tau_s},
                                  {"c_conv_pu_s", p.c_conv}});
        }
    }
    j["edges"] = json::array();
    for (const auto& edge : spec.edges) {
        json branches = json::array();
        for (const auto& br : edge.branches) branches.push_back({{"r_ohm_per_km", br.r_per_km}, {"l_h_per_km", br.l_per_km}});
        j["edges"].push_back({{"id", edge.id},
                              {"from", edge.from},
                              {"to", edge.to},
                              {"length_km", edge.length_km},
                              {"branches", branches},
                              {"shunt", {{"c_f_per_km", edge.shunt.c_per_km}, {"g_s_per_km", edge.shunt.g_per_km}}}});
    }
    return j;
}

void set_droop_gain(GridSpec& spec, std::string_view node_id, double gain) {
    auto idx = spec.node_index(node_id);
    if (!idx) throw ValidationError("droop override for unknown node '" + std::string(node_id) + "'");
    auto& node = spec.nodes[*idx];
    if (!node.is_power()) throw ValidationError("droop override for non-power node '" + node.id + "'");
    if (!(gain >= 0)) throw ValidationError("droop gain must be >= 0");
    node.power().droop_gain = gain;
}

PerUnitEdge to_per_unit(const EdgeSpec& edge, const Bases& bases) {
    const double z = bases.z_base_dc();
    PerUnitEdge out;
    out.branches.reserve(edge.branches.size());
    for (const auto& br : edge.branches)
        out.branches.push_back({br.r_per_km * edge.length_km / z, br.l_per_km * edge.length_km / z});
    out.c = edge.shunt.c_per_km * edge.length_km * z;
    out.g = edge.shunt.g_per_km * edge.length_km * z;
    return out;
}

} // namespace mtdc
