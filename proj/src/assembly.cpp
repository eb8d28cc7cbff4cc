#include "mtdc/assembly.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "mtdc/errors.hpp"

namespace mtdc {

std::vector<std::string> AssembledSystem::state_names() const {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(dimension()));
    for (int b = 0; b < branch_count; ++b)
        for (const auto& e : edge_ids) names.push_back("I_E[" + e + "][b" + std::to_string(b + 1) + "]");
    for (const auto& p : power_ids) names.push_back("I_c[" + p + "]");
    for (const auto& p : power_ids) names.push_back("V_P[" + p + "]");
    return names;
}

AssembledSystem assemble(const GridSpec& spec) {
    validate(spec);
    AssembledSystem sys;
    sys.branch_count = spec.branch_count;

    // Column index of every node inside its own class (voltage or power), in file order.
    std::vector<Index> column(spec.nodes.size());
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const auto& node = spec.nodes[i];
        if (node.is_power()) {
            column[i] = static_cast<Index>(sys.power_ids.size());
            sys.power_ids.push_back(node.id);
        } else {
            column[i] = static_cast<Index>(sys.voltage_ids.size());
            sys.voltage_ids.push_back(node.id);
        }
    }

    const Index E = static_cast<Index>(spec.edges.size());
    const Index B = spec.branch_count;
    const Index P = static_cast<Index>(sys.power_ids.size());
    const Index V = static_cast<Index>(sys.voltage_ids.size());

    sys.A_V = MatrixXd::Zero(E, V);
    sys.A_P = MatrixXd::Zero(E, P);
    sys.L.resize(B * E);
    sys.R.resize(B * E);
    sys.C = VectorXd::Zero(P);
    sys.G_c = VectorXd::Zero(P);
    sys.tau.resize(P);
    sys.P_ref.resize(P);
    sys.V_ref.resize(P);
    sys.K_droop.resize(P);
    sys.V_V.resize(V);

    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const auto& node = spec.nodes[i];
        const Index k = column[i];
        if (node.is_power()) {
            const auto& p = node.power();
            sys.C[k] = p.c_conv;
            sys.tau[k] = p.tau_s;
            sys.P_ref[k] = p.p_ref;
            sys.V_ref[k] = p.v_ref;
            sys.K_droop[k] = p.droop_gain;
        } else {
            sys.V_V[k] = node.voltage().v_set;
        }
    }

    for (Index e = 0; e < E; ++e) {
        const auto& edge = spec.edges[static_cast<std::size_t>(e)];
        sys.edge_ids.push_back(edge.id);
        const auto pu = to_per_unit(edge, spec.bases);

        const auto attach = [&](const std::string& id, double sign) {
            const auto i = *spec.node_index(id);
            const Index k = column[i];
            if (spec.nodes[i].is_power()) {
                sys.A_P(e, k) += sign;
                sys.C[k] += 0.5 * pu.c;
                sys.G_c[k] += 0.5 * pu.g;
            } else {
                // Shunt halves at a fixed-voltage node carry no state and are dropped.
                sys.A_V(e, k) += sign;
            }
        };
        attach(edge.from, +1.0);
        attach(edge.to, -1.0);

        for (Index b = 0; b < B; ++b) {
            sys.L[b * E + e] = pu.branches[static_cast<std::size_t>(b)].l;
            sys.R[b * E + e] = pu.branches[static_cast<std::size_t>(b)].r;
        }
    }

    const VectorXd ones_b = VectorXd::Ones(B);
    sys.K_V = Eigen::kroneckerProduct(ones_b, sys.A_V);
    sys.K_P = Eigen::kroneckerProduct(ones_b, sys.A_P);

    const Index BE = B * E;
    const Index n = BE + 2 * P;
    sys.m_diag.resize(n);
    sys.m_diag << sys.L, sys.tau, sys.C;

    sys.Phi = MatrixXd::Zero(n, n);
    sys.Phi.topLeftCorner(BE, BE) = (-sys.R).asDiagonal();
    sys.Phi.block(0, BE + P, BE, P) = sys.K_P;
    sys.Phi.block(BE, BE, P, P) = -MatrixXd::Identity(P, P);
    sys.Phi.block(BE + P, 0, P, BE) = -sys.K_P.transpose();
    sys.Phi.block(BE + P, BE, P, P) = MatrixXd::Identity(P, P);
    sys.Phi.block(BE + P, BE + P, P, P) = (-sys.G_c).asDiagonal();

    sys.E0 = VectorXd::Zero(n);
    sys.E0.head(BE) = sys.K_V * sys.V_V;

    sys.S = power_offset(sys.P_ref, sys.V_ref, sys.K_droop);
    return sys;
}

VectorXd power_offset(const VectorXd& p_ref, const VectorXd& v_ref, const VectorXd& k_droop) {
    return p_ref - k_droop.cwiseProduct(v_ref);
}

VectorXd injection_current(const VectorXd& v_p, const VectorXd& s, const VectorXd& k_droop,
                           const std::vector<std::string>* node_ids) {
    VectorXd h(v_p.size());
    for (Index k = 0; k < v_p.size(); ++k) {
        if (!(std::abs(v_p[k]) >= kVoltageFloor)) {
            const std::string id = node_ids ? (*node_ids)[static_cast<std::size_t>(k)] : "#" + std::to_string(k);
            throw DomainError(id, v_p[k]);
        }
        h[k] = s[k] / v_p[k] + k_droop[k];
    }
    return h;
}

VectorXd injection_jacobian_diagonal(const VectorXd& v_p, const VectorXd& s) {
    return -s.cwiseQuotient(v_p.cwiseAbs2());
}

VectorXd unscaled_rhs(const VectorXd& x, const AssembledSystem& sys) {
    VectorXd f = sys.Phi * x + sys.E0;
    const Index P = sys.n_power();
    f.segment(sys.ic_offset(), P) += injection_current(x.segment(sys.vp_offset(), P), sys.S, sys.K_droop, &sys.power_ids);
    return f;
}

VectorXd rhs(const VectorXd& x, const AssembledSystem& sys) {
    return unscaled_rhs(x, sys).cwiseQuotient(sys.m_diag);
}

MatrixXd rhs_jacobian(const VectorXd& x, const AssembledSystem& sys) {
    const Index P = sys.n_power();
    MatrixXd J = sys.Phi;
    const VectorXd v = x.segment(sys.vp_offset(), P);
    for (Index k = 0; k < P; ++k)
        if (!(std::abs(v[k]) >= kVoltageFloor)) throw DomainError(sys.power_ids[static_cast<std::size_t>(k)], v[k]);
    J.block(sys.ic_offset(), sys.vp_offset(), P, P).diagonal() += injection_jacobian_diagonal(v, sys.S);
    return sys.m_diag.cwiseInverse().asDiagonal() * J;
}

} // namespace mtdc
