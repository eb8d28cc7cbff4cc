#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtdc/grid.hpp"

namespace mtdc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Voltage below which the power-injection map is treated as singular.
inline constexpr double kVoltageFloor = 0.1;

/// The network written as M x' = Phi x + h0(x) + E0.
///
/// State ordering is x = (I_E, I_c, V_P). I_E is branch-major: all edges of
/// sub-branch 1, then all edges of sub-branch 2, and so on, so that
/// K_P = 1_B (x) A_P is a plain Kronecker product.
///
/// Immutable after assemble(); safe to share read-only between threads.
struct AssembledSystem {
    int branch_count = 0;
    std::vector<std::string> edge_ids;
    std::vector<std::string> power_ids;
    std::vector<std::string> voltage_ids;

    MatrixXd A_V;  // E x V incidence
    MatrixXd A_P;  // E x P incidence
    MatrixXd K_V;  // BE x V
    MatrixXd K_P;  // BE x P

    VectorXd L;    // BE, diagonal of L (s)
    VectorXd R;    // BE, diagonal of R (pu)
    VectorXd C;    // P, converter plus attached cable shunt halves (pu*s)
    VectorXd G_c;  // P, attached cable shunt conductance halves (pu)
    VectorXd tau;  // P, converter time constants (s)

    VectorXd m_diag;  // diagonal of M = blkdiag(L, tau, C)
    MatrixXd Phi;
    VectorXd E0;

    VectorXd P_ref;
    VectorXd V_ref;
    VectorXd K_droop;  // diagonal of K_P (droop)
    VectorXd S;        // P_ref - K_droop .* V_ref
    VectorXd V_V;

    Index n_branch_states() const { return K_P.rows(); }
    Index n_power() const { return A_P.cols(); }
    Index n_voltage() const { return A_V.cols(); }
    Index dimension() const { return m_diag.size(); }

    Index ic_offset() const { return n_branch_states(); }
    Index vp_offset() const { return n_branch_states() + n_power(); }

    /// Dense M, for inspection and tests only.
    MatrixXd mass_matrix() const { return m_diag.asDiagonal(); }

    /// Human-readable state labels in state order.
    std::vector<std::string> state_names() const;

    /// Index of a branch current in the state vector.
    Index branch_state(Index edge, Index branch) const { return branch * static_cast<Index>(edge_ids.size()) + edge; }
};

AssembledSystem assemble(const GridSpec& spec);

/// S = P_ref - K .* V_ref.
VectorXd power_offset(const VectorXd& p_ref, const VectorXd& v_ref, const VectorXd& k_droop);

/// H(V) = diag(V)^-1 (S + K V), componentwise s_k / v_k + kappa_k.
/// Throws DomainError when |v_k| < kVoltageFloor. `node_ids` names the offending node.
VectorXd injection_current(const VectorXd& v_p, const VectorXd& s, const VectorXd& k_droop,
                           const std::vector<std::string>* node_ids = nullptr);

/// dH/dV = -diag(S / V^2).
VectorXd injection_jacobian_diagonal(const VectorXd& v_p, const VectorXd& s);

/// x' = M^-1 (Phi x + h0(x) + E0). Throws DomainError on a voltage below the floor.
VectorXd rhs(const VectorXd& x, const AssembledSystem& sys);

/// Phi x + h0(x) + E0 without the M^-1 scaling (the equilibrium residual vector).
VectorXd unscaled_rhs(const VectorXd& x, const AssembledSystem& sys);

/// Analytic Jacobian of rhs() at x.
MatrixXd rhs_jacobian(const VectorXd& x, const AssembledSystem& sys);

} // namespace mtdc
