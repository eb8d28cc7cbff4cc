#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mtdc/assembly.hpp"
#include "mtdc/parallel.hpp"

namespace mtdc {

/// Equilibrium conditions reduced to the power-node voltages:
///   H(V) - Phi_P V - E_P = 0,  Phi_P = K_P^T R^-1 K_P + G_c,  E_P = K_P^T R^-1 K_V V_V.
struct ReducedSystem {
    MatrixXd phi_p;
    VectorXd e_p;
    VectorXd s;
    VectorXd k_droop;
    double delta = 0.5;  // radius of the ball |v_k - 1| <= delta

    Eigen::LLT<MatrixXd> phi_p_llt;

    // Lifting data: I_E = R^-1 (K_P V_P + K_V V_V).
    VectorXd r_inv;
    MatrixXd k_p;
    VectorXd kv_vv;

    std::vector<std::string> power_ids;

    Index size() const { return phi_p.rows(); }
};

/// Builds the reduced system and checks, numerically, that its residual equals the
/// capacitor-voltage equilibrium equation of the full system. Throws ValidationError if delta is not in (0,1).
ReducedSystem reduce(const AssembledSystem& sys, double delta = 0.5);

struct ContractionBound {
    double alpha = 0.0;      // spectral norm of Phi_P^-1 times Euclidean norm of S, over (1-delta)^2
    double xi = 0.0;         // Lipschitz bound of H on the ball, Euclidean
    double alpha_inf = 0.0;  // same bound in the infinity norm
    double xi_inf = 0.0;
};

ContractionBound contraction_constant(const ReducedSystem& red);

/// T(V) = Phi_P^-1 (H(V) - E_P).
VectorXd fixed_point_map(const ReducedSystem& red, const VectorXd& v);

/// Residual H(V) - Phi_P V - E_P.
VectorXd reduced_residual(const ReducedSystem& red, const VectorXd& v);

struct IterationRecord {
    int iteration = 0;
    double error = 0.0;      // Euclidean norm of V(k) - V(k-1)
    double error_max = 0.0;  // max norm of the same difference
    VectorXd iterate;
};

struct FixedPointOptions {
    double tol = 1e-12;  // stop when the max-norm step is at or below tol
    int max_iter = 50;
    bool force = false;  // iterate even when alpha >= 1
};

struct EquilibriumResult {
    VectorXd v_p;
    VectorXd i_e;
    VectorXd i_c;
    double alpha = 0.0;
    double alpha_inf = 0.0;
    double delta = 0.0;
    std::vector<IterationRecord> iterations;
    double residual_norm = 0.0;  // max-norm over all three equilibrium equations
    bool converged = false;
    /// ||T(v0) - v0||_inf <= (1 - alpha_inf) delta, the self-map condition on the ball.
    bool self_map_ok = false;

    /// Full state x0 = (I_E, I_c, V_P).
    VectorXd state() const;
};

/// Picard iteration V <- T(V) from v0. Throws CertificationError when alpha >= 1 and
/// !opts.force; DivergenceError when an iterate leaves the ball.
EquilibriumResult solve_fixed_point(const ReducedSystem& red, const VectorXd& v0, const FixedPointOptions& opts = {});

/// Starts from the all-ones voltage vector.
EquilibriumResult solve_fixed_point(const ReducedSystem& red, const FixedPointOptions& opts = {});

/// Lifts a power-node voltage vector to the full equilibrium state.
VectorXd lift_state(const ReducedSystem& red, const VectorXd& v_p);

/// Max-norm of the three equilibrium equations at x (all derivatives zero).
double equilibrium_residual(const AssembledSystem& sys, const VectorXd& x);

/// Damped Newton on the reduced residual with Jacobian -diag(S/V^2) - Phi_P.
/// Independent cross-check of the fixed point; throws OracleFailure on non-convergence.
VectorXd newton_oracle(const ReducedSystem& red, const VectorXd& v0, double tol = 1e-13, int max_iter = 60);

/// Points drawn uniformly from the box |v_k - 1| <= delta.
std::vector<VectorXd> random_starts(const ReducedSystem& red, int count, std::uint64_t seed);

struct MultiStartResult {
    std::vector<VectorXd> solutions;
    std::vector<int> iterations;
    std::vector<std::string> failures;  // empty string when the start converged
    int converged = 0;
    double max_pairwise_distance = 0.0;  // max-norm, over converged starts
};

/// Picard from every start. Each start is independent; results are stored per start
/// so the serial and parallel runs are identical.
MultiStartResult multi_start_picard(const ReducedSystem& red, const std::vector<VectorXd>& starts,
                                    const FixedPointOptions& opts = {}, Execution execution = Execution::parallel);

} // namespace mtdc
