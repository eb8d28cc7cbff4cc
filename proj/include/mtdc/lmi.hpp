#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtdc/parallel.hpp"

namespace mtdc {

struct LmiOptions {
    double eps = 1e-6;         // Q >= eps I after normalisation trace(Q) = n
    double psi_slack = 1e-9;   // accepted largest eigenvalue of any Psi_j
    double gap_tol = 1e-7;     // barrier duality-gap target
    int max_newton = 400;      // total Newton steps over all barrier stages
    bool stop_at_feasible = false;
    /// Positive diagonal T; the problem is solved for Q_hat = T^-1 Q T^-1 with J_hat = T J T^-1.
    /// Empty means T = I. A good choice is sqrt(diag M).
    Eigen::VectorXd scaling;
    Execution execution = Execution::parallel;
};

/// Result of the common-Lyapunov search. Margins are recomputed by explicit
/// symmetric eigendecomposition of the returned Q and of every J^T Q + Q J.
struct LmiResult {
    bool feasible = false;
    bool all_hurwitz = false;
    Eigen::MatrixXd Q;            // trace-normalised to n
    double margin = 0.0;          // barrier variable s at exit (scaled problem)
    double min_eig_q = 0.0;
    double max_eig_psi = 0.0;     // over all j
    int newton_steps = 0;
    int barrier_stages = 0;
    std::string message;
};

/// Finds Q = Q^T > 0 with J_j^T Q + Q J_j <= 0 for every j, by maximising s
/// subject to J_j^T Q + Q J_j <= -s I, Q >= eps I, trace(Q) = n with a log-det
/// barrier method. Returns infeasible immediately if any J_j is not Hurwitz.
LmiResult solve_common_lyapunov(const std::vector<Eigen::MatrixXd>& jacobians, const LmiOptions& opts = {});

/// Spectral abscissa max Re(lambda) via the general eigensolver.
double spectral_abscissa(const Eigen::MatrixXd& a);
bool is_hurwitz(const Eigen::MatrixXd& a);

struct PsiEval {
    Eigen::MatrixXd psi;
    Eigen::VectorXd eigenvalues;  // ascending
};

/// Psi = J^T Q + Q J, symmetrised, with its sorted eigenvalues.
PsiEval psi_at(const Eigen::MatrixXd& q, const Eigen::MatrixXd& j);

/// Newton system of the barrier objective at (Q_hat, s). Exposed for the
/// serial/parallel benchmark and tests. Variables are the upper triangle of
/// Q_hat in column order followed by s. Returns false if some block is not
/// strictly positive definite.
struct LmiNewtonSystem {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd gradient;
    double barrier = 0.0;
};
bool lmi_newton_system(const std::vector<Eigen::MatrixXd>& scaled_jacobians, const Eigen::VectorXd& t2,
                       const Eigen::MatrixXd& q_hat, double s, double eps, double t, Execution execution,
                       LmiNewtonSystem& out);

} // namespace mtdc
