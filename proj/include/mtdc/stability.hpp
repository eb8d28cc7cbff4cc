#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtdc/assembly.hpp"
#include "mtdc/lmi.hpp"

namespace mtdc {

/// Model in z = x - x0. Only the V_P part of z enters the Jacobian.
struct IncrementalModel {
    const AssembledSystem* sys = nullptr;
    VectorXd x0;
    double delta_a = 0.5;

    VectorXd v_p0() const { return x0.segment(sys->vp_offset(), sys->n_power()); }
};

/// Checks that x0 is an equilibrium (residual < 1e-9) and that the ball keeps
/// every power-node voltage above the floor. Throws ValidationError.
IncrementalModel make_incremental_model(const AssembledSystem& sys, const VectorXd& x0, double delta_a);

/// M^-1 (Phi + dh/dz) at z_{V_P}; dH/dz = -diag(S / (V_P0 + z)^2).
MatrixXd jacobian_at(const IncrementalModel& inc, const VectorXd& z_vp);

/// The 2P points +/- delta_a e_k.
std::vector<VectorXd> boundary_points(const IncrementalModel& inc);

/// Uniform points on the sphere of radius delta_a (denser sampling option).
std::vector<VectorXd> random_boundary_points(const IncrementalModel& inc, int count, std::uint64_t seed);

struct JacobianSample {
    MatrixXd jacobian;
    double spectral_abscissa = 0.0;
};

/// Jacobians and spectral abscissas at every point, in order.
std::vector<JacobianSample> evaluate_jacobians(const IncrementalModel& inc, const std::vector<VectorXd>& points,
                                               Execution execution = Execution::parallel);

/// W = f(x)^T Q f(x) with f = rhs.
double lyapunov_value(const MatrixXd& q, const AssembledSystem& sys, const VectorXd& x);

enum class CertificateStatus { certified, hurwitz_only, failed };
std::string to_string(CertificateStatus s);

struct StabilityCertificate {
    CertificateStatus status = CertificateStatus::failed;
    double delta_a = 0.0;
    std::vector<VectorXd> sample_points;  // z_{V_P}; the first one is z = 0 when the centre is included
    std::vector<MatrixXd> jacobians;
    std::vector<double> spectral_abscissas;
    MatrixXd Q;
    VectorXd q_eigenvalues;
    std::vector<MatrixXd> psi;
    std::vector<VectorXd> psi_eigenvalues;
    double min_eig_q = 0.0;
    double max_eig_psi = 0.0;
    LmiResult lmi;
};

struct CertifyOptions {
    bool include_center = true;
    int random_points = 0;
    std::uint64_t seed = 0;
    LmiOptions lmi;
};

/// Samples the ball boundary, checks every Jacobian is Hurwitz and solves the
/// common-Lyapunov LMI. The LMI runs in coordinates scaled by sqrt(diag M).
StabilityCertificate certify(const IncrementalModel& inc, const CertifyOptions& opts = {});

/// Re-checks a certificate from Q and the stored Jacobians only.
bool verify_certificate(const StabilityCertificate& cert, double eps = 1e-6, double psi_slack = 1e-9);

} // namespace mtdc
