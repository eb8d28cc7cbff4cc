#include "mtdc/stability.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "mtdc/errors.hpp"

namespace mtdc {

IncrementalModel make_incremental_model(const AssembledSystem& sys, const VectorXd& x0, double delta_a) {
    if (x0.size() != sys.dimension()) throw ValidationError("equilibrium state has the wrong dimension");
    if (!(delta_a > 0.0)) throw ValidationError("certification radius must be positive");
    const double res = unscaled_rhs(x0, sys).cwiseAbs().maxCoeff();
    if (!(res < 1e-9)) throw ValidationError("x0 is not an equilibrium (residual " + std::to_string(res) + ")");
    IncrementalModel inc{&sys, x0, delta_a};
    const VectorXd v = inc.v_p0();
    for (Index k = 0; k < v.size(); ++k)
        if (v[k] - delta_a < kVoltageFloor)
            throw ValidationError("certification ball reaches below the voltage floor at node '" +
                                  sys.power_ids[static_cast<std::size_t>(k)] + "'");
    return inc;
}

MatrixXd jacobian_at(const IncrementalModel& inc, const VectorXd& z_vp) {
    VectorXd x = inc.x0;
    x.segment(inc.sys->vp_offset(), inc.sys->n_power()) += z_vp;
    return rhs_jacobian(x, *inc.sys);
}

std::vector<VectorXd> boundary_points(const IncrementalModel& inc) {
    const Index p = inc.sys->n_power();
    std::vector<VectorXd> pts;
    for (Index k = 0; k < p; ++k)
        for (double sign : {+1.0, -1.0}) {
            VectorXd z = VectorXd::Zero(p);
            z[k] = sign * inc.delta_a;
            pts.push_back(z);
        }
    return pts;
}

std::vector<VectorXd> random_boundary_points(const IncrementalModel& inc, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const Index p = inc.sys->n_power();
    std::vector<VectorXd> pts;
    while (static_cast<int>(pts.size()) < count) {
        VectorXd z(p);
        for (Index k = 0; k < p; ++k) z[k] = normal(rng);
        const double nrm = z.norm();
        if (nrm < 1e-12) continue;
        pts.push_back(z * (inc.delta_a / nrm));
    }
    return pts;
}

std::vector<JacobianSample> evaluate_jacobians(const IncrementalModel& inc, const std::vector<VectorXd>& points,
                                               Execution execution) {
    const int count = static_cast<int>(points.size());
    std::vector<JacobianSample> out(points.size());
    // Exceptions cannot leave an OpenMP region; domain checks happen up front.
    for (const auto& z : points) {
        const VectorXd v = inc.v_p0() + z;
        for (Index k = 0; k < v.size(); ++k)
            if (!(std::abs(v[k]) >= kVoltageFloor)) throw DomainError(inc.sys->power_ids[static_cast<std::size_t>(k)], v[k]);
    }
#pragma omp parallel for schedule(static) if (execution == Execution::parallel)
    for (int i = 0; i < count; ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        s.jacobian = jacobian_at(inc, points[static_cast<std::size_t>(i)]);
        s.spectral_abscissa = spectral_abscissa(s.jacobian);
    }
    return out;
}

double lyapunov_value(const MatrixXd& q, const AssembledSystem& sys, const VectorXd& x) {
    const VectorXd f = rhs(x, sys);
    return f.dot(q * f);
}

std::string to_string(CertificateStatus s) {
    switch (s) {
    case CertificateStatus::certified: return "certified";
    case CertificateStatus::hurwitz_only: return "hurwitz-only";
    case CertificateStatus::failed: return "failed";
    }
    return "failed";
}

StabilityCertificate certify(const IncrementalModel& inc, const CertifyOptions& opts) {
    StabilityCertificate cert;
    cert.delta_a = inc.delta_a;
    if (opts.include_center) cert.sample_points.push_back(VectorXd::Zero(inc.sys->n_power()));
    for (auto& z : boundary_points(inc)) cert.sample_points.push_back(std::move(z));
    if (opts.random_points > 0)
        for (auto& z : random_boundary_points(inc, opts.random_points, opts.seed)) cert.sample_points.push_back(std::move(z));

    auto samples = evaluate_jacobians(inc, cert.sample_points, opts.lmi.execution);
    bool hurwitz = true;
    for (auto& s : samples) {
        hurwitz = hurwitz && s.spectral_abscissa < 0.0;
        cert.spectral_abscissas.push_back(s.spectral_abscissa);
        cert.jacobians.push_back(std::move(s.jacobian));
    }

    LmiOptions lmi = opts.lmi;
    if (lmi.scaling.size() == 0) lmi.scaling = inc.sys->m_diag.cwiseSqrt();
    cert.lmi = solve_common_lyapunov(cert.jacobians, lmi);
    cert.Q = cert.lmi.Q;

    if (cert.Q.size() > 0) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(cert.Q, Eigen::EigenvaluesOnly);
        cert.q_eigenvalues = es.eigenvalues();
        cert.min_eig_q = cert.q_eigenvalues.minCoeff();
        cert.max_eig_psi = -std::numeric_limits<double>::infinity();
        for (const auto& j : cert.jacobians) {
            auto pe = psi_at(cert.Q, j);
            cert.max_eig_psi = std::max(cert.max_eig_psi, pe.eigenvalues.maxCoeff());
            cert.psi.push_back(std::move(pe.psi));
            cert.psi_eigenvalues.push_back(std::move(pe.eigenvalues));
        }
    }

    if (!hurwitz)
        cert.status = CertificateStatus::failed;
    else if (cert.lmi.feasible && verify_certificate(cert, lmi.eps, lmi.psi_slack))
        cert.status = CertificateStatus::certified;
    else
        cert.status = CertificateStatus::hurwitz_only;
    return cert;
}

bool verify_certificate(const StabilityCertificate& cert, double eps, double psi_slack) {
    if (cert.Q.size() == 0 || cert.jacobians.empty()) return false;
    const MatrixXd& q = cert.Q;
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.cwiseAbs().maxCoeff())) return false;
    const double n = static_cast<double>(q.rows());
    if (!(q.trace() > 0.0)) return false;
    // Margins are stated for trace(Q) = n.
    const MatrixXd qn = q * (n / q.trace());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(qn, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() >= eps)) return false;
    for (const auto& j : cert.jacobians)
        if (!(psi_at(qn, j).eigenvalues.maxCoeff() <= psi_slack)) return false;
    return true;
}

} // namespace mtdc
