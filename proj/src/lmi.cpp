#include "mtdc/lmi.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mtdc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

double spectral_abscissa(const MatrixXd& a) {
    Eigen::EigenSolver<MatrixXd> es(a, false);
    if (es.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const MatrixXd& a) {
    const double s = spectral_abscissa(a);
    return std::isfinite(s) && s < 0.0;
}

PsiEval psi_at(const MatrixXd& q, const MatrixXd& j) {
    PsiEval out;
    const MatrixXd p = j.transpose() * q + q * j;
    out.psi = 0.5 * (p + p.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.psi, Eigen::EigenvaluesOnly);
    out.eigenvalues = es.eigenvalues();
    return out;
}

namespace {

struct SymLayout {
    int n = 0;
    std::vector<int> row;
    std::vector<int> col;
    Index m() const { return static_cast<Index>(row.size()); }
};

SymLayout sym_layout(int n) {
    SymLayout s;
    s.n = n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) {
            s.row.push_back(i);
            s.col.push_back(j);
        }
    return s;
}

MatrixXd unpack(const SymLayout& lay, const VectorXd& q) {
    MatrixXd out(lay.n, lay.n);
    for (Index a = 0; a < lay.m(); ++a) {
        out(lay.row[a], lay.col[a]) = q[a];
        out(lay.col[a], lay.row[a]) = q[a];
    }
    return out;
}

VectorXd pack(const SymLayout& lay, const MatrixXd& q) {
    VectorXd out(lay.m());
    for (Index a = 0; a < lay.m(); ++a) out[a] = q(lay.row[a], lay.col[a]);
    return out;
}

// Per-Jacobian factors of F = -(J^T Q + Q J) - s I: W = F^-1, Y = W J^T, Z = J W J^T, Y2 = W^2 J^T.
struct BlockFactors {
    MatrixXd w, y, z, y2;
    double logdet = 0.0;
    double trace_w = 0.0;
    double trace_w2 = 0.0;
    bool ok = false;
};

void factor_block(const MatrixXd& jh, const MatrixXd& q, double s, BlockFactors& f) {
    const Index n = q.rows();
    MatrixXd fm = -(jh.transpose() * q + q * jh);
    fm = 0.5 * (fm + fm.transpose()).eval();
    fm.diagonal().array() -= s;
    Eigen::LLT<MatrixXd> llt(fm);
    if (llt.info() != Eigen::Success) {
        f.ok = false;
        return;
    }
    const VectorXd d = MatrixXd(llt.matrixL()).diagonal();
    if ((d.array() <= 0.0).any()) {
        f.ok = false;
        return;
    }
    f.logdet = 2.0 * d.array().log().sum();
    f.w = llt.solve(MatrixXd::Identity(n, n));
    f.w = 0.5 * (f.w + f.w.transpose()).eval();
    f.y = f.w * jh.transpose();
    f.z = jh * f.y;
    const MatrixXd w2 = f.w * f.w;
    f.y2 = w2 * jh.transpose();
    f.trace_w = f.w.trace();
    f.trace_w2 = w2.trace();
    f.ok = true;
}

// Hessian entry of -logdet F in elementary directions U = e_i e_j^T, V = e_k e_l^T.
inline double jac_entry(const BlockFactors& f, int i, int j, int k, int l) {
    return f.y(l, i) * f.y(j, k) + f.z(l, i) * f.w(j, k) + f.w(l, i) * f.z(j, k) + f.y(i, l) * f.y(k, j);
}

inline double jac_entry_sym(const BlockFactors& f, int i, int j, int k, int l) {
    double h = jac_entry(f, i, j, k, l);
    if (k != l) h += jac_entry(f, i, j, l, k);
    if (i != j) {
        h += jac_entry(f, j, i, k, l);
        if (k != l) h += jac_entry(f, j, i, l, k);
    }
    return h;
}

inline double pos_entry_sym(const MatrixXd& p, int i, int j, int k, int l) {
    double h = p(l, i) * p(j, k);
    if (k != l) h += p(k, i) * p(j, l);
    if (i != j) {
        h += p(l, j) * p(i, k);
        if (k != l) h += p(k, j) * p(i, l);
    }
    return h;
}

} // namespace

bool lmi_newton_system(const std::vector<MatrixXd>& scaled_jacobians, const VectorXd& t2, const MatrixXd& q_hat,
                       double s, double eps, double t, Execution execution, LmiNewtonSystem& out) {
    const int n = static_cast<int>(q_hat.rows());
    const auto lay = sym_layout(n);
    const Index m = lay.m();
    const int r = static_cast<int>(scaled_jacobians.size());

    std::vector<BlockFactors> blocks(static_cast<std::size_t>(r));
#pragma omp parallel for schedule(static) if (execution == Execution::parallel)
    for (int b = 0; b < r; ++b) factor_block(scaled_jacobians[static_cast<std::size_t>(b)], q_hat, s, blocks[static_cast<std::size_t>(b)]);
    for (const auto& b : blocks)
        if (!b.ok) return false;

    // Q >= eps I in original coordinates: G = T Q_hat T - eps I.
    const VectorXd tv = t2.cwiseSqrt();
    MatrixXd g = tv.asDiagonal() * q_hat * tv.asDiagonal();
    g = 0.5 * (g + g.transpose()).eval();
    g.diagonal().array() -= eps;
    Eigen::LLT<MatrixXd> gllt(g);
    if (gllt.info() != Eigen::Success) return false;
    const VectorXd gd = MatrixXd(gllt.matrixL()).diagonal();
    if ((gd.array() <= 0.0).any()) return false;
    MatrixXd p = gllt.solve(MatrixXd::Identity(n, n));
    p = tv.asDiagonal() * p * tv.asDiagonal();
    p = 0.5 * (p + p.transpose()).eval();

    out.barrier = -t * s - 2.0 * gd.array().log().sum();
    for (const auto& b : blocks) out.barrier -= b.logdet;

    out.gradient = VectorXd::Zero(m + 1);
    out.hessian.resize(m + 1, m + 1);

    for (Index a = 0; a < m; ++a) {
        const int i = lay.row[a], j = lay.col[a];
        const double mult = (i == j) ? 1.0 : 2.0;
        double gsum = -mult * p(i, j);
        double hs = 0.0;
        for (const auto& b : blocks) {
            gsum += mult * (b.y(i, j) + b.y(j, i));
            hs += mult * (b.y2(i, j) + b.y2(j, i));
        }
        out.gradient[a] = gsum;
        out.hessian(a, m) = hs;
        out.hessian(m, a) = hs;
    }
    double gs = -t, hss = 0.0;
    for (const auto& b : blocks) {
        gs += b.trace_w;
        hss += b.trace_w2;
    }
    out.gradient[m] = gs;
    out.hessian(m, m) = hss;

    // Each column is owned by one thread and blocks are summed in a fixed order.
#pragma omp parallel for schedule(dynamic, 4) if (execution == Execution::parallel)
    for (Index bcol = 0; bcol < m; ++bcol) {
        const int k = lay.row[bcol], l = lay.col[bcol];
        for (Index a = 0; a <= bcol; ++a) {
            const int i = lay.row[a], j = lay.col[a];
            double h = pos_entry_sym(p, i, j, k, l);
            for (const auto& b : blocks) h += jac_entry_sym(b, i, j, k, l);
            out.hessian(a, bcol) = h;
        }
    }
    for (Index bcol = 0; bcol < m; ++bcol)
        for (Index a = 0; a < bcol; ++a) out.hessian(bcol, a) = out.hessian(a, bcol);
    return true;
}

namespace {

bool barrier_value(const std::vector<MatrixXd>& jh, const VectorXd& tv, const MatrixXd& q, double s, double eps,
                   double t, double& value) {
    value = -t * s;
    const Index n = q.rows();
    for (const auto& j : jh) {
        MatrixXd f = -(j.transpose() * q + q * j);
        f = 0.5 * (f + f.transpose()).eval();
        f.diagonal().array() -= s;
        Eigen::LLT<MatrixXd> llt(f);
        if (llt.info() != Eigen::Success) return false;
        const VectorXd d = MatrixXd(llt.matrixL()).diagonal();
        if ((d.array() <= 0.0).any() || !d.allFinite()) return false;
        value -= 2.0 * d.array().log().sum();
    }
    MatrixXd g = tv.asDiagonal() * q * tv.asDiagonal();
    g = 0.5 * (g + g.transpose()).eval();
    g.diagonal().array() -= eps * VectorXd::Ones(n).array();
    Eigen::LLT<MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) return false;
    const VectorXd d = MatrixXd(llt.matrixL()).diagonal();
    if ((d.array() <= 0.0).any() || !d.allFinite()) return false;
    value -= 2.0 * d.array().log().sum();
    return std::isfinite(value);
}

void finish(LmiResult& out, const std::vector<MatrixXd>& jacobians, const MatrixXd& q_raw, const LmiOptions& opts) {
    const double n = static_cast<double>(q_raw.rows());
    MatrixXd q = 0.5 * (q_raw + q_raw.transpose());
    q *= n / q.trace();
    out.Q = q;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q, Eigen::EigenvaluesOnly);
    out.min_eig_q = es.eigenvalues().minCoeff();
    out.max_eig_psi = -std::numeric_limits<double>::infinity();
    for (const auto& j : jacobians) out.max_eig_psi = std::max(out.max_eig_psi, psi_at(q, j).eigenvalues.maxCoeff());
    out.feasible = out.min_eig_q >= opts.eps && out.max_eig_psi <= opts.psi_slack;
}

} // namespace

LmiResult solve_common_lyapunov(const std::vector<MatrixXd>& jacobians, const LmiOptions& opts) {
    LmiResult out;
    if (jacobians.empty()) {
        out.message = "no Jacobians given";
        return out;
    }
    const Index n = jacobians.front().rows();
    for (const auto& j : jacobians)
        if (j.rows() != n || j.cols() != n) {
            out.message = "Jacobians must be square and of equal size";
            return out;
        }

    out.all_hurwitz = true;
    for (std::size_t k = 0; k < jacobians.size(); ++k) {
        const double a = spectral_abscissa(jacobians[k]);
        if (!(a < 0.0)) {
            out.all_hurwitz = false;
            out.message = "Jacobian " + std::to_string(k) + " is not Hurwitz (spectral abscissa " + std::to_string(a) +
                          "); no common Lyapunov matrix exists";
            out.Q = MatrixXd::Identity(n, n);
            finish(out, jacobians, out.Q, opts);
            out.feasible = false;
            return out;
        }
    }

    const VectorXd tv = opts.scaling.size() == n ? opts.scaling : VectorXd::Ones(n);
    if ((tv.array() <= 0.0).any()) {
        out.message = "scaling must be strictly positive";
        return out;
    }
    const VectorXd t2 = tv.cwiseAbs2();
    std::vector<MatrixXd> jh;
    jh.reserve(jacobians.size());
    for (const auto& j : jacobians) jh.push_back(tv.asDiagonal() * j * tv.cwiseInverse().asDiagonal());

    const auto lay = sym_layout(static_cast<int>(n));
    const Index m = lay.m();

    // Start from Q = c T^2, i.e. Q_hat = c I, with trace(Q) = n.
    const double c = static_cast<double>(n) / t2.sum();
    if (c * t2.minCoeff() <= opts.eps) {
        out.message = "scaling too uneven for the requested eps";
        return out;
    }
    MatrixXd q_hat = c * MatrixXd::Identity(n, n);
    double s = std::numeric_limits<double>::infinity();
    for (const auto& j : jh) {
        MatrixXd f = -(j.transpose() * q_hat + q_hat * j);
        f = 0.5 * (f + f.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(f, Eigen::EigenvaluesOnly);
        s = std::min(s, es.eigenvalues().minCoeff());
    }
    s -= std::max(1.0, std::abs(s));

    // Equality trace(T Q_hat T) = n, i.e. a . x = n over the packed variables.
    VectorXd a = VectorXd::Zero(m + 1);
    for (Index k = 0; k < m; ++k)
        if (lay.row[k] == lay.col[k]) a[k] = t2[lay.row[k]];

    const double total_dim = static_cast<double>(n) * static_cast<double>(jh.size() + 1);
    double t = 1.0;
    LmiNewtonSystem sys;
    VectorXd x(m + 1);
    x << pack(lay, q_hat), s;

    auto check_feasible = [&]() {
        finish(out, jacobians, tv.asDiagonal() * unpack(lay, x.head(m)) * tv.asDiagonal(), opts);
        return out.feasible;
    };

    for (;;) {
        ++out.barrier_stages;
        // Centering.
        for (;;) {
            if (out.newton_steps >= opts.max_newton) {
                out.margin = x[m];
                check_feasible();
                out.message = out.feasible ? "Newton step limit reached at a feasible point"
                                           : "Newton step limit reached without a feasible point";
                return out;
            }
            const MatrixXd qm = unpack(lay, x.head(m));
            if (!lmi_newton_system(jh, t2, qm, x[m], opts.eps, t, opts.execution, sys)) {
                out.message = "lost strict feasibility of the barrier";
                out.margin = x[m];
                check_feasible();
                return out;
            }
            ++out.newton_steps;
            Eigen::LLT<MatrixXd> hl(sys.hessian);
            // Late stages are badly conditioned; a tiny ridge restores a usable direction.
            double ridge = 1e-14 * sys.hessian.diagonal().cwiseAbs().maxCoeff();
            for (int tries = 0; hl.info() != Eigen::Success && tries < 6; ++tries, ridge *= 100.0) {
                MatrixXd h = sys.hessian;
                h.diagonal().array() += ridge;
                hl.compute(h);
            }
            if (hl.info() != Eigen::Success) {
                out.message = "barrier Hessian is not positive definite";
                out.margin = x[m];
                check_feasible();
                return out;
            }
            const VectorXd hg = hl.solve(sys.gradient);
            const VectorXd ha = hl.solve(a);
            const double nu = -a.dot(hg) / a.dot(ha);
            const VectorXd dx = -(hg + nu * ha);
            const double decrement = -sys.gradient.dot(dx);
            if (decrement / 2.0 <= 1e-10) break;

            double step = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
                const VectorXd trial = x + step * dx;
                double value = 0.0;
                if (!barrier_value(jh, tv, unpack(lay, trial.head(m)), trial[m], opts.eps, t, value)) continue;
                if (value <= sys.barrier - 0.25 * step * decrement) {
                    x = trial;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
            if (opts.stop_at_feasible && x[m] > 0.0 && check_feasible()) {
                out.margin = x[m];
                out.message = "feasible point found";
                return out;
            }
        }

        const double gap = total_dim / t;
        if (x[m] + gap < 0.0) {
            out.margin = x[m];
            check_feasible();
            out.feasible = false;
            out.message = "LMI infeasible: best margin s = " + std::to_string(x[m]) + ", upper bound " +
                          std::to_string(x[m] + gap);
            return out;
        }
        if (gap <= opts.gap_tol * std::max(1.0, std::abs(x[m]))) break;
        t *= 10.0;
    }

    out.margin = x[m];
    check_feasible();
    out.message = out.feasible ? "LMI feasible" : "LMI solved but margins fail verification";
    return out;
}

} // namespace mtdc
