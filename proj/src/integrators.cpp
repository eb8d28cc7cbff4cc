#include "mtdc/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "mtdc/errors.hpp"

namespace mtdc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double GAM = 1.0 / 2.0;
constexpr double A21 = 2.0;
constexpr double A31 = 48.0 / 25.0;
constexpr double A32 = 6.0 / 25.0;
constexpr double C21 = -8.0;
constexpr double C31 = 372.0 / 25.0;
constexpr double C32 = 12.0 / 5.0;
constexpr double C41 = -112.0 / 125.0;
constexpr double C42 = -54.0 / 125.0;
constexpr double C43 = -2.0 / 5.0;
constexpr double B1 = 19.0 / 9.0;
constexpr double B2 = 1.0 / 2.0;
constexpr double B3 = 25.0 / 108.0;
constexpr double B4 = 125.0 / 108.0;
constexpr double E1 = 17.0 / 54.0;
constexpr double E2 = 7.0 / 36.0;
constexpr double E3 = 0.0;
constexpr double E4 = 125.0 / 108.0;

} // namespace

VectorXd rosenbrock_integrate(const OdeSystem& sys, VectorXd y, double t0, const std::vector<double>& stops,
                              const StepObserver& observer, const RosenbrockOptions& opts, IntegrationStats& stats) {
    const auto n = y.size();
    double t = t0;
    double h = opts.h_initial;
    long steps = 0;
    const MatrixXd eye = MatrixXd::Identity(n, n);

    for (double stop : stops) {
        while (t < stop) {
            if (++steps > opts.max_steps) throw StiffnessError("step limit exceeded", t, y);
            const bool clipped = t + h >= stop;
            const double hs = clipped ? stop - t : h;

            const VectorXd dy = sys.f(y);
            const MatrixXd jac = sys.jacobian(y);
            ++stats.jacobians;

            double h_try = hs;
            for (;;) {
                Eigen::PartialPivLU<MatrixXd> lu(eye / (GAM * h_try) - jac);
                const VectorXd g1 = lu.solve(dy);
                VectorXd yt = y + A21 * g1;
                const VectorXd g2 = lu.solve(sys.f(yt) + C21 * g1 / h_try);
                yt = y + A31 * g1 + A32 * g2;
                const VectorXd f3 = sys.f(yt);
                const VectorXd g3 = lu.solve(f3 + (C31 * g1 + C32 * g2) / h_try);
                const VectorXd g4 = lu.solve(f3 + (C41 * g1 + C42 * g2 + C43 * g3) / h_try);
                const VectorXd ynew = y + B1 * g1 + B2 * g2 + B3 * g3 + B4 * g4;
                const VectorXd err = E1 * g1 + E2 * g2 + E3 * g3 + E4 * g4;

                const VectorXd scale = (opts.atol + opts.rtol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array()).matrix();
                double errmax = err.cwiseQuotient(scale).cwiseAbs().maxCoeff();
                if (!std::isfinite(errmax) || !ynew.allFinite()) errmax = 1e10;

                if (errmax <= 1.0) {
                    const bool landed = clipped && h_try == hs;
                    t = landed ? stop : t + h_try;
                    y = ynew;
                    ++stats.accepted;
                    const double grow = errmax > 1e-4 ? std::min(5.0, 0.9 * std::pow(errmax, -0.25)) : 5.0;
                    const double proposal = std::min(opts.h_max, h_try * grow);
                    // A step shortened only to land on a stop says little about the next one.
                    h = landed ? std::max(std::min(h, opts.h_max), proposal) : proposal;
                    break;
                }
                ++stats.rejected;
                h_try *= std::max(0.2, 0.9 * std::pow(errmax, -1.0 / 3.0));
                if (h_try < opts.h_min) {
                    std::ostringstream msg;
                    msg << "step size underflow (h = " << h_try << ") at t = " << t;
                    throw StiffnessError(msg.str(), t, y);
                }
            }
        }
        if (observer) observer(stop, y);
    }
    return y;
}

VectorXd rk4_integrate(const OdeSystem& sys, VectorXd y, double t0, const std::vector<double>& stops,
                       const StepObserver& observer, double dt_max, IntegrationStats& stats) {
    double t = t0;
    for (double stop : stops) {
        const double span = stop - t;
        if (span <= 0.0) continue;
        const long count = std::max(1L, static_cast<long>(std::ceil(span / dt_max - 1e-9)));
        const double h = span / static_cast<double>(count);
        for (long k = 0; k < count; ++k) {
            const VectorXd k1 = sys.f(y);
            const VectorXd k2 = sys.f(y + 0.5 * h * k1);
            const VectorXd k3 = sys.f(y + 0.5 * h * k2);
            const VectorXd k4 = sys.f(y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            ++stats.accepted;
            if (!y.allFinite()) throw StiffnessError("explicit integration blew up", t + (k + 1) * h, y);
        }
        t = stop;
        if (observer) observer(stop, y);
    }
    return y;
}

} // namespace mtdc
