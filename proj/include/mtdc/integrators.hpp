#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace mtdc {

/// Autonomous system y' = f(y) with Jacobian df/dy.
struct OdeSystem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// Called with (t, y) at every requested stop time.
using StepObserver = std::function<void(double, const Eigen::VectorXd&)>;

struct RosenbrockOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double h_initial = 1e-6;
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 10'000'000;
};

struct IntegrationStats {
    long accepted = 0;
    long rejected = 0;
    long jacobians = 0;
};

/// Adaptive 4th-order Rosenbrock method (Kaps-Rentrop form, Shampine's
/// coefficients) with an embedded 3rd-order error estimate.
/// Integrates from t0 to every time in `stops` (sorted, all > t0), landing on each
/// exactly, and calls `observer` there. Returns y at the last stop.
/// Throws StiffnessError when the step size underflows h_min.
Eigen::VectorXd rosenbrock_integrate(const OdeSystem& sys, Eigen::VectorXd y, double t0,
                                     const std::vector<double>& stops, const StepObserver& observer,
                                     const RosenbrockOptions& opts, IntegrationStats& stats);

/// Classical RK4 with fixed step at most dt_max, shortened to land on every stop.
Eigen::VectorXd rk4_integrate(const OdeSystem& sys, Eigen::VectorXd y, double t0, const std::vector<double>& stops,
                              const StepObserver& observer, double dt_max, IntegrationStats& stats);

} // namespace mtdc
