#include <doctest.h>

#include <cmath>
#include <limits>

#include "mtdc/errors.hpp"
#include "mtdc/integrators.hpp"

using namespace mtdc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// L di/dt = -R i + V(t), V stepping from v0 to v1 at t1.
struct RlCircuit {
    double l = 0.02, r = 0.5, v0 = 1.0, v1 = 1.3, t1 = 0.05;
    double v = v0;

    OdeSystem ode() {
        OdeSystem s;
        s.f = [this](const VectorXd& y) {
            VectorXd d(1);
            d[0] = (-r * y[0] + v) / l;
            return d;
        };
        s.jacobian = [this](const VectorXd&) { return MatrixXd::Constant(1, 1, -r / l); };
        return s;
    }
    double exact(double t) const {
        const double i0 = v0 / r;
        if (t <= t1) return i0;
        return v1 / r + (i0 - v1 / r) * std::exp(-(t - t1) * r / l);
    }
};

} // namespace

TEST_CASE("RL step against the closed form") {
    for (int use_rk = 0; use_rk < 2; ++use_rk) {
        RlCircuit c;
        auto ode = c.ode();
        VectorXd y(1);
        y[0] = c.v0 / c.r;
        std::vector<double> stops;
        for (int k = 1; k <= 50; ++k) stops.push_back(k * 1e-3);
        double worst = 0.0;
        IntegrationStats stats;
        auto obs = [&](double t, const VectorXd& yy) { worst = std::max(worst, std::abs(yy[0] - c.exact(t)) / std::abs(c.exact(t))); };
        y = use_rk ? rk4_integrate(ode, y, 0.0, stops, obs, 1e-5, stats) : rosenbrock_integrate(ode, y, 0.0, stops, obs, {}, stats);
        c.v = c.v1;
        stops.clear();
        for (int k = 51; k <= 300; ++k) stops.push_back(k * 1e-3);
        y = use_rk ? rk4_integrate(ode, y, 0.05, stops, obs, 1e-5, stats) : rosenbrock_integrate(ode, y, 0.05, stops, obs, {}, stats);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("RK4 is fourth order") {
    OdeSystem s;
    s.f = [](const VectorXd& y) {
        VectorXd d(2);
        d << y[1], -y[0];
        return d;
    };
    s.jacobian = [](const VectorXd&) {
        MatrixXd j(2, 2);
        j << 0, 1, -1, 0;
        return j;
    };
    double prev = 0.0;
    for (double dt : {0.1, 0.05, 0.025}) {
        VectorXd y(2);
        y << 1.0, 0.0;
        IntegrationStats st;
        y = rk4_integrate(s, y, 0.0, {2.0}, nullptr, dt, st);
        const double err = std::hypot(y[0] - std::cos(2.0), y[1] + std::sin(2.0));
        if (prev > 0.0) CHECK(prev / err == doctest::Approx(16.0).epsilon(0.1));
        prev = err;
    }
}

TEST_CASE("Rosenbrock handles a stiff scalar problem") {
    // y' = -1e6 (y - 1)
    OdeSystem s;
    s.f = [](const VectorXd& y) {
        VectorXd d(1);
        d[0] = -1e6 * (y[0] - std::cos(0.0));
        return d;
    };
    s.jacobian = [](const VectorXd&) { return MatrixXd::Constant(1, 1, -1e6); };
    VectorXd y = VectorXd::Zero(1);
    IntegrationStats st;
    y = rosenbrock_integrate(s, y, 0.0, {1.0}, nullptr, {}, st);
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.accepted < 2000);
}

TEST_CASE("observer sees every stop exactly") {
    RlCircuit c;
    auto ode = c.ode();
    VectorXd y = VectorXd::Constant(1, 0.0);
    std::vector<double> seen;
    const std::vector<double> stops{0.001, 0.0015, 0.01, 0.2};
    IntegrationStats st;
    rosenbrock_integrate(ode, y, 0.0, stops, [&](double t, const VectorXd&) { seen.push_back(t); }, {}, st);
    CHECK(seen == stops);
}

TEST_CASE("step size underflow raises a stiffness failure with the state") {
    OdeSystem s;
    s.f = [](const VectorXd& y) {
        VectorXd d(1);
        d[0] = y[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
        return d;
    };
    s.jacobian = [](const VectorXd&) { return MatrixXd::Zero(1, 1); };
    VectorXd y = VectorXd::Zero(1);
    IntegrationStats st;
    try {
        rosenbrock_integrate(s, y, 0.0, {1.0}, nullptr, {}, st);
        FAIL("expected a stiffness failure");
    } catch (const StiffnessError& e) {
        CHECK(e.time() == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(e.state().size() == 1);
    }
}
