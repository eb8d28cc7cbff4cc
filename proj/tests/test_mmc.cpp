#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mtdc/errors.hpp"
#include "mtdc/mmc.hpp"
#include "support/mmc_abc.hpp"

using namespace mtdc;
using namespace mtdc::mmc;

namespace {

const StepExperiment& up_step() {
    static const StepExperiment e = step_experiment(default_params(), 0.4);
    return e;
}

} // namespace

TEST_CASE("Park transform round trip") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
        const Vector3d abc(u(rng), u(rng), u(rng));
        const double theta = 3.0 * u(rng);
        for (double sign : {1.0, -1.0}) CHECK((abc_from_dqz(dqz_from_abc(abc, theta, sign), theta, sign) - abc).norm() < 1e-14);
    }
    // balanced set aligned with theta has only a d component
    const double th = 0.7, a = 1.3;
    const Vector3d bal(a * std::cos(th), a * std::cos(th - 2.0 * std::numbers::pi / 3.0), a * std::cos(th + 2.0 * std::numbers::pi / 3.0));
    const Vector3d dqz = dqz_from_abc(bal, th, 1.0);
    CHECK(dqz[0] == doctest::Approx(a));
    CHECK(std::abs(dqz[1]) < 1e-14);
    CHECK(std::abs(dqz[2]) < 1e-14);
    // common mode lands on z
    CHECK(dqz_from_abc(Vector3d::Constant(0.25), th, -1.0)[2] == doctest::Approx(0.25));
}

TEST_CASE("PI law") {
    const PiGains g{2.0, 50.0};
    auto r = pi_step<double>(0.0, 1.0, 1.0, 0.3, g);
    CHECK(r.u == doctest::Approx(-0.3));
    CHECK(r.dphi == 0.0);
    r = pi_step<double>(0.0, 1.5, 1.0, 0.3, g);
    CHECK(r.u == doctest::Approx(2.0 * 0.5 - 0.3));
    CHECK(r.dphi == doctest::Approx(0.5));
    r = pi_step<double>(0.01, 1.0, 1.0, 0.0, g);
    CHECK(r.u == doctest::Approx(0.5));

    const auto c = cancelling_pi(0.02, 0.5, 100.0);
    CHECK(c.kp == doctest::Approx(0.02 * 2.0 * std::numbers::pi * 100.0));
    CHECK(c.ki == doctest::Approx(0.5 * 2.0 * std::numbers::pi * 100.0));
}

TEST_CASE("energy controller") {
    const PiGains g{3.0, 40.0};
    auto e = energy_controller(1.0, 1.0, 0.0, 0.8, 2.0, g);
    CHECK(e.i_ref == doctest::Approx(0.2));
    CHECK(e.dphi_w == 0.0);
    e = energy_controller(1.0, 0.9, 0.0, 0.0, 0.5, g);
    CHECK(e.i_ref == doctest::Approx(3.0 * 0.1 / 1.0));
    CHECK(e.dphi_w == doctest::Approx(0.1));
    CHECK_THROWS_AS(energy_controller(1.0, 1.0, 0.0, 0.1, 5e-4, g), DomainError);
    CHECK_THROWS_AS(energy_controller(1.0, 1.0, 0.0, 0.1, -1e-4, g), DomainError);
    CHECK_NOTHROW(energy_controller(1.0, 1.0, 0.0, 0.1, -2e-3, g));
}

TEST_CASE("idle state is an equilibrium") {
    const auto p = default_params();
    const auto cl = closed_loop(idle_state(p), {}, p);
    CHECK(cl.derivative.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(idle_state(p).w == doctest::Approx(p.w_ref()));
}

TEST_CASE("state vector round trip") {
    MmcState s;
    s.i_g = {1, 2};
    s.i_sig = {3, 4};
    s.i_sig_z = 5;
    s.w = 6;
    s.phi_g = {7, 8};
    s.phi_sig = {9, 10};
    s.phi_z = 11;
    s.phi_w = 12;
    const auto v = s.to_vector();
    CHECK(v.size() == MmcState::size);
    CHECK((MmcState::from_vector(v).to_vector() - v).norm() == 0.0);
}

TEST_CASE("dq model matches the per-phase arm model") {
    const auto p = default_params();
    const std::vector<PowerStep> steps{{10e-3, 0.4}, {60e-3, -0.2}};
    const double dt = 1e-6;
    const int every = 100;
    const auto dq = simulate_mmc(p, idle_state(p), steps, 0.1, dt, every);
    const auto abc = testing::MmcAbcOracle(p).run(steps, 0.1, dt, every);
    REQUIRE(dq.x.size() == abc.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < abc.size(); ++i) worst = std::max(worst, (dq.x[i].to_vector() - abc[i].to_vector()).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-8);
}

TEST_CASE("first-order fit recovers a known time constant") {
    std::vector<double> t, y;
    const double tau = 2e-3, t_step = 5e-3;
    for (int k = 0; k <= 400; ++k) {
        const double tk = k * 1e-4;
        t.push_back(tk);
        y.push_back(tk < t_step ? 0.2 : 0.2 - 0.5 * (1.0 - std::exp(-(tk - t_step) / tau)));
    }
    const auto f = fit_first_order(t, y, t_step);
    CHECK(f.tau == doctest::Approx(tau).epsilon(0.01));
    CHECK(f.delta == doctest::Approx(-0.5).epsilon(0.01));
    CHECK(f.y0 == doctest::Approx(0.2));
    CHECK(f.rms_residual < 1e-3);
}

TEST_CASE("an oscillatory response is flagged as a poor first-order fit") {
    std::vector<double> t, y;
    const double t_step = 1e-3, wn = 2.0 * std::numbers::pi * 200.0, zeta = 0.1;
    const double wd = wn * std::sqrt(1.0 - zeta * zeta);
    for (int k = 0; k <= 200; ++k) {
        const double tk = k * 1e-4;
        const double s = tk - t_step;
        t.push_back(tk);
        y.push_back(s < 0.0 ? 0.0 : 1.0 - std::exp(-zeta * wn * s) * (std::cos(wd * s) + zeta * wn / wd * std::sin(wd * s)));
    }
    CHECK(fit_first_order(t, y, t_step).rms_residual > kReductionResidualMax);
}

TEST_CASE("dc current follows a first-order step response") {
    const auto& e = up_step();
    CHECK(e.fit.tau > 0.6e-3);
    CHECK(e.fit.tau < 1.8e-3);
    CHECK(e.fit.rms_residual <= kReductionResidualMax);
    // converter power is the grid setpoint plus transformer loss; the arms pass it through in steady state
    const auto p = default_params();
    const auto& last = e.trace.x.back();
    const double p_dc = e.trace.p_dc.back(), p_ac = e.trace.p_ac.back();
    CHECK(p_ac == doctest::Approx(0.4 + 0.5 * p.r_g() * last.i_g.squaredNorm()).epsilon(1e-4));
    CHECK(std::abs(p_dc - p_ac) < 1e-3);
    CHECK(e.w_deviation_max < 0.05);
    CHECK(std::abs(last.w - p.w_ref()) / p.w_ref() < 1e-3);
}

TEST_CASE("energy returns to its reference at zero power") {
    const auto p = default_params();
    MmcState s = idle_state(p);
    s.w *= 1.02;
    const auto tr = simulate_mmc(p, s, {}, 0.2, 1e-6, 1000);
    CHECK(std::abs(tr.x.back().w - p.w_ref()) / p.w_ref() < 1e-4);
    CHECK(std::abs(tr.i_dc.back()) < 1e-4);
}
