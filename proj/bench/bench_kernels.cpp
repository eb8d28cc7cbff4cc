// Serial reference vs OpenMP kernels on the four-node case.
#include <benchmark/benchmark.h>

#include <Eigen/Eigenvalues>

#include "mtdc/assembly.hpp"
#include "mtdc/equilibrium.hpp"
#include "mtdc/grid.hpp"
#include "mtdc/lmi.hpp"
#include "mtdc/stability.hpp"

#ifndef MTDC_DATA_DIR
#define MTDC_DATA_DIR "data"
#endif

namespace {

using namespace mtdc;

struct Case4 {
    AssembledSystem sys;
    ReducedSystem red;
    IncrementalModel inc;
    std::vector<Eigen::MatrixXd> j_hat;
    Eigen::VectorXd t2;
    Eigen::MatrixXd q_hat;
    double s = 0.0;

    Case4() {
        sys = assemble(load_grid_file(MTDC_DATA_DIR "/case4.json"));
        red = reduce(sys, 0.5);
        const auto eq = solve_fixed_point(red);
        inc = make_incremental_model(sys, eq.state(), 0.5);

        auto pts = boundary_points(inc);
        pts.insert(pts.begin(), Eigen::VectorXd::Zero(sys.n_power()));
        const Eigen::VectorXd t = sys.m_diag.cwiseSqrt();
        t2 = sys.m_diag;
        for (const auto& js : evaluate_jacobians(inc, pts, Execution::serial))
            j_hat.push_back(t.asDiagonal() * js.jacobian * t.cwiseInverse().asDiagonal());

        const auto n = static_cast<double>(t2.size());
        q_hat = Eigen::MatrixXd::Identity(t2.size(), t2.size()) * (n / t2.sum());
        double lo = 1e300;
        for (const auto& j : j_hat) {
            const Eigen::MatrixXd psi = j.transpose() * q_hat + q_hat * j;
            lo = std::min(lo, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-psi).eigenvalues().minCoeff());
        }
        s = lo - 1.0;
    }
};

const Case4& case4() {
    static const Case4 c;
    return c;
}

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

void BM_LmiNewtonSystem(benchmark::State& st) {
    const auto& c = case4();
    LmiNewtonSystem out;
    for (auto _ : st) {
        const bool ok = lmi_newton_system(c.j_hat, c.t2, c.q_hat, c.s, 1e-6, 10.0, mode(st), out);
        benchmark::DoNotOptimize(ok);
        benchmark::DoNotOptimize(out.hessian.data());
    }
    st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_LmiNewtonSystem)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EvaluateJacobians(benchmark::State& st) {
    const auto& c = case4();
    const auto pts = random_boundary_points(c.inc, 64, 1);
    for (auto _ : st) {
        auto js = evaluate_jacobians(c.inc, pts, mode(st));
        benchmark::DoNotOptimize(js.data());
    }
    st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_EvaluateJacobians)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MultiStartPicard(benchmark::State& st) {
    const auto& c = case4();
    const auto starts = random_starts(c.red, 256, 3);
    for (auto _ : st) {
        auto r = multi_start_picard(c.red, starts, {}, mode(st));
        benchmark::DoNotOptimize(r.max_pairwise_distance);
    }
    st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_MultiStartPicard)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
