// Timing comparison of the OpenMP kernels against their serial references.
#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pertrl/experiment.hpp"
#include "pertrl/kernels.hpp"
#include "pertrl/rng.hpp"
#include "pertrl/tpfc.hpp"

using namespace pertrl;

namespace {

template <typename F>
double time_ms(F&& f, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("built without openmp\n");
#endif

    const int R = 200000;
    const int N = 18;
    rng::NormalStream stream(1);
    std::vector<double> draws(R);
    for (double& x : draws) x = stream.normal();

    Eigen::MatrixXd phi_serial, phi_parallel;
    const double t_basis_s =
        time_ms([&] { phi_serial = kernels::power_basis_serial(draws, N); }, 5);
    const double t_basis_p =
        time_ms([&] { phi_parallel = kernels::power_basis_parallel(draws, N); }, 5);
    std::printf("power_basis  %d x %d   serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
                N, R, t_basis_s, t_basis_p, t_basis_s / t_basis_p);

    Eigen::MatrixXd g_serial, g_parallel;
    const double t_gram_s = time_ms([&] { g_serial = kernels::gram_serial(phi_serial); }, 5);
    const double t_gram_p =
        time_ms([&] { g_parallel = kernels::gram_parallel(phi_serial); }, 5);
    std::printf("gram         %d x %d   serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
                N, R, t_gram_s, t_gram_p, t_gram_s / t_gram_p);
    std::printf("gram results identical: %s\n",
                (g_serial - g_parallel).cwiseAbs().maxCoeff() == 0.0 ? "yes" : "no");

    const ControlSystemConfig cs;
    const ControlAffineSystem sys = make_control_system(cs, 0.0);
    const PolicyUnderTest policy = make_tpfc_policy(sys, cs.x0, 1e-7, 50000, -0.3);
    const int paths = 20000;
    std::vector<double> costs_s, costs_p;
    const double t_mc_s = time_ms(
        [&] { costs_s = rollout_cost_batch(sys, policy, 0.2, paths, 7, false); }, 3);
    const double t_mc_p = time_ms(
        [&] { costs_p = rollout_cost_batch(sys, policy, 0.2, paths, 7, true); }, 3);
    bool same = costs_s.size() == costs_p.size();
    for (std::size_t i = 0; same && i < costs_s.size(); ++i) same = costs_s[i] == costs_p[i];
    std::printf("mc rollouts  %d paths    serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
                paths, t_mc_s, t_mc_p, t_mc_s / t_mc_p);
    std::printf("mc results identical: %s\n", same ? "yes" : "no");
    return 0;
}
