#include "support.hpp"

#include "stochsim/error.hpp"
#include "stochsim/machine.hpp"
#include "stochsim/smib.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace stochsim;

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

MachineSet single_machine(double xd_p, double xq_p) {
    MachineSet m;
    GeneratorParams p;
    p.H = 4.0;
    p.D = 2.0;
    p.xd = 1.2;
    p.xd_p = xd_p;
    p.xq = 1.1;
    p.xq_p = xq_p;
    p.Td0_p = 6.0;
    p.Tq0_p = 0.5;
    p.omega_r = 2 * M_PI * 60;
    m.params = {p};
    m.models = {MachineModel::two_axis};
    m.constants = {{1.5}, {0.7}};
    return m;
}

ReducedNetwork diagonal_network(std::vector<cplx> y) {
    ReducedNetwork net;
    const auto n = static_cast<Eigen::Index>(y.size());
    net.Y = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) net.Y(i, i) = y[static_cast<std::size_t>(i)];
    net.source = Eigen::VectorXcd::Zero(n);
    return net;
}

}  // namespace

TEST_CASE("initial state is an equilibrium of every shipped case") {
    for (const char* file : {"cases/smib.json", "cases/ieee39.json"}) {
        CAPTURE(file);
        const PreparedSystem ps = prepare(load_case(testing::source_path(file)));
        CHECK(max_abs(rhs(ps.x0, ps.prefault, ps.machines)) < 1e-9);
        for (std::size_t k = 0; k < ps.x0.generator_count(); ++k) {
            CHECK(ps.x0.omega(k) == ps.machines.params[k].omega_r);
        }
    }
}

TEST_CASE("EMF at delta = pi/2 with e'd = 0 is j e'q") {
    DynamicState x(1);
    x.delta(0) = M_PI / 2;
    x.eq_p(0) = 1.1;
    const auto out = compute_injections(x, diagonal_network({{1.0, -5.0}}), single_machine(0.3, 0.3));
    CHECK(std::abs(out.emf[0] - cplx{0.0, 1.1}) < 1e-15);
}

TEST_CASE("diagonal network: P_e from the self term alone") {
    // With I = y E, P_e = Re(E conj(I)) = G |E|^2 when x'q = x'd.
    const std::vector<cplx> y{{0.4, -3.0}, {1.5, -7.0}};
    const ReducedNetwork net = diagonal_network(y);
    MachineSet m = single_machine(0.25, 0.25);
    m.params.push_back(m.params[0]);
    m.models.push_back(m.models[0]);
    m.constants = {{1.5, 1.5}, {0.7, 0.7}};
    DynamicState x(std::vector<double>{0.3, 377.0, 1.05, 0.2, -0.8, 377.0, 0.9, -0.1});
    const auto out = compute_injections(x, net, m);
    for (std::size_t k = 0; k < 2; ++k) {
        const double e2 = x.eq_p(k) * x.eq_p(k) + x.ed_p(k) * x.ed_p(k);
        CHECK(out.p_e[k] == doctest::Approx(y[k].real() * e2).epsilon(1e-13));
    }
}

TEST_CASE("compute_injections satisfies its defining identities") {
    const PreparedSystem ps = prepare(load_case(testing::source_path("cases/ieee39.json")));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    DynamicState x = ps.x0;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.05 * n01(rng);
    const auto out = compute_injections(x, ps.prefault, ps.machines);
    std::vector<cplx> e(x.generator_count());
    for (std::size_t k = 0; k < e.size(); ++k) {
        e[k] = cplx{x.eq_p(k), -x.ed_p(k)} * std::polar(1.0, x.delta(k));
        CHECK(std::abs(out.emf[k] - e[k]) < 1e-12);
    }
    const Eigen::VectorXcd i = ps.prefault.Y * Eigen::Map<const Eigen::VectorXcd>(e.data(), 10) + ps.prefault.source;
    for (std::size_t k = 0; k < e.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        const auto& p = ps.machines.params[k];
        CHECK(std::abs(cplx{out.i_r[k], out.i_i[k]} - i(kk)) < 1e-12);
        const cplx dq = i(kk) * std::polar(1.0, -x.delta(k));  // i_q - j i_d
        CHECK(std::abs(out.i_q[k] - dq.real()) < 1e-12);
        CHECK(std::abs(out.i_d[k] + dq.imag()) < 1e-12);
        CHECK(std::abs(out.e_q[k] - (x.eq_p(k) - p.xd_p * out.i_d[k])) < 1e-12);
        CHECK(std::abs(out.e_d[k] - (x.ed_p(k) + p.xq_p * out.i_q[k])) < 1e-12);
        CHECK(std::abs(out.p_e[k] - (out.e_q[k] * out.i_q[k] + out.e_d[k] * out.i_d[k])) < 1e-12);
        // Air-gap power with x'q = x'd.
        CHECK(std::abs(out.p_e[k] - (e[k] * std::conj(i(kk))).real()) < 1e-12);
    }
}

TEST_CASE("speed is stationary when P_m = P_e at synchronous speed") {
    MachineSet m = single_machine(0.3, 0.3);
    const ReducedNetwork net = diagonal_network({{0.6, -4.0}});
    DynamicState x(std::vector<double>{0.4, m.params[0].omega_r, 1.1, 0.1});
    for (double d : {0.0, 5.0, 50.0}) {
        m.params[0].D = d;
        m.constants.pm[0] = compute_injections(x, net, m).p_e[0];
        CHECK(rhs(x, net, m)[1] == 0.0);
    }
}

TEST_CASE("SMIB right-hand side matches the closed form") {
    const PreparedSystem ps = prepare(load_case(testing::source_path("cases/smib.json")));
    SMIBParams p = smib_params_from_case(ps);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(-1.0, 1.5), uw(-3.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        DynamicState x = ps.x0;
        x.delta(0) = ud(rng);
        x.omega(0) = p.omega_r + uw(rng);
        const auto f = rhs(x, ps.prefault, ps.machines);
        const double dw = x.omega(0) - p.omega_r;
        const double wdot = p.omega_r / (2 * p.H) * (p.pm - smib_electrical_power(p, x.delta(0)) - p.D * dw / p.omega_r);
        CHECK(f[0] == doctest::Approx(dw).epsilon(1e-12));
        CHECK(std::abs(f[1] - wdot) <= 1e-10 * std::max(1.0, std::abs(wdot)));
        CHECK(f[2] == 0.0);
        CHECK(f[3] == 0.0);
    }
    // P_e at the initial angle.
    CHECK(compute_injections(ps.x0, ps.prefault, ps.machines).p_e[0] ==
          doctest::Approx(smib_electrical_power(p, ps.x0.delta(0))).epsilon(1e-9));
}

TEST_CASE("solve_equilibrium") {
    SUBCASE("pre-fault returns the initial state") {
        const PreparedSystem ps = prepare(load_case(testing::source_path("cases/ieee39.json")));
        const Equilibrium eq = solve_equilibrium(ps, NetworkCondition{});
        CHECK(eq.residual < 1e-9);
        CHECK(std::abs(eq.frequency_offset) < 1e-9);
        for (std::size_t i = 0; i < eq.state.size(); ++i) CHECK(std::abs(eq.state[i] - ps.x0[i]) < 1e-7);
    }
    SUBCASE("post-fault 39-bus equilibrium") {
        const PreparedSystem ps = prepare(load_case(testing::source_path("cases/ieee39.json")));
        const Equilibrium eq = solve_equilibrium(ps, NetworkCondition{Stage::post_fault, 0, {{3, 4}}});
        CHECK(eq.residual < 1e-9);
    }
    SUBCASE("SMIB angle balances the power curve") {
        const PreparedSystem ps = prepare(load_case(testing::source_path("cases/smib.json")));
        const SMIBParams p = smib_params_from_case(ps);
        DynamicState start = ps.x0;
        start.delta(0) += 0.2;
        const Equilibrium eq = solve_equilibrium(ps.prefault, ps.machines, start);
        CHECK(eq.frequency_offset == 0.0);
        CHECK(eq.state.omega(0) == doctest::Approx(p.omega_r));
        CHECK(smib_electrical_power(p, eq.state.delta(0)) == doctest::Approx(p.pm).epsilon(1e-9));
        CHECK(eq.state.delta(0) == doctest::Approx(ps.x0.delta(0)).epsilon(1e-8));
    }
    SUBCASE("SMIB beyond the transfer limit has none") {
        const PreparedSystem ps = prepare(load_case(testing::source_path("cases/smib.json")));
        const SMIBParams p = smib_params_from_case(ps);
        const KCoefficients k = k_coefficients(p);
        const double peak = k.k3 + p.e_p * p.v / std::abs(k.k1 * k.k2) * std::hypot(k.k4, k.k5);
        MachineSet m = ps.machines;
        m.constants.pm[0] = peak + 0.5;
        CHECK_THROWS_AS(solve_equilibrium(ps.prefault, m, ps.x0), ConvergenceError);
    }
}
