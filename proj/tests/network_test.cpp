#include "support.hpp"

#include "stochsim/error.hpp"
#include "stochsim/machine.hpp"
#include "stochsim/network.hpp"

#include <doctest.h>

#include <random>

using namespace stochsim;

TEST_CASE("load_to_admittance") {
    CHECK(load_to_admittance(1.0, 0.0, {1.0, 0.0}) == cplx{1.0, 0.0});
    CHECK(load_to_admittance(0.0, 0.0, std::polar(0.9, 0.3)) == cplx{0.0, 0.0});
    const cplx y = load_to_admittance(1.0, 0.5, {2.0, 0.0});
    CHECK(y.real() == doctest::Approx(0.25));
    CHECK(y.imag() == doctest::Approx(-0.125));
    CHECK_THROWS_AS(load_to_admittance(1.0, 0.0, {0.0, 0.0}), DomainError);
}

TEST_CASE("kron_reduce with nothing to eliminate") {
    Eigen::MatrixXcd Y(2, 2);
    Y << cplx{1, -3}, cplx{-1, 2}, cplx{-1, 2}, cplx{2, -4};
    CHECK(kron_reduce(Y, 2).isApprox(Y, 0.0));
}

TEST_CASE("kron_reduce of a three-node chain") {
    // 1 -a- 2 -b- 3, shunt c at 3; node 3 eliminated.
    const cplx a{0.5, -4.0}, b{1.0, -10.0}, c{0.8, 0.3};
    Eigen::MatrixXcd Y(3, 3);
    Y << a, -a, 0.0, -a, a + b, -b, 0.0, -b, b + c;
    const Eigen::MatrixXcd R = kron_reduce(Y, 2);
    const cplx tail = b - b * b / (b + c);  // b in series with c
    CHECK(std::abs(R(0, 0) - a) < 1e-14);
    CHECK(std::abs(R(0, 1) + a) < 1e-14);
    CHECK(std::abs(R(1, 0) + a) < 1e-14);
    CHECK(std::abs(R(1, 1) - (a + tail)) < 1e-13);

    Eigen::MatrixXcd S(2, 2);
    S << cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{0, 0};  // isolated node with no shunt
    CHECK_THROWS_AS(kron_reduce(S, 1), SingularityError);
}

TEST_CASE("Kron reduction is exact and keeps symmetry") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 5, keep = 2;
        Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Y(i, i) += cplx{u(rng) * 0.1, u(rng) * 0.2};  // shunt
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const cplx y = 1.0 / cplx{u(rng) * 0.05, u(rng)};
                Y(i, i) += y;
                Y(j, j) += y;
                Y(i, j) -= y;
                Y(j, i) -= y;
            }
        }
        const Eigen::MatrixXcd R = kron_reduce(Y, keep);
        CHECK((R - R.transpose()).norm() < 1e-12 * R.norm());

        Eigen::VectorXcd e(keep);
        e << std::polar(u(rng), u(rng)), std::polar(u(rng), -u(rng));
        // Interior injections zero: solve the full system for interior voltages.
        const Eigen::VectorXcd v_in =
            -Y.bottomRightCorner(n - keep, n - keep).fullPivLu().solve(Y.bottomLeftCorner(n - keep, keep) * e);
        const Eigen::VectorXcd i_full = Y.topLeftCorner(keep, keep) * e + Y.topRightCorner(keep, n - keep) * v_in;
        CHECK((i_full - R * e).norm() < 1e-10);
    }
}

TEST_CASE("reduced network of the 39-bus case") {
    const PreparedSystem ps = prepare(load_case(testing::source_path("cases/ieee39.json")));
    const auto& net = ps.prefault;
    CHECK(net.size() == 10);
    CHECK((net.Y - net.Y.transpose()).norm() < 1e-10 * net.Y.norm());
    CHECK_FALSE(net.has_infinite_bus);
    CHECK(net.source.norm() == 0.0);

    // Bus voltages recovered from the internal EMFs reproduce the power flow.
    std::vector<cplx> emf(10);
    for (std::size_t k = 0; k < 10; ++k) {
        emf[k] = cplx{ps.x0.eq_p(k), -ps.x0.ed_p(k)} * std::polar(1.0, ps.x0.delta(k));
    }
    for (std::size_t b = 0; b < ps.sc.buses.size(); ++b) {
        CHECK(std::abs(net.bus_voltage(b, emf) - ps.profile[b]) < 1e-9);
    }

    // apply() is the dense product.
    std::vector<double> re(10), im(10), ir(10), ii(10);
    for (std::size_t k = 0; k < 10; ++k) {
        re[k] = emf[k].real();
        im[k] = emf[k].imag();
    }
    net.apply(re, im, ir, ii, true);
    const Eigen::VectorXcd i = net.Y * Eigen::Map<const Eigen::VectorXcd>(emf.data(), 10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(cplx{ir[k], ii[k]} - i(static_cast<Eigen::Index>(k))) < 1e-12);

    // A bolted fault pulls the faulted bus to ground.
    const ReducedNetwork f = build_reduced_network(ps.sc, {Stage::fault_on, 3, {}}, mean_loads(ps.sc), ps.profile);
    CHECK(std::abs(f.bus_voltage(ps.sc.bus_index(3), emf)) < 1e-5);
}

TEST_CASE("network conditions must resolve") {
    const SystemCase sc = load_case(testing::source_path("cases/ieee39.json"));
    CHECK(resolve_condition(sc, {Stage::post_fault, 0, {{3, 4}}}).size() == 1);
    CHECK(resolve_condition(sc, {Stage::post_fault, 0, {{4, 3}}}).size() == 1);
    CHECK_THROWS_AS(resolve_condition(sc, {Stage::fault_on, 99, {}}), ValidationError);
    CHECK_THROWS_AS(resolve_condition(sc, {Stage::post_fault, 0, {{3, 30}}}), ValidationError);
}

TEST_CASE("SMIB reduction matches the hand-reduced circuit") {
    const PreparedSystem ps = prepare(load_case(testing::source_path("cases/smib.json")));
    const auto& g = ps.sc.generators[0].params;
    const auto& br = ps.sc.branches[0];
    const cplx v_inf = std::polar(ps.sc.buses[1].v_set, ps.sc.buses[1].angle);
    auto loads = mean_loads(ps.sc);
    for (double shift : {0.0, 0.05, -0.1}) {
        CAPTURE(shift);
        loads[0].p = 0.3 + shift;
        const ReducedNetwork net = build_reduced_network(ps.sc, {}, loads, ps.profile);
        // E -ys- bus 1 (load yl) -yr- infinite bus
        const cplx ys = 1.0 / cplx{g.Rs, g.xd_p};
        const cplx yr = 1.0 / br.z;
        const cplx yl = load_to_admittance(loads[0].p, loads[0].q, ps.profile[0]);
        const cplx sum = ys + yl + yr;
        CHECK(net.has_infinite_bus);
        CHECK(std::abs(net.Y(0, 0) - (ys - ys * ys / sum)) < 1e-12);
        CHECK(std::abs(net.source(0) + ys * yr * v_inf / sum) < 1e-12);
    }
}
