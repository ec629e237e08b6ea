#include "stochsim/error.hpp"
#include "stochsim/series.hpp"

#include <doctest.h>

#include <cmath>

using namespace stochsim;

namespace {

void check_coefficients(const Series& s, std::vector<double> expected) {
    REQUIRE(s.order() + 1 == expected.size());
    for (std::size_t n = 0; n < expected.size(); ++n) {
        CAPTURE(n);
        CHECK(s[n] == doctest::Approx(expected[n]).epsilon(1e-15));
    }
}

// Endpoint error of one window of x' = -x from x(0) = 1.
double window_error(std::size_t order, double h) {
    const double x0 = 1.0;
    const auto sol = taylor_solution(std::span(&x0, 1), [](std::span<const Series> x) {
        return std::vector<Series>{-x[0]};
    }, order);
    return std::abs(sol[0].evaluate(h) - std::exp(-h));
}

}  // namespace

TEST_CASE("sin of a constant series is constant") {
    const Series s = sin(Series::constant(0.7, 4));
    CHECK(s[0] == std::sin(0.7));
    for (std::size_t n = 1; n <= 4; ++n) CHECK(s[n] == 0.0);
}

TEST_CASE("Cauchy product truncates") {
    check_coefficients(Series({1.0, 1.0, 0.0}) * Series({1.0, -1.0, 0.0}), {1.0, 0.0, -1.0});
    check_coefficients(Series({1.0, 2.0}) * Series({3.0, 4.0}), {3.0, 10.0});
}

TEST_CASE("sin and cos of t") {
    const Series t({0.0, 1.0, 0.0, 0.0});
    check_coefficients(sin(t), {0.0, 1.0, 0.0, -1.0 / 6.0});
    check_coefficients(cos(t), {1.0, 0.0, -0.5, 0.0});
    const auto [s, c] = sin_cos(Series::variable(0.3, 5));
    for (std::size_t n = 0; n <= 5; ++n) {
        // d^n/dt^n sin(0.3 + t) / n!
        const double fact = std::tgamma(static_cast<double>(n) + 1.0);
        CHECK(s[n] == doctest::Approx(std::sin(0.3 + M_PI / 2 * static_cast<double>(n)) / fact).epsilon(1e-14));
        CHECK(c[n] == doctest::Approx(std::cos(0.3 + M_PI / 2 * static_cast<double>(n)) / fact).epsilon(1e-14));
    }
}

TEST_CASE("reciprocal") {
    check_coefficients(reciprocal(Series({1.0, -1.0, 0.0, 0.0})), {1.0, 1.0, 1.0, 1.0});
    const Series a({2.0, 0.5, -1.0, 3.0});
    check_coefficients(a * reciprocal(a), {1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(reciprocal(Series({0.0, 1.0})), SingularityError);
}

TEST_CASE("arithmetic and evaluation") {
    const Series a({1.0, 2.0, 3.0});
    const Series b({0.5, -1.0, 0.25});
    check_coefficients(a + b, {1.5, 1.0, 3.25});
    check_coefficients(a - b, {0.5, 3.0, 2.75});
    check_coefficients(-a, {-1.0, -2.0, -3.0});
    check_coefficients(2.0 * a, {2.0, 4.0, 6.0});
    check_coefficients(scale(a, -1.0), {-1.0, -2.0, -3.0});
    check_coefficients(a + 1.0, {2.0, 2.0, 3.0});
    check_coefficients(1.0 + a, {2.0, 2.0, 3.0});
    check_coefficients(a - 1.0, {0.0, 2.0, 3.0});
    CHECK(a.evaluate(0.0) == 1.0);
    CHECK(a.evaluate(2.0) == doctest::Approx(1.0 + 4.0 + 12.0));
    CHECK_THROWS_AS(a * Series({1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(a + Series({1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(Series(std::vector<double>{}), DomainError);
}

TEST_CASE("series solution of x' = -a x is the exponential series") {
    const double a = 1.7, x0 = 0.9;
    const auto sol = taylor_solution(std::span(&x0, 1), [a](std::span<const Series> x) {
        return std::vector<Series>{scale(x[0], -a)};
    }, 5);
    double expected = x0;
    for (std::size_t n = 0; n <= 5; ++n) {
        CHECK(sol[0][n] == doctest::Approx(expected).epsilon(1e-14));
        expected *= -a / static_cast<double>(n + 1);
    }
}

TEST_CASE("order-2 window of x' = -x at t = 0.001") {
    const double x0 = 1.0;
    const auto sol = taylor_solution(std::span(&x0, 1), [](std::span<const Series> x) {
        return std::vector<Series>{-x[0]};
    }, 2);
    CHECK(sol[0].evaluate(0.001) == doctest::Approx(1.0 - 0.001 + 5e-7).epsilon(1e-15));
    CHECK(sol[0].evaluate(0.0) == 1.0);
}

TEST_CASE("window error scales as h^(N+1)") {
    for (std::size_t order = 1; order <= 4; ++order) {
        CAPTURE(order);
        const double h = order <= 2 ? 0.02 : 0.1;
        const double slope = std::log2(window_error(order, h) / window_error(order, h / 2));
        CHECK(std::abs(slope - static_cast<double>(order + 1)) < 0.3);
    }
}

TEST_CASE("coupled system: harmonic oscillator") {
    const std::vector<double> x0{0.0, 1.0};
    const auto sol = taylor_solution(x0, [](std::span<const Series> x) {
        return std::vector<Series>{x[1], -x[0]};
    }, 10);
    CHECK(sol[0].evaluate(0.1) == doctest::Approx(std::sin(0.1)).epsilon(1e-12));
    CHECK(sol[1].evaluate(0.1) == doctest::Approx(std::cos(0.1)).epsilon(1e-12));
}
