#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace stochsim {

/// Truncated power series c_0 + c_1 t + ... + c_N t^N on a local clock.
class Series {
public:
    Series() = default;
    explicit Series(std::size_t order) : c_(order + 1, 0.0) {}
    explicit Series(std::vector<double> coefficients);

    static Series constant(double value, std::size_t order);
    /// value + t
    static Series variable(double value, std::size_t order);

    std::size_t order() const { return c_.size() - 1; }
    double operator[](std::size_t n) const { return c_[n]; }
    double& operator[](std::size_t n) { return c_[n]; }
    std::span<const double> coefficients() const { return c_; }

    /// Horner evaluation.
    double evaluate(double t) const;

    friend bool operator==(const Series&, const Series&) = default;

private:
    std::vector<double> c_;
};

// Coefficient-level recurrences. Each returns coefficient n given lower-order
// coefficients of its operands (and of its own outputs where the recurrence
// is implicit), so series can be grown one order at a time.
namespace taylor {

/// Σ_{j=0..n} a_j b_{n-j}
inline double cauchy(std::span<const double> a, std::span<const double> b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= n; ++j) acc += a[j] * b[n - j];
    return acc;
}

/// Coefficient n >= 1 of (sin x, cos x) from x and orders < n of sin/cos.
std::pair<double, double> sin_cos(std::span<const double> x, std::span<const double> s,
                                  std::span<const double> c, std::size_t n);

/// Coefficient n >= 1 of 1/a from a and orders < n of the reciprocal r.
double reciprocal(std::span<const double> a, std::span<const double> r, std::size_t n);

}  // namespace taylor

Series operator+(const Series& a, const Series& b);
Series operator-(const Series& a, const Series& b);
Series operator-(const Series& a);
Series operator*(const Series& a, const Series& b);  // Cauchy product, truncated
Series operator*(double k, const Series& a);
Series operator+(const Series& a, double k);
Series operator+(double k, const Series& a);
Series operator-(const Series& a, double k);

Series scale(const Series& a, double k);
Series sin(const Series& a);
Series cos(const Series& a);
std::pair<Series, Series> sin_cos(const Series& a);
/// Throws SingularityError when the constant term is zero.
Series reciprocal(const Series& a);

/// Order-N series solution of x' = f(x) about x0, built the Adomian way:
/// coefficient n of f applied to the partial series gives c_{n+1} = A_n/(n+1).
using SeriesField = std::function<std::vector<Series>(std::span<const Series>)>;
std::vector<Series> taylor_solution(std::span<const double> x0, const SeriesField& f, std::size_t order);

}  // namespace stochsim
