#include "stochsim/series.hpp"

#include "stochsim/error.hpp"

#include <cmath>

namespace stochsim {

namespace {

void require_same_order(const Series& a, const Series& b) {
    if (a.order() != b.order()) throw DomainError("series operands have different orders");
}

}  // namespace

Series::Series(std::vector<double> coefficients) : c_(std::move(coefficients)) {
    if (c_.empty()) throw DomainError("series needs at least one coefficient");
}

Series Series::constant(double value, std::size_t order) {
    Series s(order);
    s.c_[0] = value;
    return s;
}

Series Series::variable(double value, std::size_t order) {
    Series s(order);
    s.c_[0] = value;
    if (order >= 1) s.c_[1] = 1.0;
    return s;
}

double Series::evaluate(double t) const {
    double acc = 0.0;
    for (std::size_t n = c_.size(); n-- > 0;) acc = acc * t + c_[n];
    return acc;
}

namespace taylor {

std::pair<double, double> sin_cos(std::span<const double> x, std::span<const double> s,
                                  std::span<const double> c, std::size_t n) {
    double sn = 0.0, cn = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
        const double w = static_cast<double>(j) * x[j];
        sn += w * c[n - j];
        cn -= w * s[n - j];
    }
    return {sn / static_cast<double>(n), cn / static_cast<double>(n)};
}

double reciprocal(std::span<const double> a, std::span<const double> r, std::size_t n) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= n; ++j) acc += a[j] * r[n - j];
    return -acc / a[0];
}

}  // namespace taylor

Series operator+(const Series& a, const Series& b) {
    require_same_order(a, b);
    Series r(a.order());
    for (std::size_t n = 0; n <= a.order(); ++n) r[n] = a[n] + b[n];
    return r;
}

Series operator-(const Series& a, const Series& b) {
    require_same_order(a, b);
    Series r(a.order());
    for (std::size_t n = 0; n <= a.order(); ++n) r[n] = a[n] - b[n];
    return r;
}

Series operator-(const Series& a) { return scale(a, -1.0); }

Series operator*(const Series& a, const Series& b) {
    require_same_order(a, b);
    Series r(a.order());
    for (std::size_t n = 0; n <= a.order(); ++n) r[n] = taylor::cauchy(a.coefficients(), b.coefficients(), n);
    return r;
}

Series operator*(double k, const Series& a) { return scale(a, k); }

Series operator+(const Series& a, double k) {
    Series r = a;
    r[0] += k;
    return r;
}

Series operator+(double k, const Series& a) { return a + k; }

Series operator-(const Series& a, double k) { return a + (-k); }

Series scale(const Series& a, double k) {
    Series r(a.order());
    for (std::size_t n = 0; n <= a.order(); ++n) r[n] = k * a[n];
    return r;
}

std::pair<Series, Series> sin_cos(const Series& a) {
    const std::size_t N = a.order();
    std::vector<double> s(N + 1, 0.0), c(N + 1, 0.0);
    s[0] = std::sin(a[0]);
    c[0] = std::cos(a[0]);
    for (std::size_t n = 1; n <= N; ++n) std::tie(s[n], c[n]) = taylor::sin_cos(a.coefficients(), s, c, n);
    return {Series(std::move(s)), Series(std::move(c))};
}

Series sin(const Series& a) { return sin_cos(a).first; }

Series cos(const Series& a) { return sin_cos(a).second; }

Series reciprocal(const Series& a) {
    if (a[0] == 0.0) throw SingularityError("reciprocal of a series with zero constant term");
    const std::size_t N = a.order();
    std::vector<double> r(N + 1, 0.0);
    r[0] = 1.0 / a[0];
    for (std::size_t n = 1; n <= N; ++n) r[n] = taylor::reciprocal(a.coefficients(), r, n);
    return Series(std::move(r));
}

std::vector<Series> taylor_solution(std::span<const double> x0, const SeriesField& f, std::size_t order) {
    std::vector<Series> x;
    x.reserve(x0.size());
    for (double v : x0) x.push_back(Series::constant(v, order));
    for (std::size_t n = 0; n < order; ++n) {
        const std::vector<Series> fx = f(x);
        for (std::size_t i = 0; i < x.size(); ++i) x[i][n + 1] = fx[i][n] / static_cast<double>(n + 1);
    }
    return x;
}

}  // namespace stochsim
