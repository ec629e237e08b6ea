#include "checks.hpp"

#include "stochsim/em.hpp"
#include "stochsim/sas.hpp"
#include "stochsim/smib.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace stochsim::cli {

namespace {

std::string describe(double measured, double tol) {
    std::ostringstream os;
    os.precision(3);
    os << "measured " << measured << ", tolerance " << tol;
    return os.str();
}

CheckResult finish(std::string name, double measured, double tol) {
    return {std::move(name), measured <= tol, measured, tol, describe(measured, tol)};
}

}  // namespace

CheckResult check_smib_equivalence(const CheckOptions& o) {
    const PreparedSystem ps = prepare(load_case(o.smib_case));
    SMIBParams p = smib_params_from_case(ps);
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> ud(-1.0, 1.5), uw(-2.0, 2.0), ue(0.8, 1.3);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        DynamicState x(1);
        x.delta(0) = ud(rng);
        x.omega(0) = p.omega_r + uw(rng);
        x.eq_p(0) = ue(rng);
        p.e_p = x.eq_p(0);
        const SASWindow w = derive_window(x, ps.prefault, ps.machines, 2);
        const OmegaTerms ref = smib_omega_terms(p, x.delta(0), x.omega(0));
        const double c2 = ref.c2 * (1.0 + o.inject);
        auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
        worst = std::max({worst, rel(w.series[1][1], ref.c1), rel(w.series[1][2], c2),
                          rel(w.series[0][1], x.omega(0) - p.omega_r)});
    }
    return finish("smib_coefficients", worst, 1e-10);
}

CheckResult check_ou_variance(const CheckOptions& o) {
    const OUParams p{0.5, 1.0};
    const std::size_t n = o.quick ? 1000 : 100000;
    std::mt19937_64 rng(o.seed + 1);
    std::normal_distribution<double> normal;
    const double dt = 4.0;  // nearly independent samples
    double eps = std::sqrt(stationary_variance(p)) * normal(rng);
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        eps = ou_exact_step(eps, p, dt, normal(rng));
        s += eps;
        ss += eps * eps;
    }
    const double mean = s / static_cast<double>(n);
    const double var = ss / static_cast<double>(n) - mean * mean;
    return finish("ou_stationary_variance", std::abs(var / stationary_variance(p) - 1.0), o.quick ? 0.1 : 0.02);
}

CheckResult check_ou_autocorrelation(const CheckOptions& o) {
    const OUParams p{0.5, 1.0};
    const double tau = 1.0;
    const std::size_t n = o.quick ? 1000 : 100000;
    std::mt19937_64 rng(o.seed + 2);
    std::normal_distribution<double> normal;
    std::vector<double> xs(n);
    double eps = std::sqrt(stationary_variance(p)) * normal(rng);
    for (auto& x : xs) x = eps = ou_exact_step(eps, p, tau, normal(rng));
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(n);
    double c0 = 0.0, c1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c0 += (xs[i] - m) * (xs[i] - m);
        if (i + 1 < n) c1 += (xs[i] - m) * (xs[i + 1] - m);
    }
    return finish("ou_autocorrelation", std::abs(c1 / c0 - std::exp(-p.a * tau)), o.quick ? 0.1 : 0.05);
}

CheckResult check_ou_closed_form(const CheckOptions& o) {
    const OUParams p{0.5, 0.3};
    const double r0 = 1.0, t = 2.0;
    const std::size_t paths = o.quick ? 1000 : 10000, steps = 200;
    std::mt19937_64 rng(o.seed + 3);
    std::normal_distribution<double> normal(0.0, std::sqrt(t / static_cast<double>(steps)));
    std::vector<double> inc(steps), vals(paths);
    for (auto& v : vals) {
        for (auto& d : inc) d = normal(rng);
        v = ou_closed_form(r0, p, t, inc);
    }
    double m = 0.0;
    for (double v : vals) m += v;
    m /= static_cast<double>(paths);
    double var = 0.0;
    for (double v : vals) var += (v - m) * (v - m);
    var /= static_cast<double>(paths - 1);
    const double m_ref = r0 * std::exp(-p.a * t);
    const double v_ref = p.b * p.b * (1.0 - std::exp(-2.0 * p.a * t)) / (2.0 * p.a);
    const double err = std::max(std::abs(m / m_ref - 1.0), std::abs(var / v_ref - 1.0));
    return finish("ou_closed_form_moments", err, o.quick ? 0.1 : 0.03);
}

CheckResult check_cross_solver(const CheckOptions& o) {
    const PreparedSystem ps = prepare(load_case(o.grid_case));
    Scenario sc = load_scenario(o.fault_scenario);
    sc.stochastic.sigma_rel = 0.0;
    if (o.quick) sc.horizon = 2.0;
    validate(sc, ps.sc);
    const NoisePath path = scenario_noise_path(ps.sc, sc, 0);
    SolverConfig sas;
    EMConfig em;
    em.dt = 1e-5;
    em.record_stride = 100;
    const Trajectory a = simulate_sas(ps, sc, sas, path);
    const Trajectory b = simulate_em(ps, sc, em, path);
    double worst = 0.0;
    for (std::size_t r = 0; r < std::min(a.rows(), b.rows()); ++r) {
        for (std::size_t k = 0; k < ps.x0.generator_count(); ++k) {
            worst = std::max(worst, std::abs(a.state(r, 4 * k) - b.state(r, 4 * k)));
        }
    }
    if (a.diverged || b.diverged) worst = INFINITY;
    return finish("cross_solver_deterministic", worst, 1e-3);
}

std::vector<CheckResult> run_all_checks(const CheckOptions& o) {
    return {check_smib_equivalence(o), check_ou_variance(o), check_ou_autocorrelation(o), check_ou_closed_form(o),
            check_cross_solver(o)};
}

}  // namespace stochsim::cli
