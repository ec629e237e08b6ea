#include "stochsim/smib.hpp"

#include "stochsim/error.hpp"

#include <cmath>
#include <random>

namespace stochsim {

namespace {

struct Conductances {
    double gl, bl, gs, bs, gr, br;
};

Conductances conductances(const SMIBParams& p) {
    if (p.rl == 0.0 && p.xl == 0.0) throw SingularityError("load impedance R_L + jX_L is zero");
    if (p.rs == 0.0 && p.xd_p == 0.0) throw SingularityError("source impedance R_S + jX'_d is zero");
    if (p.r == 0.0 && p.x == 0.0) throw SingularityError("line impedance R + jX is zero");
    const cplx yl = 1.0 / cplx{p.rl, p.xl};
    const cplx ys = 1.0 / cplx{p.rs, p.xd_p};
    const cplx yr = 1.0 / cplx{p.r, p.x};
    return {yl.real(), yl.imag(), ys.real(), ys.imag(), yr.real(), yr.imag()};
}

std::size_t grid_index(const BrownianPath& path, double t) {
    const double r = t / path.dt;
    const double n = std::round(r);
    if (t < 0.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n) || n > static_cast<double>(path.b.size() - 1)) {
        throw RangeError("time is not on the Brownian path grid");
    }
    return static_cast<std::size_t>(n);
}

}  // namespace

KCoefficients k_coefficients(const SMIBParams& p) {
    const auto [gl, bl, gs, bs, gr, br] = conductances(p);
    const double gsum = gl + gr + gs;
    const double bsum = bl + br + bs;
    if (bsum == 0.0) throw SingularityError("B_L + B_R + B_S vanishes (k1)");
    if (gsum == 0.0) throw SingularityError("G_L + G_R + G_S vanishes (k2)");
    KCoefficients k;
    k.k1 = gsum * gsum / bsum + bsum;
    k.k2 = gsum + bsum * bsum / gsum;
    k.k3 = p.e_p * p.e_p * ((gs * (bl + br) + bs * (gl + gr)) / k.k1 - (bs * (bl + br) - gs * (gl + gr)) / k.k2);
    k.k4 = -k.k2 * (bs * gr + gs * br) + k.k1 * (bs * br - gs * gr);
    k.k5 = -k.k2 * (bs * br - gs * gr) - k.k1 * (bs * gr + gs * br);
    return k;
}

double smib_electrical_power(const SMIBParams& p, double delta) {
    const KCoefficients k = k_coefficients(p);
    const double c = p.e_p * p.v / (k.k1 * k.k2);
    return k.k3 + c * (k.k4 * std::cos(delta) + k.k5 * std::sin(delta));
}

OmegaTerms smib_omega_terms(const SMIBParams& p, double delta0, double omega0) {
    const KCoefficients k = k_coefficients(p);
    const double c = p.e_p * p.v / (k.k1 * k.k2);
    const double cs = std::cos(delta0), sn = std::sin(delta0);
    const double dw = omega0 - p.omega_r;
    OmegaTerms w;
    w.c0 = omega0;
    w.c1 = -p.omega_r / (2.0 * p.H) * (p.D * dw / p.omega_r - p.pm + k.k3 + k.k4 * c * cs + k.k5 * c * sn);
    w.c2 = p.omega_r / (8.0 * p.H * p.H) *
           (p.D * p.D * dw / p.omega_r + p.D * (-p.pm + k.k3) + p.D * k.k4 * c * cs + p.D * k.k5 * c * sn -
            2.0 * p.H * dw * k.k5 * c * cs + 2.0 * p.H * dw * k.k4 * c * sn);
    return w;
}

OmegaTerms smib_omega_terms_uncorrected(const SMIBParams& p, double delta0, double omega0) {
    const KCoefficients k = k_coefficients(p);
    const double c = p.e_p * p.v / (k.k1 * k.k2);
    const double cs = std::cos(delta0), sn = std::sin(delta0);
    const double dw = omega0 - p.omega_r;
    OmegaTerms w = smib_omega_terms(p, delta0, omega0);
    w.c2 = p.omega_r / (8.0 * p.H * p.H) *
           (p.D * p.D * dw / p.omega_r + p.D * (-p.pm + k.k3) + k.k4 * c * cs + k.k5 * c * sn +
            2.0 * p.H * p.omega_r * k.k5 * c * cs - 2.0 * p.H * p.omega_r * k.k4 * c * sn - 2.0 * p.H * dw * c * cs);
    return w;
}

double smib_omega_sas(const SMIBParams& p, double delta0, double omega0, double t) {
    const OmegaTerms w = smib_omega_terms(p, delta0, omega0);
    return w.c0 + t * (w.c1 + t * w.c2);
}

BrownianPath make_brownian_path(std::uint64_t seed, double span, double dt) {
    if (!(dt > 0.0) || !(span > 0.0)) throw DomainError("Brownian path needs positive span and step");
    const auto n = static_cast<std::size_t>(std::llround(span / dt));
    BrownianPath path;
    path.dt = dt;
    path.b.assign(n + 1, 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    for (std::size_t i = 1; i <= n; ++i) path.b[i] = path.b[i - 1] + normal(rng);
    return path;
}

std::vector<double> rl_sas_terms(OUParams p, double r0, double t, const BrownianPath& path, std::size_t order) {
    const std::size_t m = grid_index(path, t);
    std::vector<double> integral(path.b.begin(), path.b.begin() + static_cast<std::ptrdiff_t>(m + 1));
    std::vector<double> terms(order + 1);
    double power = 1.0;      // (-a)^n
    double monomial = 1.0;   // tⁿ/n!
    for (std::size_t n = 0; n <= order; ++n) {
        if (n > 0) {
            double prev = integral[0];
            integral[0] = 0.0;
            for (std::size_t i = 1; i <= m; ++i) {
                const double cur = integral[i];
                integral[i] = integral[i - 1] + 0.5 * path.dt * (prev + cur);
                prev = cur;
            }
            power *= -p.a;
            monomial *= t / static_cast<double>(n);
        }
        terms[n] = power * (r0 * monomial + p.b * integral[m]);
    }
    return terms;
}

double rl_closed_form(OUParams p, double r0, double t, const BrownianPath& path) {
    const std::size_t m = grid_index(path, t);
    std::vector<double> increments(m);
    for (std::size_t i = 0; i < m; ++i) increments[i] = path.b[i + 1] - path.b[i];
    return ou_closed_form(r0, p, t, increments);
}

SMIBParams smib_params_from_case(const PreparedSystem& ps) {
    const SystemCase& sc = ps.sc;
    if (sc.generators.size() != 1) throw ValidationError("SMIB case needs exactly one generator");
    const auto inf = sc.infinite_bus();
    if (!inf) throw ValidationError("SMIB case needs an infinite bus without a generator");
    if (sc.branches.size() != 1) throw ValidationError("SMIB case needs a single tie line");
    const auto& br = sc.branches.front();
    if (br.b_shunt != 0.0 || br.ratio != 1.0) throw ValidationError("SMIB tie line must be a plain series impedance");
    if (sc.buses[*inf].angle != 0.0) throw ValidationError("SMIB infinite bus must sit at angle 0");

    const auto& g = sc.generators.front();
    if (g.params.xq_p != g.params.xd_p) throw ValidationError("SMIB oracle assumes x'q = x'd");
    const std::size_t gb = sc.bus_index(g.bus);
    SMIBParams p;
    p.H = g.params.H;
    p.D = g.params.D;
    p.omega_r = g.params.omega_r;
    p.pm = ps.machines.constants.pm.front();
    p.e_p = std::hypot(ps.x0.eq_p(0), ps.x0.ed_p(0));
    p.v = sc.buses[*inf].v_set;
    p.rs = g.params.Rs;
    p.xd_p = g.params.xd_p;
    p.r = br.z.real();
    p.x = br.z.imag();
    cplx yl{0.0, 0.0};
    for (const auto& l : sc.loads) {
        if (l.bus == g.bus) yl = load_to_admittance(l.p, l.q, ps.profile[gb]);
    }
    if (yl == cplx{0.0, 0.0}) throw ValidationError("SMIB case needs a load at the generator bus");
    const cplx zl = 1.0 / yl;
    p.rl = zl.real();
    p.xl = zl.imag();
    return p;
}

}  // namespace stochsim
