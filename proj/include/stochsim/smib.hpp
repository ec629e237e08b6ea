#pragma once

#include "stochsim/machine.hpp"
#include "stochsim/stochastic.hpp"

#include <span>
#include <vector>

namespace stochsim {

/// Single machine behind R_S + jX'_d, constant-impedance load R_L + jX_L at
/// its terminal, tie line R + jX to an infinite bus of magnitude V.
struct SMIBParams {
    double H = 0.0, D = 0.0, omega_r = 0.0, pm = 0.0;
    double e_p = 0.0;  // |E'|
    double v = 1.0;
    double rs = 0.0, xd_p = 0.0;
    double r = 0.0, x = 0.0;
    double rl = 0.0, xl = 0.0;
    OUParams rl_ou, xl_ou;
};

struct KCoefficients {
    double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0, k5 = 0.0;
};

/// Closed-form coefficients of the electrical power
/// P_e = k3 + E'V/(k1 k2) (k4 cos δ + k5 sin δ). Throws SingularityError
/// naming the vanishing conductance or susceptance sum.
KCoefficients k_coefficients(const SMIBParams& p);

/// Electrical power from the k-coefficients.
double smib_electrical_power(const SMIBParams& p, double delta);

/// t^0, t^1, t^2 coefficients of the order-2 rotor speed series about
/// (δ0, ω0).
struct OmegaTerms {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};

/// Second-order coefficient derived by differentiating the swing equation
/// (damping on (ω - ω_R)/ω_R).
OmegaTerms smib_omega_terms(const SMIBParams& p, double delta0, double omega0);

/// The commonly quoted closed form of the second-order coefficient. Disagrees
/// with the swing equation; kept for the fixture comparison.
OmegaTerms smib_omega_terms_uncorrected(const SMIBParams& p, double delta0, double omega0);

/// ω0 + ω1(t) + ω2(t)
double smib_omega_sas(const SMIBParams& p, double delta0, double omega0, double t);

/// Brownian path sampled on a uniform grid, B[0] = 0.
struct BrownianPath {
    double dt = 1e-4;
    std::vector<double> b;

    double span() const { return dt * static_cast<double>(b.size() - 1); }
};

BrownianPath make_brownian_path(std::uint64_t seed, double span, double dt);

/// Terms n = 0..order of the series of dR = -a R dt + b dB about R(0):
/// (-a)^n [R(0) tⁿ/n! + b I_n(t)], where I_0 = B and I_n is the n-fold
/// iterated integral of B, by cumulative trapezoid on the path. t must lie on
/// the path grid. The same form serves X_L with its own OU parameters.
std::vector<double> rl_sas_terms(OUParams p, double r0, double t, const BrownianPath& path, std::size_t order = 2);

/// e^{-at} [R(0) + b Σ e^{a s_i} ΔB_i] over the path up to t, left endpoints.
double rl_closed_form(OUParams p, double r0, double t, const BrownianPath& path);

/// Oracle parameters for a prepared single-machine case whose slack bus is an
/// infinite bus joined to the generator bus by one line. The load impedance is
/// the constant-impedance equivalent at the solved profile.
SMIBParams smib_params_from_case(const PreparedSystem& ps);

}  // namespace stochsim
