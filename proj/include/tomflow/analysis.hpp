#ifndef TOMFLOW_ANALYSIS_HPP
#define TOMFLOW_ANALYSIS_HPP

#include <array>
#include <span>
#include <vector>

#include "tomflow/closures.hpp"

namespace tomflow {

/// Diffusion coefficient of the w-relaxation limit,
/// mu(rho) = rho q'(H(rho)) (h'(rho) - H'(rho)); positive iff H' < h'.
double mu_tom(double rho, const ClosureSet& cs);

/// Frozen vs equilibrium characteristic speeds at h = H(rho).
struct SubcharTriple {
    double lam1_frozen = 0.0; // v - q'(H) h' rho
    double lam1_arz = 0.0;    // v - q'(H) H' rho
    double lam_v = 0.0;       // v
    bool verdict = false;     // lam1_frozen < lam1_arz <= lam_v
};

SubcharTriple subchar_tom(double rho, double v, const ClosureSet& cs);

/// Equilibrium-vs-relaxed speed check of the 2x2 model:
/// lam1_arz(rho, V_eq) <= f_eq'(rho) <= V_eq(rho).
struct SubcharArz {
    double lam1_arz = 0.0;
    double feq_prime = 0.0; // V_eq + rho V_eq'
    double lam_v = 0.0;     // V_eq(rho)
    bool verdict = false;
    bool assumption_violated = false; // V_eq' >= 0 at the sample
};

SubcharArz subchar_arz(double rho, const ClosureSet& cs);

/// Diffusion coefficient of the velocity-relaxed 2x2 model,
/// -rho^2 V_eq'(rho) (V_eq'(rho) + P'(rho)); the hesitation derivative is
/// the derived P' = d/drho q(H(rho)).
struct MuArz {
    double value = 0.0;
    bool nonnegative = false;
};

MuArz mu_arz(double rho, const ClosureSet& cs);

/// Correction coefficient of the frozen-characteristics expansion,
/// gamma(rho) = q''(H(rho)) h'(rho) rho (H'(rho) - h'(rho)).
double gamma_hc(double rho, const ClosureSet& cs);

/// First characteristic speed corrected by the acceleration state:
/// (v - q'(H) h' rho) - eps gamma(rho) rho_dot.
double lambda1_hc(double rho, double v, double rho_dot, double epsilon,
                  const ClosureSet& cs);

/// Chapman-Enskog diffusion matrix of the velocity-family relaxation and the
/// consistency residuals. The source relation equates q' h' rho to both
/// V_C - lam1_C and lam1_C - V_C depending on the sign convention read off
/// the statement; both residuals are reported, none is chosen.
struct CorliDiffusion {
    std::array<std::array<double, 2>, 2> matrix{};
    double lam1_c = 0.0;
    double prefactor = 0.0; // lam1_C - (V_C - q' h' rho)
};

CorliDiffusion mu_corli(double rho, double h, const ClosureSet& cs);

struct CorliConsistency {
    double r = 0.0;       // q' h' rho - (V_C - lam1_C)
    double r_tilde = 0.0; // q' h' rho - (lam1_C - V_C)
};

CorliConsistency corli_consistency(double rho, double h, const ClosureSet& cs);

/// One row of the stability report; velocities are evaluated at v =
/// V_eq(rho) when available, else at v = 0 (the verdicts do not depend on v).
struct StabilitySample {
    double rho = 0.0;
    double mu_tom = 0.0;
    double mu_arz = std::numeric_limits<double>::quiet_NaN();
    double gamma_hc = std::numeric_limits<double>::quiet_NaN();
    double lam1_frozen = 0.0;
    double lam1_arz = 0.0;
    double lam_v = 0.0;
    double feq_prime = std::numeric_limits<double>::quiet_NaN();
    bool sc_tom = false;
    bool sc_arz = false;
};

struct StabilityReport {
    std::vector<StabilitySample> samples;
    bool all_sc_tom = true;
    bool all_sc_arz = true;
};

StabilityReport stability_report(std::span<const double> rho_values, const ClosureSet& cs);

} // namespace tomflow

#endif
