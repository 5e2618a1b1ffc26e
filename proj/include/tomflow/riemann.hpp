#ifndef TOMFLOW_RIEMANN_HPP
#define TOMFLOW_RIEMANN_HPP

#include <span>
#include <vector>

#include "tomflow/waves.hpp"

namespace tomflow {

enum class Wave1Kind { none, rarefaction, shock };

struct Wave1 {
    Wave1Kind kind = Wave1Kind::none;
    double speed = 0.0;    // shock speed
    double xi_left = 0.0;  // fan edges: lambda_1(u_left), lambda_1(u_bar)
    double xi_right = 0.0;
    std::array<double, 3> rh_residual{}; // shocks: per conserved component
};

enum class Region { L, FAN, MID, R };

/// Intermediate state connecting the 1-wave with the contact:
/// v_bar = v_r, h_bar = q^-1(omega_left - v_r),
/// rho_bar = h_fn^-1(h_bar - h_left + h_fn(rho_left)).
/// Both 1-invariants (omega and h - h_fn(rho)) are continuous across the
/// 1-wave for shocks as well; the shock and rarefaction curves of the first
/// family coincide.
PrimState intermediate_state(const PrimState& u_left, const PrimState& u_right,
                             const ClosureSet& cs);

Wave1 classify_wave1(const PrimState& u_left, const PrimState& u_bar,
                     const ClosureSet& cs);

/// State inside a 1-rarefaction fan at similarity coordinate xi = x/t.
/// rho is bracketed between rho_left and rho_bar; lambda_1 is monotone along
/// the curve wherever the first field is genuinely nonlinear.
PrimState rarefaction_state_closed_form(const PrimState& u_left,
                                        const PrimState& u_bar, double xi,
                                        const ClosureSet& cs);

/// Integral curve of the first field, d/dsigma I = r_1(I) with
/// r_1 = (rho, -q'(h) h'(rho) rho, h'(rho) rho); rho(sigma) = rho_0 e^sigma.
struct RarefactionCurve {
    PrimState anchor;
    std::vector<double> sigma;
    std::vector<PrimState> states;
};

RarefactionCurve integrate_rarefaction_curve(const PrimState& u0, double sigma_end,
                                             const ClosureSet& cs, int steps = 0);

struct RiemannSolution {
    PrimState left, middle, right;
    Wave1 wave1;
    double contact_speed = 0.0;  // v_r; intermediate state sits on its left
    double sigma_star = 0.0;     // signed curve parameter of the intermediate
                                 // state (rarefactions only)
    ClosureSet cs;

    PrimState sample(double t, double x) const;
    Region region(double t, double x) const;
};

RiemannSolution solve_riemann(const PrimState& u_left, const PrimState& u_right,
                              const ClosureSet& cs);

/// v(t, x) minus the linear-in-x interpolation of v across the fan.
/// Defined for rarefaction solutions and sample points inside the closed fan.
std::vector<double> delta_v(const RiemannSolution& sol, double t,
                            std::span<const double> xs);

/// Average of a solution component over [a, b] at time t > 0, splitting the
/// interval at the wave positions and integrating each smooth piece with
/// Gauss-Legendre quadrature. component: 0 = rho, 1 = v, 2 = h.
double cell_average(const RiemannSolution& sol, double t, double a, double b,
                    int component);

} // namespace tomflow

#endif
