#include "tomflow/riemann.hpp"

#include <algorithm>
#include <cmath>

namespace tomflow {

namespace {

bool nearly_equal(const PrimState& a, const PrimState& b) {
    const double tol = 1e-14;
    return std::abs(a.rho - b.rho) <= tol * std::max(1.0, std::abs(a.rho)) &&
           std::abs(a.v - b.v) <= tol * std::max(1.0, std::abs(a.v)) &&
           std::abs(a.h - b.h) <= tol * std::max(1.0, std::abs(a.h));
}

double lambda1(const PrimState& u, const ClosureSet& cs) {
    return eigenvalues(u, cs)[0];
}

} // namespace

PrimState intermediate_state(const PrimState& u_left, const PrimState& u_right,
                             const ClosureSet& cs) {
    const double om_l = omega(u_left, cs);
    double h_bar;
    try {
        h_bar = cs.q.inverse(om_l - u_right.v);
    } catch (const InverseRangeError& e) {
        throw VacuumError(std::string("intermediate_state: omega_left - v_right "
                                      "outside the range of q (vacuum/inadmissible): ") +
                          e.what());
    }
    double rho_bar;
    try {
        rho_bar = cs.h_fn.inverse(h_bar - u_left.h + cs.h_fn(u_left.rho));
    } catch (const InverseRangeError& e) {
        throw NoIntermediateStateError(
            std::string("intermediate_state: deviation invariant leaves the range "
                        "of the density-hesitation map: ") +
            e.what());
    }
    return PrimState{rho_bar, u_right.v, h_bar};
}

Wave1 classify_wave1(const PrimState& u_left, const PrimState& u_bar,
                     const ClosureSet& cs) {
    Wave1 w;
    if (nearly_equal(u_left, u_bar)) {
        w.kind = Wave1Kind::none;
        return w;
    }
    const double lam_l = lambda1(u_left, cs);
    const double lam_b = lambda1(u_bar, cs);
    if (lam_l <= lam_b) {
        w.kind = Wave1Kind::rarefaction;
        w.xi_left = lam_l;
        w.xi_right = lam_b;
        return w;
    }
    if (u_left.rho == u_bar.rho)
        throw InconsistentStateError(
            "classify_wave1: equal densities with unequal velocities admit no "
            "mass-flux shock");
    w.kind = Wave1Kind::shock;
    w.speed = (u_left.rho * u_left.v - u_bar.rho * u_bar.v) / (u_left.rho - u_bar.rho);
    const ConsState Ul = prim_to_cons(u_left, cs);
    const ConsState Ub = prim_to_cons(u_bar, cs);
    const auto Fl = flux_cons(Ul, cs);
    const auto Fb = flux_cons(Ub, cs);
    w.rh_residual = {Fl[0] - Fb[0] - w.speed * (Ul.rho - Ub.rho),
                     Fl[1] - Fb[1] - w.speed * (Ul.z - Ub.z),
                     Fl[2] - Fb[2] - w.speed * (Ul.w - Ub.w)};
    return w;
}

PrimState rarefaction_state_closed_form(const PrimState& u_left,
                                        const PrimState& u_bar, double xi,
                                        const ClosureSet& cs) {
    const double om = omega(u_left, cs);
    const double dev = u_left.h - cs.h_fn(u_left.rho);
    const auto state_of = [&](double rho) {
        const double h = cs.h_fn(rho) + dev;
        return PrimState{rho, om - cs.q(h), h};
    };
    const auto lam_of = [&](double rho) { return lambda1(state_of(rho), cs); };

    double lo = std::min(u_left.rho, u_bar.rho);
    double hi = std::max(u_left.rho, u_bar.rho);
    const double edge_tol = 1e-12 * std::max({1.0, std::abs(lam_of(lo)), std::abs(lam_of(hi))});
    double f_lo = lam_of(lo) - xi;
    double f_hi = lam_of(hi) - xi;
    if (std::abs(f_lo) <= edge_tol) return state_of(lo);
    if (std::abs(f_hi) <= edge_tol) return state_of(hi);
    if (f_lo * f_hi > 0.0) {
        const double fan_lo = std::min(lambda1(u_left, cs), lambda1(u_bar, cs));
        const double fan_hi = std::max(lambda1(u_left, cs), lambda1(u_bar, cs));
        if (xi < fan_lo - edge_tol || xi > fan_hi + edge_tol)
            throw OutOfFanError("rarefaction state: xi = " + std::to_string(xi) +
                                " outside fan [" + std::to_string(fan_lo) + ", " +
                                std::to_string(fan_hi) + "]");
        throw DegenerateFieldError(
            "rarefaction state: lambda_1 is not monotone over the density bracket "
            "(genuine-nonlinearity sign change)");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = lam_of(mid) - xi;
        if ((f_lo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mid))) break;
    }
    return state_of(0.5 * (lo + hi));
}

RarefactionCurve integrate_rarefaction_curve(const PrimState& u0, double sigma_end,
                                             const ClosureSet& cs, int steps) {
    if (!std::isfinite(sigma_end))
        throw InvalidParameterError("integrate_rarefaction_curve: sigma_end not finite");
    if (steps <= 0)
        steps = std::max(200, static_cast<int>(std::ceil(std::abs(sigma_end) * 4000.0)));

    RarefactionCurve curve;
    curve.anchor = u0;
    curve.sigma.reserve(static_cast<std::size_t>(steps) + 1);
    curve.states.reserve(static_cast<std::size_t>(steps) + 1);
    curve.sigma.push_back(0.0);
    curve.states.push_back(u0);
    if (sigma_end == 0.0) return curve;

    const auto rhs = [&](const PrimState& u) {
        const double qp = cs.q.d1(u.h);
        const double hp = cs.h_fn.d1(u.rho);
        return PrimState{u.rho, -qp * hp * u.rho, hp * u.rho};
    };
    const auto axpy = [](const PrimState& u, double a, const PrimState& k) {
        return PrimState{u.rho + a * k.rho, u.v + a * k.v, u.h + a * k.h};
    };

    const double ds = sigma_end / steps;
    PrimState u = u0;
    for (int i = 1; i <= steps; ++i) {
        const PrimState k1 = rhs(u);
        const PrimState k2 = rhs(axpy(u, 0.5 * ds, k1));
        const PrimState k3 = rhs(axpy(u, 0.5 * ds, k2));
        const PrimState k4 = rhs(axpy(u, ds, k3));
        u = PrimState{u.rho + ds / 6.0 * (k1.rho + 2 * k2.rho + 2 * k3.rho + k4.rho),
                      u.v + ds / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v),
                      u.h + ds / 6.0 * (k1.h + 2 * k2.h + 2 * k3.h + k4.h)};
        if (!std::isfinite(u.rho) || !std::isfinite(u.v) || !std::isfinite(u.h))
            throw IntegrationError("integrate_rarefaction_curve: state became non-finite");
        curve.sigma.push_back(i * ds);
        curve.states.push_back(u);
    }
    return curve;
}

RiemannSolution solve_riemann(const PrimState& u_left, const PrimState& u_right,
                              const ClosureSet& cs) {
    RiemannSolution sol;
    sol.left = u_left;
    sol.right = u_right;
    sol.cs = cs;
    sol.contact_speed = u_right.v;
    if (nearly_equal(u_left, u_right)) {
        sol.middle = u_left;
        sol.wave1.kind = Wave1Kind::none;
        sol.sigma_star = 0.0;
        return sol;
    }
    sol.middle = intermediate_state(u_left, u_right, cs);
    sol.wave1 = classify_wave1(u_left, sol.middle, cs);
    sol.sigma_star = std::numeric_limits<double>::quiet_NaN();
    if (sol.wave1.kind == Wave1Kind::rarefaction) {
        // sigma* from the density component of the integral curve; the
        // velocity component is overdetermined and checked for consistency.
        sol.sigma_star = std::log(sol.middle.rho / u_left.rho);
        const double v_check = omega(u_left, cs) - cs.q(sol.middle.h);
        if (std::abs(v_check - sol.middle.v) > 1e-9)
            throw InconsistentStateError(
                "solve_riemann: integral-curve components disagree on the "
                "intermediate state beyond 1e-9");
    }
    return sol;
}

PrimState RiemannSolution::sample(double t, double x) const {
    if (t < 0.0) throw InvalidParameterError("sample: t must be >= 0");
    if (t == 0.0) return x < 0.0 ? left : right;
    const double xi = x / t;
    if (xi >= contact_speed) return right;
    switch (wave1.kind) {
    case Wave1Kind::none:
        return middle;
    case Wave1Kind::shock:
        return xi < wave1.speed ? left : middle;
    case Wave1Kind::rarefaction:
        if (xi <= wave1.xi_left) return left;
        if (xi >= wave1.xi_right) return middle;
        return rarefaction_state_closed_form(left, middle, xi, cs);
    }
    throw Error("sample: unreachable");
}

Region RiemannSolution::region(double t, double x) const {
    if (t == 0.0) return x < 0.0 ? Region::L : Region::R;
    const double xi = x / t;
    if (xi >= contact_speed) return Region::R;
    switch (wave1.kind) {
    case Wave1Kind::none:
        return Region::MID;
    case Wave1Kind::shock:
        return xi < wave1.speed ? Region::L : Region::MID;
    case Wave1Kind::rarefaction:
        if (xi <= wave1.xi_left) return Region::L;
        if (xi >= wave1.xi_right) return Region::MID;
        return Region::FAN;
    }
    throw Error("region: unreachable");
}

double cell_average(const RiemannSolution& sol, double t, double a, double b,
                    int component) {
    if (!(t > 0.0)) throw InvalidParameterError("cell_average: t must be > 0");
    if (!(a < b)) throw InvalidParameterError("cell_average: need a < b");
    if (component < 0 || component > 2)
        throw InvalidParameterError("cell_average: component must be 0, 1 or 2");

    std::vector<double> cuts{a, b};
    if (sol.wave1.kind == Wave1Kind::rarefaction) {
        cuts.push_back(t * sol.wave1.xi_left);
        cuts.push_back(t * sol.wave1.xi_right);
    } else if (sol.wave1.kind == Wave1Kind::shock) {
        cuts.push_back(t * sol.wave1.speed);
    }
    cuts.push_back(t * sol.contact_speed);
    std::sort(cuts.begin(), cuts.end());

    static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double gw[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};

    const auto pick = [component](const PrimState& u) {
        return component == 0 ? u.rho : component == 1 ? u.v : u.h;
    };

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = std::max(a, cuts[i]);
        const double hi = std::min(b, cuts[i + 1]);
        if (!(hi > lo)) continue;
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int g = 0; g < 5; ++g)
            total += gw[g] * half * pick(sol.sample(t, mid + half * gx[g]));
    }
    return total / (b - a);
}

std::vector<double> delta_v(const RiemannSolution& sol, double t,
                            std::span<const double> xs) {
    if (sol.wave1.kind != Wave1Kind::rarefaction)
        throw NotApplicableError("delta_v: solution has no rarefaction fan");
    if (!(t > 0.0)) throw InvalidParameterError("delta_v: t must be > 0");
    const double xa = t * sol.wave1.xi_left;
    const double xb = t * sol.wave1.xi_right;
    const double tol = 1e-12 * std::max({1.0, std::abs(xa), std::abs(xb)});
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) {
        if (x < xa - tol || x > xb + tol)
            throw OutOfFanError("delta_v: sample x = " + std::to_string(x) +
                                " outside fan [" + std::to_string(xa) + ", " +
                                std::to_string(xb) + "]");
        const double xc = std::clamp(x, xa, xb);
        const double v_lin =
            sol.left.v + (xc - xa) / (xb - xa) * (sol.middle.v - sol.left.v);
        out.push_back(sol.sample(t, xc).v - v_lin);
    }
    return out;
}

} // namespace tomflow
