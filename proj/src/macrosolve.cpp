#include "tomflow/macrosolve.hpp"

#include <algorithm>
#include <cmath>

#include "tomflow/threading.hpp"

namespace tomflow {

void RelaxationConfig::validate() const {
    if (variant != RelaxationVariant::none && !(epsilon > 0.0))
        throw InvalidParameterError("relaxation: epsilon must be > 0");
}

namespace {

int ghost_index(int i, int n, GhostPolicy g) {
    if (i < 0) return g == GhostPolicy::periodic ? i + n : 0;
    if (i >= n) return g == GhostPolicy::periodic ? i - n : n - 1;
    return i;
}

void check_grid(const FvGrid& grid, std::size_t ncells) {
    if (grid.n <= 0 || static_cast<std::size_t>(grid.n) != ncells)
        throw ShapeError("fv: grid size does not match cell count");
    if (!(grid.a < grid.b)) throw ShapeError("fv: empty grid interval");
}

double cell_speed(const PrimState& u, const ClosureSet& cs) {
    const double lam1 = u.v - cs.q.d1(u.h) * cs.h_fn.d1(u.rho) * u.rho;
    return std::max(std::abs(lam1), std::abs(u.v));
}

// Exact relaxation substep over dt on a single cell; rho is frozen, so the
// source ODE is linear and has a closed-form exponential.
ConsState relax_cell(const ConsState& u, const ClosureSet& cs, const RelaxationConfig& rc,
                     double dt) {
    switch (rc.variant) {
    case RelaxationVariant::none:
        return u;
    case RelaxationVariant::w_to_W: {
        const double W = cs.W_eq(u.rho);
        const double rate = rc.source_sign == SourceSign::dissipative ? -dt / rc.epsilon
                                                                      : dt / rc.epsilon;
        ConsState out = u;
        out.w = W + (u.w - W) * std::exp(rate);
        return out;
    }
    case RelaxationVariant::z_arz: {
        const PrimState p = cons_to_prim(u, cs);
        const double V = cs.require_V("z_arz source")(u.rho);
        const double v_new = V + (p.v - V) * std::exp(-dt / rc.epsilon);
        ConsState out = u;
        out.z = u.rho * (v_new + cs.q(p.h));
        return out;
    }
    case RelaxationVariant::z_vc: {
        const PrimState p = cons_to_prim(u, cs);
        const auto& Vc = cs.require_Vc("z_vc source");
        const double V = Vc.eval(u.rho, p.h);
        const double v_new = V + (p.v - V) * std::exp(-dt / rc.epsilon);
        ConsState out = u;
        out.z = u.rho * (v_new + cs.q(p.h));
        return out;
    }
    }
    throw Error("relax_cell: unreachable");
}

void apply_source(std::vector<ConsState>& U, const ClosureSet& cs,
                  const RelaxationConfig& rc, double dt) {
    if (rc.variant == RelaxationVariant::none) return;
    for (auto& u : U) u = relax_cell(u, cs, rc, dt);
}

// One forward-Euler Rusanov update over dt. Throws PositivityError.
std::vector<ConsState> hyperbolic_update(const std::vector<ConsState>& U,
                                         const FvGrid& grid, GhostPolicy ghost,
                                         const ClosureSet& cs, double dt) {
    const int n = grid.n;
    const double dx = grid.dx();

    std::vector<PrimState> prim(n);
    std::vector<std::array<double, 3>> flux(n);
    std::vector<double> speed(n);
    parallel_for(n, [&](std::size_t i) {
        prim[i] = cons_to_prim(U[i], cs);
        speed[i] = cell_speed(prim[i], cs);
        flux[i] = {U[i].rho * prim[i].v, U[i].z * prim[i].v, U[i].w * prim[i].v};
    });

    std::vector<std::array<double, 3>> fhat(n + 1);
    parallel_for(n + 1, [&](std::size_t j) {
        const int il = ghost_index(static_cast<int>(j) - 1, n, ghost);
        const int ir = ghost_index(static_cast<int>(j), n, ghost);
        const double a = std::max(speed[il], speed[ir]);
        for (int k = 0; k < 3; ++k) {
            const double fl = flux[il][k], fr = flux[ir][k];
            const double ul = k == 0 ? U[il].rho : k == 1 ? U[il].z : U[il].w;
            const double ur = k == 0 ? U[ir].rho : k == 1 ? U[ir].z : U[ir].w;
            fhat[j][k] = 0.5 * (fl + fr) - 0.5 * a * (ur - ul);
        }
    });

    std::vector<ConsState> out(n);
    const double lam = dt / dx;
    for (int i = 0; i < n; ++i) {
        out[i].rho = U[i].rho - lam * (fhat[i + 1][0] - fhat[i][0]);
        out[i].z = U[i].z - lam * (fhat[i + 1][1] - fhat[i][1]);
        out[i].w = U[i].w - lam * (fhat[i + 1][2] - fhat[i][2]);
        if (!(out[i].rho > 0.0))
            throw PositivityError("fv: non-positive density in cell " + std::to_string(i) +
                                      " after update (rho = " + std::to_string(out[i].rho) + ")",
                                  i);
    }
    return out;
}

double max_cell_speed(const std::vector<ConsState>& U, const ClosureSet& cs) {
    double s = 0.0;
    for (const auto& u : U) s = std::max(s, cell_speed(cons_to_prim(u, cs), cs));
    return s;
}

} // namespace

FvField make_riemann_field(const FvGrid& grid, GhostPolicy ghost, const PrimState& u_left,
                           const PrimState& u_right, double x0, const ClosureSet& cs) {
    if (grid.n <= 0) throw InvalidParameterError("fv: grid needs at least one cell");
    const ConsState cl = prim_to_cons(u_left, cs);
    const ConsState cr = prim_to_cons(u_right, cs);
    FvField f;
    f.grid = grid;
    f.ghost = ghost;
    f.U.resize(grid.n);
    const double dx = grid.dx();
    for (int i = 0; i < grid.n; ++i) {
        const double xl = grid.a + i * dx, xr = xl + dx;
        double frac = 0.0; // portion of the cell left of the jump
        if (xr <= x0) frac = 1.0;
        else if (xl < x0) frac = (x0 - xl) / dx;
        f.U[i].rho = frac * cl.rho + (1.0 - frac) * cr.rho;
        f.U[i].z = frac * cl.z + (1.0 - frac) * cr.z;
        f.U[i].w = frac * cl.w + (1.0 - frac) * cr.w;
    }
    return f;
}

FvField make_field(const FvGrid& grid, GhostPolicy ghost,
                   const std::function<PrimState(double)>& init, const ClosureSet& cs) {
    if (grid.n <= 0) throw InvalidParameterError("fv: grid needs at least one cell");
    FvField f;
    f.grid = grid;
    f.ghost = ghost;
    f.U.resize(grid.n);
    for (int i = 0; i < grid.n; ++i) f.U[i] = prim_to_cons(init(grid.center(i)), cs);
    return f;
}

FvField fv_step(const FvField& f, const ClosureSet& cs, const RelaxationConfig& rc,
                double cfl, double dt_max, FvStepInfo* info) {
    check_grid(f.grid, f.U.size());
    rc.validate();
    if (!(cfl > 0.0 && cfl < 1.0))
        throw InvalidParameterError("fv: cfl must lie in (0, 1)");

    const double dx = f.grid.dx();
    const double s0 = max_cell_speed(f.U, cs);
    double dt = std::min(cfl * dx / std::max(s0, 1e-12), dt_max);

    for (int attempt = 0; attempt < 2; ++attempt) {
        FvField out;
        out.grid = f.grid;
        out.ghost = f.ghost;
        out.t = f.t + dt;
        out.U = f.U;
        apply_source(out.U, cs, rc, 0.5 * dt);
        out.U = hyperbolic_update(out.U, f.grid, f.ghost, cs, dt);
        apply_source(out.U, cs, rc, 0.5 * dt);

        const double s1 = max_cell_speed(out.U, cs);
        if (dt * s1 / dx <= 1.0) {
            if (info) *info = {dt, std::max(s0, s1), attempt};
            return out;
        }
        dt *= 0.5;
    }
    throw CflError("fv: CFL violation persisted after halving dt");
}

FvField fv_solve(FvField f, const ClosureSet& cs, const RelaxationConfig& rc, double cfl,
                 double t_end) {
    long steps = 0;
    while (f.t < t_end - 1e-13) {
        f = fv_step(f, cs, rc, cfl, t_end - f.t);
        if (++steps > 5'000'000)
            throw IntegrationError("fv_solve: step limit exceeded (blow-up?)");
    }
    return f;
}

std::array<double, 3> fv_totals(const FvField& f) {
    const double dx = f.grid.dx();
    std::array<double, 3> tot{0.0, 0.0, 0.0};
    for (const auto& u : f.U) {
        tot[0] += u.rho * dx;
        tot[1] += u.z * dx;
        tot[2] += u.w * dx;
    }
    return tot;
}

std::vector<PrimState> fv_primitives(const FvField& f, const ClosureSet& cs) {
    std::vector<PrimState> p(f.U.size());
    for (std::size_t i = 0; i < f.U.size(); ++i) p[i] = cons_to_prim(f.U[i], cs);
    return p;
}

std::vector<double> entropy_production(const FvField& before, const FvField& after,
                                       double dt, const EntropyPair& pair,
                                       const ClosureSet& cs) {
    check_grid(before.grid, before.U.size());
    if (before.U.size() != after.U.size())
        throw ShapeError("entropy_production: field sizes differ");
    if (!(dt > 0.0)) throw InvalidParameterError("entropy_production: dt must be > 0");

    const int n = before.grid.n;
    const double dx = before.grid.dx();

    std::vector<double> eta0(n), eta1(n), psi0(n), speed(n);
    for (int i = 0; i < n; ++i) {
        const PrimState u0 = cons_to_prim(before.U[i], cs);
        const double w0 = omega(u0, cs);
        if (pair.d2F(w0) < 0.0)
            throw InvalidEntropyError("entropy_production: F'' < 0 at a sample");
        eta0[i] = u0.rho * pair.F(w0);
        psi0[i] = u0.v * eta0[i];
        speed[i] = cell_speed(u0, cs);
        const PrimState u1 = cons_to_prim(after.U[i], cs);
        eta1[i] = u1.rho * pair.F(omega(u1, cs));
    }

    std::vector<double> psihat(n + 1);
    for (int j = 0; j <= n; ++j) {
        const int il = ghost_index(j - 1, n, before.ghost);
        const int ir = ghost_index(j, n, before.ghost);
        const double a = std::max(speed[il], speed[ir]);
        psihat[j] = 0.5 * (psi0[il] + psi0[ir]) - 0.5 * a * (eta0[ir] - eta0[il]);
    }

    std::vector<double> production(n);
    for (int i = 0; i < n; ++i)
        production[i] = (eta1[i] - eta0[i]) / dt + (psihat[i + 1] - psihat[i]) / dx;
    return production;
}

// ---------------------------------------------------------------------------
// 2x2 reference system in (rho, z)

double arz_velocity(const std::array<double, 2>& u, const ClosureSet& cs) {
    if (!(u[0] > 0.0)) throw VacuumError("arz: non-positive density");
    return u[1] / u[0] - cs.P(u[0]);
}

namespace {

double arz_cell_speed(const std::array<double, 2>& u, const ClosureSet& cs) {
    const double v = arz_velocity(u, cs);
    const double lam1 = v - cs.P_d1(u[0]) * u[0];
    return std::max(std::abs(lam1), std::abs(v));
}

std::array<double, 2> arz_flux(const std::array<double, 2>& u, const ClosureSet& cs) {
    const double v = arz_velocity(u, cs);
    return {u[0] * v, u[1] * v};
}

} // namespace

ArzField make_arz_riemann_field(const FvGrid& grid, GhostPolicy ghost, double rho_l,
                                double v_l, double rho_r, double v_r, double x0,
                                const ClosureSet& cs) {
    const std::array<double, 2> cl{rho_l, rho_l * (v_l + cs.P(rho_l))};
    const std::array<double, 2> cr{rho_r, rho_r * (v_r + cs.P(rho_r))};
    ArzField f;
    f.grid = grid;
    f.ghost = ghost;
    f.U.resize(grid.n);
    const double dx = grid.dx();
    for (int i = 0; i < grid.n; ++i) {
        const double xl = grid.a + i * dx, xr = xl + dx;
        double frac = 0.0;
        if (xr <= x0) frac = 1.0;
        else if (xl < x0) frac = (x0 - xl) / dx;
        f.U[i] = {frac * cl[0] + (1 - frac) * cr[0], frac * cl[1] + (1 - frac) * cr[1]};
    }
    return f;
}

ArzField make_arz_field(const FvGrid& grid, GhostPolicy ghost,
                        const std::function<std::array<double, 2>(double)>& init_rho_v,
                        const ClosureSet& cs) {
    ArzField f;
    f.grid = grid;
    f.ghost = ghost;
    f.U.resize(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const auto rv = init_rho_v(grid.center(i));
        f.U[i] = {rv[0], rv[0] * (rv[1] + cs.P(rv[0]))};
    }
    return f;
}

ArzField arz_step(const ArzField& f, const ClosureSet& cs, double epsilon, double cfl,
                  double dt_max, FvStepInfo* info) {
    if (f.grid.n <= 0 || f.U.size() != static_cast<std::size_t>(f.grid.n))
        throw ShapeError("arz: grid size does not match cell count");
    if (!(cfl > 0.0 && cfl < 1.0))
        throw InvalidParameterError("arz: cfl must lie in (0, 1)");

    const int n = f.grid.n;
    const double dx = f.grid.dx();
    double s0 = 0.0;
    for (const auto& u : f.U) s0 = std::max(s0, arz_cell_speed(u, cs));
    double dt = std::min(cfl * dx / std::max(s0, 1e-12), dt_max);

    const bool with_source = std::isfinite(epsilon);
    if (with_source && !(epsilon > 0.0))
        throw InvalidParameterError("arz: epsilon must be > 0");

    const auto source_half = [&](std::vector<std::array<double, 2>>& U, double dth) {
        if (!with_source) return;
        for (auto& u : U) {
            const double v = arz_velocity(u, cs);
            const double V = cs.require_V("arz source")(u[0]);
            const double v_new = V + (v - V) * std::exp(-dth / epsilon);
            u[1] = u[0] * (v_new + cs.P(u[0]));
        }
    };

    for (int attempt = 0; attempt < 2; ++attempt) {
        ArzField out;
        out.grid = f.grid;
        out.ghost = f.ghost;
        out.t = f.t + dt;
        out.U = f.U;
        source_half(out.U, 0.5 * dt);

        std::vector<std::array<double, 2>> flux(n);
        std::vector<double> speed(n);
        for (int i = 0; i < n; ++i) {
            flux[i] = arz_flux(out.U[i], cs);
            speed[i] = arz_cell_speed(out.U[i], cs);
        }
        std::vector<std::array<double, 2>> fhat(n + 1);
        for (int j = 0; j <= n; ++j) {
            const int il = ghost_index(j - 1, n, f.ghost);
            const int ir = ghost_index(j, n, f.ghost);
            const double a = std::max(speed[il], speed[ir]);
            for (int k = 0; k < 2; ++k)
                fhat[j][k] = 0.5 * (flux[il][k] + flux[ir][k]) -
                             0.5 * a * (out.U[ir][k] - out.U[il][k]);
        }
        const double lam = dt / dx;
        std::vector<std::array<double, 2>> next(n);
        bool positive = true;
        int bad = -1;
        for (int i = 0; i < n; ++i) {
            next[i] = {out.U[i][0] - lam * (fhat[i + 1][0] - fhat[i][0]),
                       out.U[i][1] - lam * (fhat[i + 1][1] - fhat[i][1])};
            if (!(next[i][0] > 0.0)) {
                positive = false;
                bad = i;
                break;
            }
        }
        if (!positive)
            throw PositivityError("arz: non-positive density in cell " + std::to_string(bad),
                                  bad);
        out.U = std::move(next);
        source_half(out.U, 0.5 * dt);

        double s1 = 0.0;
        for (const auto& u : out.U) s1 = std::max(s1, arz_cell_speed(u, cs));
        if (dt * s1 / dx <= 1.0) {
            if (info) *info = {dt, std::max(s0, s1), attempt};
            return out;
        }
        dt *= 0.5;
    }
    throw CflError("arz: CFL violation persisted after halving dt");
}

ArzField arz_solve(ArzField f, const ClosureSet& cs, double epsilon, double cfl,
                   double t_end) {
    long steps = 0;
    while (f.t < t_end - 1e-13) {
        f = arz_step(f, cs, epsilon, cfl, t_end - f.t);
        if (++steps > 5'000'000)
            throw IntegrationError("arz_solve: step limit exceeded (blow-up?)");
    }
    return f;
}

// ---------------------------------------------------------------------------
// Scalar LWR Godunov

namespace {

double lwr_extremum(const ScalarClosure& V_eq, double lo, double hi) {
    // Stationary point of f(rho) = rho V(rho) inside [lo, hi], if any.
    const auto fp = [&](double r) { return V_eq(r) + r * V_eq.d1(r); };
    double flo = fp(lo), fhi = fp(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) return std::numeric_limits<double>::quiet_NaN();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = fp(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-14 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

double lwr_godunov_flux(double ul, double ur, const ScalarClosure& V_eq) {
    const auto f = [&](double r) { return r * V_eq(r); };
    if (ul == ur) return f(ul);
    const double lo = std::min(ul, ur), hi = std::max(ul, ur);
    const double star = lwr_extremum(V_eq, lo, hi);
    double best;
    if (ul < ur) {
        best = std::min(f(ul), f(ur));
        if (std::isfinite(star)) best = std::min(best, f(star));
    } else {
        best = std::max(f(ul), f(ur));
        if (std::isfinite(star)) best = std::max(best, f(star));
    }
    return best;
}

} // namespace

ScalarField lwr_step(const ScalarField& f, const ScalarClosure& V_eq, double cfl,
                     double dt_max, FvStepInfo* info) {
    if (f.grid.n <= 0 || f.rho.size() != static_cast<std::size_t>(f.grid.n))
        throw ShapeError("lwr: grid size does not match cell count");
    if (!(cfl > 0.0 && cfl < 1.0))
        throw InvalidParameterError("lwr: cfl must lie in (0, 1)");

    const int n = f.grid.n;
    const double dx = f.grid.dx();
    double s0 = 0.0;
    for (double r : f.rho)
        s0 = std::max(s0, std::abs(V_eq(r) + r * V_eq.d1(r)));
    const double dt = std::min(cfl * dx / std::max(s0, 1e-12), dt_max);

    std::vector<double> fhat(n + 1);
    for (int j = 0; j <= n; ++j) {
        const int il = ghost_index(j - 1, n, f.ghost);
        const int ir = ghost_index(j, n, f.ghost);
        fhat[j] = lwr_godunov_flux(f.rho[il], f.rho[ir], V_eq);
    }
    ScalarField out;
    out.grid = f.grid;
    out.ghost = f.ghost;
    out.t = f.t + dt;
    out.rho.resize(n);
    const double lam = dt / dx;
    for (int i = 0; i < n; ++i) {
        out.rho[i] = f.rho[i] - lam * (fhat[i + 1] - fhat[i]);
        if (!(out.rho[i] > 0.0))
            throw PositivityError("lwr: non-positive density in cell " + std::to_string(i), i);
    }
    if (info) *info = {dt, s0, 0};
    return out;
}

ScalarField lwr_solve(ScalarField f, const ScalarClosure& V_eq, double cfl, double t_end) {
    long steps = 0;
    while (f.t < t_end - 1e-13) {
        f = lwr_step(f, V_eq, cfl, t_end - f.t);
        if (++steps > 5'000'000)
            throw IntegrationError("lwr_solve: step limit exceeded");
    }
    return f;
}

// ---------------------------------------------------------------------------
// Relaxation sweep

std::vector<SweepEntry> epsilon_sweep(const SweepSetup& setup, RelaxationVariant variant,
                                      SourceSign sign, std::span<const double> epsilons,
                                      const ClosureSet& cs) {
    if (variant != RelaxationVariant::w_to_W && variant != RelaxationVariant::z_arz)
        throw CapabilityError("epsilon_sweep: equilibrium reference exists for w_to_W "
                              "and z_arz only");
    if (!setup.initial) throw InvalidParameterError("epsilon_sweep: initial data missing");
    for (double e : epsilons)
        if (!(e > 0.0)) throw ValidationError("epsilon_sweep: epsilon values must be > 0");

    const ScalarClosure& H = cs.require_H("epsilon_sweep");
    const auto project = [&](double x) {
        PrimState u = setup.initial(x);
        u.h = H(u.rho);
        if (variant == RelaxationVariant::z_arz) u.v = cs.require_V("epsilon_sweep")(u.rho);
        return u;
    };

    // Equilibrium reference on the same grid.
    std::vector<double> ref_rho, ref_v;
    if (variant == RelaxationVariant::w_to_W) {
        ArzField ref = make_arz_field(
            setup.grid, setup.ghost,
            [&](double x) {
                const PrimState u = project(x);
                return std::array<double, 2>{u.rho, u.v};
            },
            cs);
        ref = arz_solve(ref, cs, std::numeric_limits<double>::infinity(), setup.cfl,
                        setup.t_end);
        for (const auto& u : ref.U) {
            ref_rho.push_back(u[0]);
            ref_v.push_back(arz_velocity(u, cs));
        }
    } else {
        ScalarField ref;
        ref.grid = setup.grid;
        ref.ghost = setup.ghost;
        ref.rho.resize(setup.grid.n);
        for (int i = 0; i < setup.grid.n; ++i) ref.rho[i] = project(setup.grid.center(i)).rho;
        ref = lwr_solve(ref, *cs.V_eq, setup.cfl, setup.t_end);
        ref_rho = ref.rho;
    }

    const FvField f0 = make_field(setup.grid, setup.ghost, project, cs);
    const double dx = setup.grid.dx();

    std::vector<SweepEntry> table;
    for (double eps : epsilons) {
        SweepEntry entry;
        entry.epsilon = eps;
        try {
            RelaxationConfig rc{variant, eps, sign};
            const FvField f = fv_solve(f0, cs, rc, setup.cfl, setup.t_end);
            double dist = 0.0;
            bool finite = true;
            for (int i = 0; i < setup.grid.n; ++i) {
                const ConsState& u = f.U[i];
                if (!std::isfinite(u.rho) || !std::isfinite(u.z) || !std::isfinite(u.w) ||
                    std::abs(u.rho) > 1e6 || std::abs(u.z) > 1e6 || std::abs(u.w) > 1e6) {
                    finite = false;
                    break;
                }
                const PrimState p = cons_to_prim(u, cs);
                dist += std::abs(p.rho - ref_rho[i]) * dx;
                if (variant == RelaxationVariant::w_to_W)
                    dist += std::abs(p.v - ref_v[i]) * dx;
            }
            if (!finite) {
                entry.diverged = true;
                entry.note = "blow-up detected (|U| > 1e6 or non-finite)";
            } else {
                entry.l1_distance = dist;
            }
        } catch (const Error& err) {
            entry.diverged = true;
            entry.note = err.what();
        }
        table.push_back(std::move(entry));
    }
    return table;
}

} // namespace tomflow
