#include "tomflow/micro.hpp"

#include <algorithm>
#include <cmath>

namespace tomflow {

LeaderBoundary make_constant_leader(double v) {
    LeaderBoundary b;
    b.v_of_t = [v](double) { return v; };
    b.a_of_t = [](double) { return 0.0; };
    return b;
}

double MicroParams::c_gamma() const {
    return gamma_ftl * std::pow(car_length, gamma_ftl);
}

void MicroParams::validate(std::size_t n) const {
    if (n < 2) throw InvalidParameterError("micro: need at least 2 vehicles");
    if (!(car_length > 0.0)) throw InvalidParameterError("micro: car_length must be > 0");
    if (!(gamma_ftl > 0.0)) throw InvalidParameterError("micro: gamma must be > 0");
    if (!(epsilon > 0.0)) throw InvalidParameterError("micro: epsilon must be > 0");
    if (!(dt > 0.0)) throw InvalidParameterError("micro: dt must be > 0");
    if (const auto* ring = std::get_if<RingBoundary>(&boundary)) {
        if (!(ring->length > 0.0))
            throw InvalidParameterError("micro: ring length must be > 0");
    } else {
        const auto& leader = std::get<LeaderBoundary>(boundary);
        if (!leader.v_of_t)
            throw InvalidParameterError("micro: prescribed leader needs a velocity trajectory");
    }
}

namespace {

bool is_ring(const MicroParams& p) {
    return std::holds_alternative<RingBoundary>(p.boundary);
}

std::size_t gap_count(std::size_t n, const MicroParams& p) {
    return is_ring(p) ? n : n - 1;
}

// Gap ahead of vehicle i and the velocity of the vehicle ahead.
void gap_ahead(const MicroState& s, const MicroParams& p, std::size_t i,
               double& gap, double& v_ahead) {
    const std::size_t n = s.size();
    if (i + 1 < n) {
        gap = s.x[i + 1] - s.x[i];
        v_ahead = s.v[i + 1];
    } else {
        const auto& ring = std::get<RingBoundary>(p.boundary);
        gap = s.x[0] + ring.length - s.x[n - 1];
        v_ahead = s.v[0];
    }
}

void check_collision_free(const MicroState& s, const MicroParams& p) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < gap_count(n, p); ++i) {
        double gap, va;
        gap_ahead(s, p, i, gap, va);
        if (!(gap > 0.0))
            throw CollisionError("micro: gap ahead of vehicle " + std::to_string(i) +
                                     " closed (gap = " + std::to_string(gap) + ")",
                                 static_cast<int>(i));
    }
}

using RhsFn = std::function<void(double t, const MicroState&, MicroState&)>;

void leader_rhs(const MicroState& s, const MicroParams& p, double t, MicroState& d) {
    const std::size_t last = s.size() - 1;
    const auto& leader = std::get<LeaderBoundary>(p.boundary);
    d.x[last] = s.v[last];
    d.v[last] = leader.a_of_t ? leader.a_of_t(t) : 0.0;
    d.h[last] = 0.0;
}

RhsFn make_ftl_rhs(const MicroParams& p, const ClosureSet* cs) {
    if (std::isfinite(p.epsilon) && cs == nullptr)
        throw CapabilityError("micro: relaxation term requires a closure set with V_eq");
    if (std::isfinite(p.epsilon)) cs->require_V("micro ftl");
    const double cg = p.c_gamma();
    return [&p, cs, cg](double t, const MicroState& s, MicroState& d) {
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < gap_count(n, p); ++i) {
            double gap, va;
            gap_ahead(s, p, i, gap, va);
            d.x[i] = s.v[i];
            d.v[i] = cg * (va - s.v[i]) / std::pow(gap, p.gamma_ftl + 1.0);
            if (std::isfinite(p.epsilon)) {
                const double rho = p.car_length / gap;
                d.v[i] += ((*cs->V_eq)(rho) - s.v[i]) / p.epsilon;
            }
            d.h[i] = 0.0;
        }
        if (!is_ring(p)) leader_rhs(s, p, t, d);
    };
}

RhsFn make_tom_rhs(const MicroParams& p, const ClosureSet& cs) {
    return [&p, &cs](double t, const MicroState& s, MicroState& d) {
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < gap_count(n, p); ++i) {
            double gap, va;
            gap_ahead(s, p, i, gap, va);
            const double rho = p.car_length / gap;
            const double rho_dot = -rho * (va - s.v[i]) / gap;
            const double h_dot = cs.h_fn.d1(rho) * rho_dot;
            d.x[i] = s.v[i];
            d.h[i] = h_dot;
            const double coupled = cs.q.d1(s.h[i]) * h_dot;
            d.v[i] = p.tom_sign == TomSignConvention::consistent ? -coupled : coupled;
        }
        if (!is_ring(p)) leader_rhs(s, p, t, d);
    };
}

RhsFn make_multiclass_rhs(const MicroParams& p, const BivariateClosure& q2) {
    if (!q2.valid() || !q2.d_rho)
        throw CapabilityError("micro multiclass: q2 with d_rho required");
    return [&p, &q2](double t, const MicroState& s, MicroState& d) {
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < gap_count(n, p); ++i) {
            double gap, va;
            gap_ahead(s, p, i, gap, va);
            const double rho = p.car_length / gap;
            const double rho_dot = -rho * (va - s.v[i]) / gap;
            d.x[i] = s.v[i];
            d.v[i] = -q2.d_rho(rho, s.h[i]) * rho_dot;
            d.h[i] = 0.0;
        }
        if (!is_ring(p)) leader_rhs(s, p, t, d);
    };
}

struct Workspace {
    MicroState k1, k2, k3, k4, k5, k6, k7, tmp, out;
    void resize(const MicroState& s) {
        for (MicroState* m : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &tmp, &out}) {
            m->x.assign(s.size(), 0.0);
            m->v.assign(s.size(), 0.0);
            m->h.assign(s.size(), 0.0);
        }
    }
};

void axpy_into(MicroState& out, const MicroState& s, double t,
               std::initializer_list<std::pair<double, const MicroState*>> terms) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        double ax = s.x[i], av = s.v[i], ah = s.h[i];
        for (const auto& [c, k] : terms) {
            ax += c * k->x[i];
            av += c * k->v[i];
            ah += c * k->h[i];
        }
        out.x[i] = ax;
        out.v[i] = av;
        out.h[i] = ah;
    }
    out.t = t;
}

void rk4_step(const MicroState& s, double dt, const RhsFn& rhs, Workspace& w) {
    rhs(s.t, s, w.k1);
    axpy_into(w.tmp, s, s.t + 0.5 * dt, {{0.5 * dt, &w.k1}});
    rhs(w.tmp.t, w.tmp, w.k2);
    axpy_into(w.tmp, s, s.t + 0.5 * dt, {{0.5 * dt, &w.k2}});
    rhs(w.tmp.t, w.tmp, w.k3);
    axpy_into(w.tmp, s, s.t + dt, {{dt, &w.k3}});
    rhs(w.tmp.t, w.tmp, w.k4);
    axpy_into(w.out, s, s.t + dt,
              {{dt / 6.0, &w.k1}, {dt / 3.0, &w.k2}, {dt / 3.0, &w.k3}, {dt / 6.0, &w.k4}});
}

// Dormand-Prince 5(4); returns the error estimate scaled by the tolerances.
double dopri_attempt(const MicroState& s, double dt, const RhsFn& rhs, Workspace& w,
                     double rtol, double atol) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    rhs(s.t, s, w.k1);
    axpy_into(w.tmp, s, s.t + c2 * dt, {{dt * 1.0 / 5, &w.k1}});
    rhs(w.tmp.t, w.tmp, w.k2);
    axpy_into(w.tmp, s, s.t + c3 * dt, {{dt * 3.0 / 40, &w.k1}, {dt * 9.0 / 40, &w.k2}});
    rhs(w.tmp.t, w.tmp, w.k3);
    axpy_into(w.tmp, s, s.t + c4 * dt,
              {{dt * 44.0 / 45, &w.k1}, {dt * -56.0 / 15, &w.k2}, {dt * 32.0 / 9, &w.k3}});
    rhs(w.tmp.t, w.tmp, w.k4);
    axpy_into(w.tmp, s, s.t + c5 * dt,
              {{dt * 19372.0 / 6561, &w.k1},
               {dt * -25360.0 / 2187, &w.k2},
               {dt * 64448.0 / 6561, &w.k3},
               {dt * -212.0 / 729, &w.k4}});
    rhs(w.tmp.t, w.tmp, w.k5);
    axpy_into(w.tmp, s, s.t + dt,
              {{dt * 9017.0 / 3168, &w.k1},
               {dt * -355.0 / 33, &w.k2},
               {dt * 46732.0 / 5247, &w.k3},
               {dt * 49.0 / 176, &w.k4},
               {dt * -5103.0 / 18656, &w.k5}});
    rhs(w.tmp.t, w.tmp, w.k6);
    axpy_into(w.out, s, s.t + dt,
              {{dt * 35.0 / 384, &w.k1},
               {dt * 500.0 / 1113, &w.k3},
               {dt * 125.0 / 192, &w.k4},
               {dt * -2187.0 / 6784, &w.k5},
               {dt * 11.0 / 84, &w.k6}});
    rhs(w.out.t, w.out, w.k7);

    // 4th-order comparison weights.
    static const double e1 = 35.0 / 384 - 5179.0 / 57600;
    static const double e3 = 500.0 / 1113 - 7571.0 / 16695;
    static const double e4 = 125.0 / 192 - 393.0 / 640;
    static const double e5 = -2187.0 / 6784 + 92097.0 / 339200;
    static const double e6 = 11.0 / 84 - 187.0 / 2100;
    static const double e7 = -1.0 / 40;

    double err = 0.0;
    const std::size_t n = s.size();
    const auto comp = [&](const std::vector<double>& y0, const std::vector<double>& y1,
                          const std::vector<double>& K1, const std::vector<double>& K3,
                          const std::vector<double>& K4, const std::vector<double>& K5,
                          const std::vector<double>& K6, const std::vector<double>& K7) {
        for (std::size_t i = 0; i < n; ++i) {
            const double e = dt * (e1 * K1[i] + e3 * K3[i] + e4 * K4[i] + e5 * K5[i] +
                                   e6 * K6[i] + e7 * K7[i]);
            const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            err = std::max(err, std::abs(e) / sc);
        }
    };
    comp(s.x, w.out.x, w.k1.x, w.k3.x, w.k4.x, w.k5.x, w.k6.x, w.k7.x);
    comp(s.v, w.out.v, w.k1.v, w.k3.v, w.k4.v, w.k5.v, w.k6.v, w.k7.v);
    comp(s.h, w.out.h, w.k1.h, w.k3.h, w.k4.h, w.k5.h, w.k6.h, w.k7.h);
    return err;
}

void snap_leader(MicroState& s, const MicroParams& p) {
    if (const auto* leader = std::get_if<LeaderBoundary>(&p.boundary))
        s.v[s.size() - 1] = leader->v_of_t(s.t);
}

MicroState one_step(const MicroState& s, const MicroParams& p, const RhsFn& rhs) {
    p.validate(s.size());
    check_collision_free(s, p);
    Workspace w;
    w.resize(s);
    if (p.integrator == MicroIntegrator::rk4) {
        rk4_step(s, p.dt, rhs, w);
    } else {
        double dt = p.dt;
        for (int attempt = 0;; ++attempt) {
            const double err = dopri_attempt(s, dt, rhs, w, p.rtol, p.atol);
            if (err <= 1.0) break;
            if (attempt > 60 || !(dt > 1e-15))
                throw IntegrationError("micro rk45: step size underflow");
            dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
        }
    }
    MicroState next = std::move(w.out);
    snap_leader(next, p);
    check_collision_free(next, p);
    return next;
}

MicroState drive(MicroState s, const MicroParams& p, double t_end, const RhsFn& rhs,
                 const MicroObserver& observer) {
    p.validate(s.size());
    check_collision_free(s, p);
    Workspace w;
    w.resize(s);
    double dt_next = p.dt;
    while (s.t < t_end - 1e-14) {
        double dt = std::min(dt_next, t_end - s.t);
        if (p.integrator == MicroIntegrator::rk4) {
            rk4_step(s, dt, rhs, w);
        } else {
            for (int attempt = 0;; ++attempt) {
                const double err = dopri_attempt(s, dt, rhs, w, p.rtol, p.atol);
                if (err <= 1.0) {
                    dt_next = dt * std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2),
                                              0.2, 5.0);
                    break;
                }
                if (attempt > 60 || !(dt > 1e-15))
                    throw IntegrationError("micro rk45: step size underflow");
                dt *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            }
        }
        std::swap(s, w.out);
        snap_leader(s, p);
        check_collision_free(s, p);
        if (observer) observer(s);
    }
    return s;
}

} // namespace

std::vector<double> local_densities(const MicroState& s, const MicroParams& p) {
    p.validate(s.size());
    std::vector<double> rho(gap_count(s.size(), p));
    for (std::size_t i = 0; i < rho.size(); ++i) {
        double gap, va;
        gap_ahead(s, p, i, gap, va);
        rho[i] = p.car_length / gap;
    }
    return rho;
}

MicroState step_ftl(const MicroState& s, const MicroParams& p, const ClosureSet* cs) {
    return one_step(s, p, make_ftl_rhs(p, cs));
}

MicroState step_tom(const MicroState& s, const MicroParams& p, const ClosureSet& cs) {
    return one_step(s, p, make_tom_rhs(p, cs));
}

MicroState step_multiclass(const MicroState& s, const MicroParams& p,
                           const BivariateClosure& q2) {
    return one_step(s, p, make_multiclass_rhs(p, q2));
}

MicroState simulate_ftl(MicroState s, const MicroParams& p, double t_end,
                        const ClosureSet* cs, const MicroObserver& observer) {
    return drive(std::move(s), p, t_end, make_ftl_rhs(p, cs), observer);
}

MicroState simulate_tom(MicroState s, const MicroParams& p, double t_end,
                        const ClosureSet& cs, const MicroObserver& observer) {
    return drive(std::move(s), p, t_end, make_tom_rhs(p, cs), observer);
}

MicroState simulate_multiclass(MicroState s, const MicroParams& p, double t_end,
                               const BivariateClosure& q2, const MicroObserver& observer) {
    return drive(std::move(s), p, t_end, make_multiclass_rhs(p, q2), observer);
}

std::vector<double> ftl_omega(const MicroState& s, const MicroParams& p) {
    std::vector<double> om = local_densities(s, p);
    for (std::size_t i = 0; i < om.size(); ++i)
        om[i] = s.v[i] + std::pow(om[i], p.gamma_ftl);
    return om;
}

std::vector<double> tom_omega(const MicroState& s, const ClosureSet& cs) {
    std::vector<double> om(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) om[i] = s.v[i] + cs.q(s.h[i]);
    return om;
}

ReconstructedField reconstruct_density(const MicroState& s, const MicroParams& p,
                                       std::span<const double> cell_edges) {
    if (cell_edges.size() < 2)
        throw InvalidParameterError("reconstruct_density: need at least one cell");
    if (!std::is_sorted(cell_edges.begin(), cell_edges.end()))
        throw InvalidParameterError("reconstruct_density: cell edges must be sorted");
    const std::size_t n = s.size();
    if (n < 2) throw InvalidParameterError("reconstruct_density: need >= 2 vehicles");

    const std::size_t cells = cell_edges.size() - 1;
    ReconstructedField f;
    f.rho.assign(cells, 0.0);
    f.v.assign(cells, 0.0);
    f.h.assign(cells, 0.0);
    f.covered.assign(cells, false);
    std::vector<double> cover(cells, 0.0);

    // Physical gaps only; the ring wrap gap is not unfolded onto the grid.
    // Gaps ascend, so the cell cursor only moves forward.
    std::size_t k = 0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double lo = s.x[j], hi = s.x[j + 1];
        const double rho_j = p.car_length / (hi - lo);
        while (k < cells && cell_edges[k + 1] <= lo) ++k;
        for (std::size_t m = k; m < cells && cell_edges[m] < hi; ++m) {
            const double a = std::max(lo, cell_edges[m]);
            const double b = std::min(hi, cell_edges[m + 1]);
            if (b <= a) continue;
            const double len = b - a;
            f.rho[m] += len * rho_j;
            f.v[m] += len * s.v[j];
            f.h[m] += len * s.h[j];
            cover[m] += len;
        }
    }
    for (std::size_t k = 0; k < cells; ++k) {
        if (cover[k] > 0.0) {
            f.rho[k] /= cover[k];
            f.v[k] /= cover[k];
            f.h[k] /= cover[k];
            f.covered[k] = true;
        }
    }
    return f;
}

MicroState make_two_platoon_state(const MicroRiemannScenario& sc, int n, MicroParams& p) {
    if (n < 4 || n % 2 != 0)
        throw InvalidParameterError("two-platoon state: n must be even and >= 4");
    if (!(sc.left.rho > 0.0) || !(sc.right.rho > 0.0))
        throw VacuumError("two-platoon state: platoon densities must be positive");

    p.car_length = sc.total_car_length / n;
    p.boundary = make_constant_leader(sc.right.v);

    const double gap_l = p.car_length / sc.left.rho;
    const double gap_r = p.car_length / sc.right.rho;
    const int half = n / 2;

    MicroState s;
    s.x.resize(n);
    s.v.resize(n);
    s.h.resize(n);
    for (int i = 0; i < n; ++i) {
        if (i < half) {
            s.x[i] = sc.x0 - (half - i) * gap_l;
            s.v[i] = sc.left.v;
            s.h[i] = sc.left.h;
        } else {
            s.x[i] = sc.x0 + (i - half) * gap_r;
            s.v[i] = sc.right.v;
            s.h[i] = sc.right.h;
        }
    }

    const double v_scale = std::max({std::abs(sc.left.v), std::abs(sc.right.v), 1.0});
    p.dt = sc.dt_safety * std::min(gap_l, gap_r) / v_scale;
    return s;
}

std::vector<MicroMacroEntry> micro_macro_error(const MicroRiemannScenario& sc,
                                               std::span<const int> n_values,
                                               const ClosureSet& cs) {
    const RiemannSolution exact = solve_riemann(sc.left, sc.right, cs);

    std::vector<double> edges(sc.compare_cells + 1);
    const double dx = (sc.window_hi - sc.window_lo) / sc.compare_cells;
    for (int k = 0; k <= sc.compare_cells; ++k) edges[k] = sc.window_lo + k * dx;

    std::vector<MicroMacroEntry> table;
    for (int n : n_values) {
        MicroMacroEntry e;
        e.n = n;
        try {
            MicroParams p;
            MicroState s0 = make_two_platoon_state(sc, n, p);
            const std::vector<double> om0 = tom_omega(s0, cs);
            const MicroState s = simulate_tom(s0, p, sc.t_eval, cs);
            const std::vector<double> om1 = tom_omega(s, cs);
            for (std::size_t i = 0; i < om0.size(); ++i)
                e.omega_drift = std::max(e.omega_drift, std::abs(om1[i] - om0[i]));

            const ReconstructedField f = reconstruct_density(s, p, edges);
            for (int k = 0; k < sc.compare_cells; ++k) {
                if (!f.covered[k]) continue;
                const double r_ex = cell_average(exact, sc.t_eval, edges[k], edges[k + 1], 0);
                const double v_ex = cell_average(exact, sc.t_eval, edges[k], edges[k + 1], 1);
                e.l1_rho += std::abs(f.rho[k] - r_ex) * dx;
                e.l1_v += std::abs(f.v[k] - v_ex) * dx;
            }
        } catch (const Error& err) {
            e.failed = true;
            e.error = err.what();
        }
        table.push_back(std::move(e));
    }
    return table;
}

} // namespace tomflow
