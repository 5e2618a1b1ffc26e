#ifndef TOMFLOW_MICRO_HPP
#define TOMFLOW_MICRO_HPP

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "tomflow/riemann.hpp"

namespace tomflow {

struct RingBoundary {
    double length = 0.0; // wrap gap closes between the last and first vehicle
};

/// Last vehicle follows a prescribed velocity trajectory; its acceleration
/// defaults to zero (constant leader).
struct LeaderBoundary {
    std::function<double(double)> v_of_t;
    std::function<double(double)> a_of_t;
};

LeaderBoundary make_constant_leader(double v);

enum class MicroIntegrator { rk4, rk45 };

/// Sign convention of the third-order car-following velocity equation; the
/// `consistent` choice keeps omega_i = v_i + q(h_i) constant per vehicle.
enum class TomSignConvention { paper, consistent };

struct MicroParams {
    double car_length = 1e-2;                           // per-vehicle length
    double gamma_ftl = 2.0;                             // follow-the-leader exponent
    double epsilon = std::numeric_limits<double>::infinity(); // relaxation time; inf = off
    std::variant<RingBoundary, LeaderBoundary> boundary = RingBoundary{1.0};
    MicroIntegrator integrator = MicroIntegrator::rk4;
    double dt = 1e-3;
    double rtol = 1e-8;
    double atol = 1e-10;
    TomSignConvention tom_sign = TomSignConvention::consistent;

    double c_gamma() const;
    void validate(std::size_t n) const;
};

/// Vehicle arrays ordered by increasing position. h is carried along for all
/// model variants and simply stays untouched where a model has no hesitation.
struct MicroState {
    std::vector<double> x;
    std::vector<double> v;
    std::vector<double> h;
    double t = 0.0;

    std::size_t size() const { return x.size(); }
};

/// Local densities car_length / gap, one per vehicle that has a gap ahead
/// (all of them on a ring, all but the last with a prescribed leader).
std::vector<double> local_densities(const MicroState& s, const MicroParams& p);

/// One integrator step of the respective model. All three throw
/// CollisionError (with the offending index) when a gap closes.
MicroState step_ftl(const MicroState& s, const MicroParams& p,
                    const ClosureSet* cs = nullptr); // cs needed when epsilon < inf
MicroState step_tom(const MicroState& s, const MicroParams& p, const ClosureSet& cs);
MicroState step_multiclass(const MicroState& s, const MicroParams& p,
                           const BivariateClosure& q2);

using MicroObserver = std::function<void(const MicroState&)>;

MicroState simulate_ftl(MicroState s, const MicroParams& p, double t_end,
                        const ClosureSet* cs = nullptr,
                        const MicroObserver& observer = {});
MicroState simulate_tom(MicroState s, const MicroParams& p, double t_end,
                        const ClosureSet& cs, const MicroObserver& observer = {});
MicroState simulate_multiclass(MicroState s, const MicroParams& p, double t_end,
                               const BivariateClosure& q2,
                               const MicroObserver& observer = {});

/// omega_i = v_i + (car_length/gap_i)^gamma for the follow-the-leader model.
std::vector<double> ftl_omega(const MicroState& s, const MicroParams& p);
/// omega_i = v_i + q(h_i).
std::vector<double> tom_omega(const MicroState& s, const ClosureSet& cs);

/// Gap-weighted cell averages of (rho, v, h) on the given cell edges. Cells
/// with no overlap with any gap are marked uncovered, not zero.
struct ReconstructedField {
    std::vector<double> rho, v, h;
    std::vector<bool> covered;
};

ReconstructedField reconstruct_density(const MicroState& s, const MicroParams& p,
                                       std::span<const double> cell_edges);

/// Two-platoon initial placement for Riemann-type experiments: the jump sits
/// at x0, the rightmost vehicle is the prescribed leader.
struct MicroRiemannScenario {
    PrimState left, right;
    double x0 = 0.0;
    double total_car_length = 0.8; // n * car_length
    double t_eval = 0.3;
    double dt_safety = 0.1;        // dt * v_scale / min gap <= this
    double window_lo = -0.4;       // L1 comparison window
    double window_hi = 0.35;
    int compare_cells = 200;
};

MicroState make_two_platoon_state(const MicroRiemannScenario& sc, int n,
                                  MicroParams& p);

struct MicroMacroEntry {
    int n = 0;
    double l1_rho = 0.0;
    double l1_v = 0.0;
    double omega_drift = 0.0;
    bool failed = false;
    std::string error;
};

/// L1 errors of the reconstructed third-order microscopic solution against
/// the exact Riemann solution at t_eval, one entry per vehicle count.
std::vector<MicroMacroEntry> micro_macro_error(const MicroRiemannScenario& sc,
                                               std::span<const int> n_values,
                                               const ClosureSet& cs);

} // namespace tomflow

#endif
