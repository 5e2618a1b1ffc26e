#ifndef TOMFLOW_CLOSURES_HPP
#define TOMFLOW_CLOSURES_HPP

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tomflow/errors.hpp"

namespace tomflow {

/// Open admissible interval of a scalar model function.
struct Interval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double x, double guard) const {
        return x > lo + guard && x < hi - guard;
    }
};

/// A scalar model function together with its derivatives and (optional)
/// inverse. Instances are immutable after construction and cheap to copy.
///
/// The hesitation map q and the density-to-hesitation map are strictly
/// increasing on their domains; evaluation outside the open domain (or at the
/// boundary, within the guard) raises DomainError. When no analytic inverse
/// is supplied, a bracketed bisection fallback (tol 1e-13, max 200
/// iterations) is attached; strict monotonicity makes it well defined.
class ScalarClosure {
public:
    struct Parts {
        std::function<double(double)> eval;
        std::function<double(double)> d1;
        std::function<double(double)> d2;
        std::function<double(double)> d3;      // optional
        std::function<double(double)> inverse; // optional
        Interval domain{};
        double domain_guard = 1e-12;
    };

    ScalarClosure() = default;
    explicit ScalarClosure(Parts parts);

    double operator()(double x) const;
    double eval(double x) const { return (*this)(x); }
    double d1(double x) const;
    double d2(double x) const;
    double d3(double x) const;

    /// Solves eval(x) = y. Throws InverseRangeError when y cannot be
    /// bracketed inside the domain.
    double inverse(double y) const;

    bool has_d3() const { return static_cast<bool>(parts_.d3); }
    bool has_analytic_inverse() const { return static_cast<bool>(parts_.inverse); }
    bool valid() const { return static_cast<bool>(parts_.eval); }
    const Interval& domain() const { return parts_.domain; }
    double domain_guard() const { return parts_.domain_guard; }

private:
    void check_domain(double x, const char* who) const;
    double bisect_inverse(double y) const;

    Parts parts_;
};

/// x -> coefficient * x^exponent on (0, inf), with analytic derivatives and
/// exact inverse.
ScalarClosure make_power_closure(double exponent, double coefficient = 1.0);

/// x -> intercept + slope * x (slope != 0). Used for equilibrium velocity
/// laws such as 1 - rho; slope may be negative.
ScalarClosure make_affine_closure(double intercept, double slope,
                                  Interval domain = {-std::numeric_limits<double>::infinity(),
                                                     std::numeric_limits<double>::infinity()});

/// Bivariate velocity family V(rho, h) with both partial derivatives.
struct BivariateClosure {
    std::function<double(double, double)> eval;
    std::function<double(double, double)> d_rho;
    std::function<double(double, double)> d_h;
    bool valid() const { return static_cast<bool>(eval); }
};

/// The full set of model functions a solver needs. q and h_fn are required;
/// the equilibrium members are optional and gate the relaxation diagnostics.
struct ClosureSet {
    ScalarClosure q;                    // hesitation-to-speed offset, units of velocity
    ScalarClosure h_fn;                 // density-to-hesitation map
    std::optional<ScalarClosure> H_eq;  // equilibrium hesitation
    std::optional<ScalarClosure> V_eq;  // equilibrium velocity, V_eq' < 0
    std::optional<BivariateClosure> Vc; // hysteresis velocity family

    /// Derived ARZ hesitation P(rho) = q(H(rho)) and its exact chain-rule
    /// derivative. Requires H_eq.
    double P(double rho) const;
    double P_d1(double rho) const;

    /// Derived equilibrium deviation density W(rho) = rho*(H(rho) - h(rho)).
    double W_eq(double rho) const;
    double W_eq_d1(double rho) const;

    const ScalarClosure& require_H(const char* who) const;
    const ScalarClosure& require_V(const char* who) const;
    const BivariateClosure& require_Vc(const char* who) const;
};

/// Per-sample outcome of validate_closure_set. A sample outside a domain
/// yields an entry with `error` set instead of a global failure.
struct ClosureSampleCheck {
    double x = 0.0;
    std::string target;           // "q" or "h"
    std::string error;            // empty when the sample could be evaluated
    bool monotone = false;        // d1 > 0
    bool convex = false;          // d2 >= 0
    std::string note;             // set when convexity fails
    double inverse_roundtrip_rel = std::numeric_limits<double>::quiet_NaN();
    double d1_fd_resid = std::numeric_limits<double>::quiet_NaN();
    double d2_fd_resid = std::numeric_limits<double>::quiet_NaN();
};

struct ValidationReport {
    std::vector<ClosureSampleCheck> entries;
    bool all_evaluated() const;
    bool all_monotone() const;
};

/// Checks q against the given h samples and h_fn against the given rho
/// samples: monotonicity, convexity flags, inverse round trips and central
/// finite-difference residuals of d1/d2.
ValidationReport validate_closure_set(const ClosureSet& cs,
                                      std::span<const double> rho_samples,
                                      std::span<const double> h_samples);

/// Convenience overload applying the same sample list to both maps.
ValidationReport validate_closure_set(const ClosureSet& cs,
                                      std::span<const double> samples);

} // namespace tomflow

#endif
