#include "tomflow/closures.hpp"

#include <cmath>
#include <utility>

namespace tomflow {

ScalarClosure::ScalarClosure(Parts parts) : parts_(std::move(parts)) {
    if (!parts_.eval || !parts_.d1 || !parts_.d2)
        throw InvalidParameterError("ScalarClosure requires eval, d1 and d2");
    if (!(parts_.domain.lo < parts_.domain.hi))
        throw InvalidParameterError("ScalarClosure domain is empty");
    if (!(parts_.domain_guard >= 0.0))
        throw InvalidParameterError("ScalarClosure domain guard must be >= 0");
}

void ScalarClosure::check_domain(double x, const char* who) const {
    if (!valid()) throw CapabilityError(std::string(who) + ": closure not set");
    if (!std::isfinite(x) || !parts_.domain.contains(x, parts_.domain_guard))
        throw DomainError(std::string(who) + ": argument " + std::to_string(x) +
                          " outside open domain (" + std::to_string(parts_.domain.lo) +
                          ", " + std::to_string(parts_.domain.hi) + ")");
}

double ScalarClosure::operator()(double x) const {
    check_domain(x, "eval");
    return parts_.eval(x);
}

double ScalarClosure::d1(double x) const {
    check_domain(x, "d1");
    return parts_.d1(x);
}

double ScalarClosure::d2(double x) const {
    check_domain(x, "d2");
    return parts_.d2(x);
}

double ScalarClosure::d3(double x) const {
    if (!parts_.d3) throw CapabilityError("d3: third derivative not provided");
    check_domain(x, "d3");
    return parts_.d3(x);
}

double ScalarClosure::inverse(double y) const {
    if (!valid()) throw CapabilityError("inverse: closure not set");
    if (parts_.inverse) return parts_.inverse(y);
    return bisect_inverse(y);
}

namespace {

// Step from an interior point toward an interval end, geometrically.
double toward(double x, double bound) {
    if (std::isinf(bound)) return bound > 0 ? x * 2.0 : x * 2.0 - 1.0;
    return 0.5 * (x + bound);
}

} // namespace

double ScalarClosure::bisect_inverse(double y) const {
    const Interval& dom = parts_.domain;
    const double guard = std::max(parts_.domain_guard, 1e-300);

    double seed = 1.0;
    if (!dom.contains(seed, guard)) {
        if (std::isfinite(dom.lo) && std::isfinite(dom.hi)) seed = 0.5 * (dom.lo + dom.hi);
        else if (std::isfinite(dom.lo)) seed = dom.lo + 1.0;
        else seed = dom.hi - 1.0;
    }

    // Orientation from the derivative; bisection handles either direction.
    const bool increasing = parts_.d1(seed) > 0.0;

    auto f = [&](double x) { return parts_.eval(x) - y; };

    double lo = seed, hi = seed;
    double flo = f(lo), fhi = f(hi);
    const double want_lo = increasing ? 0.0 : 1.0; // sign convention below
    (void)want_lo;

    for (int k = 0; k < 1100 && (increasing ? flo > 0.0 : flo < 0.0); ++k) {
        double next = increasing ? toward(lo, dom.lo) : toward(lo, dom.hi);
        if (!(increasing ? next > dom.lo + guard : next < dom.hi - guard)) break;
        lo = next;
        flo = f(lo);
    }
    for (int k = 0; k < 1100 && (increasing ? fhi < 0.0 : fhi > 0.0); ++k) {
        double next = increasing ? toward(hi, dom.hi) : toward(hi, dom.lo);
        if (!(increasing ? next < dom.hi - guard : next > dom.lo + guard)) break;
        hi = next;
        fhi = f(hi);
    }
    if ((increasing && (flo > 0.0 || fhi < 0.0)) ||
        (!increasing && (flo < 0.0 || fhi > 0.0)))
        throw InverseRangeError("inverse: value " + std::to_string(y) +
                                " could not be bracketed inside the domain");

    double a = std::min(lo, hi), b = std::max(lo, hi);
    double fa = a == lo ? flo : fhi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        double fm = f(mid);
        if ((fa <= 0.0) == (fm <= 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if (b - a <= 1e-13 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (a + b);
}

ScalarClosure make_power_closure(double exponent, double coefficient) {
    if (!(exponent > 0.0))
        throw InvalidParameterError("power closure: exponent must be > 0");
    if (!(coefficient > 0.0))
        throw InvalidParameterError("power closure: coefficient must be > 0");
    const double a = exponent, c = coefficient;
    ScalarClosure::Parts p;
    p.eval = [a, c](double x) { return c * std::pow(x, a); };
    p.d1 = [a, c](double x) { return c * a * std::pow(x, a - 1.0); };
    p.d2 = [a, c](double x) { return c * a * (a - 1.0) * std::pow(x, a - 2.0); };
    p.d3 = [a, c](double x) { return c * a * (a - 1.0) * (a - 2.0) * std::pow(x, a - 3.0); };
    p.inverse = [a, c](double y) {
        if (!(y > 0.0))
            throw InverseRangeError("power closure inverse: value must be > 0");
        return std::pow(y / c, 1.0 / a);
    };
    p.domain = {0.0, std::numeric_limits<double>::infinity()};
    return ScalarClosure(std::move(p));
}

ScalarClosure make_affine_closure(double intercept, double slope, Interval domain) {
    if (slope == 0.0)
        throw InvalidParameterError("affine closure: slope must be nonzero");
    ScalarClosure::Parts p;
    p.eval = [intercept, slope](double x) { return intercept + slope * x; };
    p.d1 = [slope](double) { return slope; };
    p.d2 = [](double) { return 0.0; };
    p.d3 = [](double) { return 0.0; };
    p.inverse = [intercept, slope](double y) { return (y - intercept) / slope; };
    p.domain = domain;
    p.domain_guard = 0.0;
    return ScalarClosure(std::move(p));
}

const ScalarClosure& ClosureSet::require_H(const char* who) const {
    if (!H_eq || !H_eq->valid())
        throw CapabilityError(std::string(who) + ": equilibrium hesitation H is not set");
    return *H_eq;
}

const ScalarClosure& ClosureSet::require_V(const char* who) const {
    if (!V_eq || !V_eq->valid())
        throw CapabilityError(std::string(who) + ": equilibrium velocity V_eq is not set");
    return *V_eq;
}

const BivariateClosure& ClosureSet::require_Vc(const char* who) const {
    if (!Vc || !Vc->valid())
        throw CapabilityError(std::string(who) + ": velocity family V_C is not set");
    return *Vc;
}

double ClosureSet::P(double rho) const { return q(require_H("P")(rho)); }

double ClosureSet::P_d1(double rho) const {
    const ScalarClosure& H = require_H("P_d1");
    return q.d1(H(rho)) * H.d1(rho);
}

double ClosureSet::W_eq(double rho) const {
    return rho * (require_H("W_eq")(rho) - h_fn(rho));
}

double ClosureSet::W_eq_d1(double rho) const {
    const ScalarClosure& H = require_H("W_eq_d1");
    return (H(rho) - h_fn(rho)) + rho * (H.d1(rho) - h_fn.d1(rho));
}

bool ValidationReport::all_evaluated() const {
    for (const auto& e : entries)
        if (!e.error.empty()) return false;
    return true;
}

bool ValidationReport::all_monotone() const {
    for (const auto& e : entries)
        if (e.error.empty() && !e.monotone) return false;
    return true;
}

namespace {

ClosureSampleCheck check_one(const ScalarClosure& f, double x, const char* target) {
    ClosureSampleCheck c;
    c.x = x;
    c.target = target;
    if (!f.domain().contains(x, f.domain_guard())) {
        c.error = "sample outside domain";
        return c;
    }
    try {
        const double v = f(x);
        const double g1 = f.d1(x);
        const double g2 = f.d2(x);
        c.monotone = g1 > 0.0;
        c.convex = g2 >= 0.0;
        if (!c.convex)
            c.note = std::string("convexity ") + target +
                     "'' >= 0 violated; re-verify genuine nonlinearity pointwise";

        // Central differences; delta kept well inside the domain.
        double delta = 1e-5 * std::max(1.0, std::abs(x));
        delta = std::min(delta, 0.25 * (x - f.domain().lo));
        if (std::isfinite(f.domain().hi)) delta = std::min(delta, 0.25 * (f.domain().hi - x));
        const double fp = f(x + delta), fm = f(x - delta);
        c.d1_fd_resid = std::abs(g1 - (fp - fm) / (2.0 * delta));
        c.d2_fd_resid = std::abs(g2 - (fp - 2.0 * v + fm) / (delta * delta));

        const double back = f.inverse(v);
        c.inverse_roundtrip_rel = std::abs(back - x) / std::max(std::abs(x), 1e-300);
    } catch (const Error& err) {
        c.error = err.what();
    }
    return c;
}

} // namespace

ValidationReport validate_closure_set(const ClosureSet& cs,
                                      std::span<const double> rho_samples,
                                      std::span<const double> h_samples) {
    ValidationReport report;
    report.entries.reserve(rho_samples.size() + h_samples.size());
    for (double rho : rho_samples) report.entries.push_back(check_one(cs.h_fn, rho, "h"));
    for (double h : h_samples) report.entries.push_back(check_one(cs.q, h, "q"));
    return report;
}

ValidationReport validate_closure_set(const ClosureSet& cs, std::span<const double> samples) {
    return validate_closure_set(cs, samples, samples);
}

} // namespace tomflow
