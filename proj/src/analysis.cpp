#include "tomflow/analysis.hpp"

#include <cmath>

namespace tomflow {

double mu_tom(double rho, const ClosureSet& cs) {
    const ScalarClosure& H = cs.require_H("mu_tom");
    return rho * cs.q.d1(H(rho)) * (cs.h_fn.d1(rho) - H.d1(rho));
}

SubcharTriple subchar_tom(double rho, double v, const ClosureSet& cs) {
    const ScalarClosure& H = cs.require_H("subchar_tom");
    const double qp = cs.q.d1(H(rho));
    SubcharTriple s;
    s.lam1_frozen = v - qp * cs.h_fn.d1(rho) * rho;
    s.lam1_arz = v - qp * H.d1(rho) * rho;
    s.lam_v = v;
    s.verdict = s.lam1_frozen < s.lam1_arz && s.lam1_arz <= s.lam_v;
    return s;
}

SubcharArz subchar_arz(double rho, const ClosureSet& cs) {
    const ScalarClosure& V = cs.require_V("subchar_arz");
    SubcharArz s;
    const double Veq = V(rho);
    const double Vp = V.d1(rho);
    s.assumption_violated = !(Vp < 0.0);
    s.lam1_arz = Veq - cs.P_d1(rho) * rho;
    s.feq_prime = Veq + rho * Vp;
    s.lam_v = Veq;
    s.verdict = s.lam1_arz <= s.feq_prime && s.feq_prime <= s.lam_v;
    return s;
}

MuArz mu_arz(double rho, const ClosureSet& cs) {
    const ScalarClosure& V = cs.require_V("mu_arz");
    const double Vp = V.d1(rho);
    const double sum = Vp + cs.P_d1(rho);
    MuArz m;
    m.value = -rho * rho * Vp * sum;
    m.nonnegative = sum >= 0.0;
    return m;
}

double gamma_hc(double rho, const ClosureSet& cs) {
    const ScalarClosure& H = cs.require_H("gamma_hc");
    return cs.q.d2(H(rho)) * cs.h_fn.d1(rho) * rho * (H.d1(rho) - cs.h_fn.d1(rho));
}

double lambda1_hc(double rho, double v, double rho_dot, double epsilon,
                  const ClosureSet& cs) {
    const ScalarClosure& H = cs.require_H("lambda1_hc");
    const double frozen = v - cs.q.d1(H(rho)) * cs.h_fn.d1(rho) * rho;
    return frozen - epsilon * gamma_hc(rho, cs) * rho_dot;
}

CorliDiffusion mu_corli(double rho, double h, const ClosureSet& cs) {
    const BivariateClosure& Vc = cs.require_Vc("mu_corli");
    const double V = Vc.eval(rho, h);
    const double Vr = Vc.d_rho(rho, h);
    const double Vh = Vc.d_h(rho, h);
    const double hp = cs.h_fn.d1(rho);
    const double w = rho * (h - cs.h_fn(rho));

    CorliDiffusion d;
    d.lam1_c = V + rho * (Vr + hp * Vh);
    d.prefactor = d.lam1_c - (V - cs.q.d1(h) * hp * rho);
    d.matrix = {{{d.prefactor * rho * Vr, d.prefactor * rho * Vh},
                 {d.prefactor * w * Vr, d.prefactor * w * Vh}}};
    return d;
}

CorliConsistency corli_consistency(double rho, double h, const ClosureSet& cs) {
    const BivariateClosure& Vc = cs.require_Vc("corli_consistency");
    const double V = Vc.eval(rho, h);
    const double lam1_c =
        V + rho * (Vc.d_rho(rho, h) + cs.h_fn.d1(rho) * Vc.d_h(rho, h));
    const double beta = cs.q.d1(h) * cs.h_fn.d1(rho) * rho;
    CorliConsistency c;
    c.r = beta - (V - lam1_c);
    c.r_tilde = beta - (lam1_c - V);
    return c;
}

StabilityReport stability_report(std::span<const double> rho_values, const ClosureSet& cs) {
    StabilityReport rep;
    const bool has_V = cs.V_eq && cs.V_eq->valid();
    for (double rho : rho_values) {
        StabilitySample s;
        s.rho = rho;
        s.mu_tom = mu_tom(rho, cs);
        const double v = has_V ? (*cs.V_eq)(rho) : 0.0;
        const SubcharTriple tri = subchar_tom(rho, v, cs);
        s.lam1_frozen = tri.lam1_frozen;
        s.lam1_arz = tri.lam1_arz;
        s.lam_v = tri.lam_v;
        s.sc_tom = tri.verdict;
        if (has_V) {
            s.mu_arz = mu_arz(rho, cs).value;
            const SubcharArz sa = subchar_arz(rho, cs);
            s.feq_prime = sa.feq_prime;
            s.sc_arz = sa.verdict;
        }
        s.gamma_hc = gamma_hc(rho, cs);
        rep.all_sc_tom = rep.all_sc_tom && s.sc_tom;
        rep.all_sc_arz = rep.all_sc_arz && (!has_V || s.sc_arz);
        rep.samples.push_back(s);
    }
    return rep;
}

} // namespace tomflow
