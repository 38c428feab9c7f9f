#ifndef QND_MODEL_HPP
#define QND_MODEL_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qnd/params.hpp"

namespace qnd {

enum class Region { classical, qsp_only, idt_only, qnd };

inline std::string to_string(Region r) {
    switch (r) {
        case Region::classical: return "classical";
        case Region::qsp_only: return "qsp_only";
        case Region::idt_only: return "idt_only";
        case Region::qnd: return "qnd";
    }
    return "classical";
}

// Conditional variance of the simple ideal-QND model:
//   1/((1 + d0*eta)(1 - eta)) + 2*eta/(1 - eta)
inline double model_qsp(double d0, double eta) {
    if (!(d0 >= 0)) throw config_error("model_qsp: d0 must be >= 0");
    if (!(eta >= 0 && eta < 1)) throw config_error("model_qsp: eta must be in [0,1)");
    return 1.0 / ((1.0 + d0 * eta) * (1.0 - eta)) + 2.0 * eta / (1.0 - eta);
}

struct IdtResult {
    double x_m_sq = 0;    // 1/(d0*eta)
    double x_s_sq = 0;    // delta_j_s/(1 - eta)
    double product = 0;   // x_m_sq * x_s_sq = delta_j_s/(d0*eta*(1-eta))
    double t_sum = 0;     // 1/(1+x_s_sq) + 1/(1+x_m_sq)
};

inline IdtResult model_idt(double d0, double eta, double delta_j_s) {
    if (!(eta < 1)) throw config_error("model_idt: eta must be < 1");
    if (!(delta_j_s >= 0)) throw config_error("model_idt: delta_j_s must be >= 0");
    if (!(d0 * eta > 0)) throw config_error("model_idt: infinite meter noise, d0*eta = 0");
    IdtResult r;
    r.x_m_sq = 1.0 / (d0 * eta);
    r.x_s_sq = delta_j_s / (1.0 - eta);
    r.product = r.x_m_sq * r.x_s_sq;
    r.t_sum = 1.0 / (1.0 + r.x_s_sq) + 1.0 / (1.0 + r.x_m_sq);
    return r;
}

// Strict inequalities; points exactly on a boundary fall on the
// non-passing side.
inline Region classify_region(double x_sm_sq, double t_sum) {
    const bool qsp = x_sm_sq < 1.0;
    const bool idt = t_sum > 1.0;
    if (qsp && idt) return Region::qnd;
    if (qsp) return Region::qsp_only;
    if (idt) return Region::idt_only;
    return Region::classical;
}

struct ModelPoint {
    double d0 = 0, eta = 0, delta_j_s = 0;
    double x_sm_sq = 0, x_m_sq = 0, x_s_sq = 0, t_sum = 0, idt_product = 0;
    Region region = Region::classical;
    bool singular = false;      // per-point evaluation failure
    std::string error;
};

inline ModelPoint model_point(double d0, double eta, double delta_j_s) {
    ModelPoint p;
    p.d0 = d0;
    p.eta = eta;
    p.delta_j_s = delta_j_s;
    try {
        p.x_sm_sq = model_qsp(d0, eta);
        const IdtResult idt = model_idt(d0, eta, delta_j_s);
        p.x_m_sq = idt.x_m_sq;
        p.x_s_sq = idt.x_s_sq;
        p.t_sum = idt.t_sum;
        p.idt_product = idt.product;
        p.region = classify_region(p.x_sm_sq, p.t_sum);
    } catch (const std::exception& e) {
        p.singular = true;
        p.error = e.what();
    }
    return p;
}

// Cartesian-product sweep, row-major with d0 outer and eta inner. Singular
// points are flagged per point, never failing the whole sweep.
inline std::vector<ModelPoint> sweep(std::span<const double> d0_values,
                                     std::span<const double> eta_values,
                                     double delta_j_s) {
    if (d0_values.empty()) throw config_error("sweep: empty d0 grid");
    if (eta_values.empty()) throw config_error("sweep: empty eta grid");
    std::vector<ModelPoint> out;
    out.reserve(d0_values.size() * eta_values.size());
    for (double d0 : d0_values)
        for (double eta : eta_values)
            out.push_back(model_point(d0, eta, delta_j_s));
    return out;
}

// Fig. 2-style default grids; arbitrary beyond the paper's quoted
// d0 = 43.5 point.
inline std::vector<double> default_d0_grid() {
    return {1, 3, 10, 30, 43.5, 100, 300};
}

inline std::vector<double> default_eta_grid() {
    std::vector<double> g(50);
    const double lo = std::log10(1e-3), hi = std::log10(0.5);
    for (int i = 0; i < 50; ++i)
        g[i] = std::pow(10.0, lo + (hi - lo) * i / 49.0);
    return g;
}

// Closed-form population moments of the generative model, and the limits the
// sample estimators converge to. Both simulator backends share these second
// moments by construction. Latent-spin recursion per interval:
//   Var(j_{k+1}) = (1-eta) Var(j_k) + j0*eta*beta + sigma_tech_sq
//   Cov(j_k, j_{k+1}) = (1-eta) Var(j_k),  Cov(j_1, j_3) = (1-eta)^2 j0
struct OracleMoments {
    double j0 = 0, sigma_ro_sq = 0;
    double var1 = 0, var2 = 0, var3 = 0;       // of phi_k (includes readout noise)
    double cov12 = 0, cov13 = 0, cov23 = 0;
    double chi = 0, r_a = 0;
    double cond_var = 0;                        // spins^2
    double x_sm_sq = 0, x_m_sq = 0, x_s_sq = 0, delta_j_s = 0;
};

inline OracleMoments oracle_moments_at(double j0, double eta, double beta,
                                       double sigma_ro_sq, double sigma_tech_sq,
                                       Conditioning convention) {
    if (!(j0 > 0)) throw config_error("oracle_moments: j0 must be > 0");
    const double u = 1.0 - eta;
    OracleMoments o;
    o.j0 = j0;
    o.sigma_ro_sq = sigma_ro_sq;
    const double vj1 = j0;
    const double vj2 = u * vj1 + j0 * eta * beta + sigma_tech_sq;
    const double vj3 = u * vj2 + j0 * eta * beta + sigma_tech_sq;
    o.var1 = vj1 + sigma_ro_sq;
    o.var2 = vj2 + sigma_ro_sq;
    o.var3 = vj3 + sigma_ro_sq;
    o.cov12 = u * vj1;
    o.cov13 = u * u * vj1;
    o.cov23 = u * vj2;
    o.chi = o.cov12 / o.var1;
    o.r_a = o.cov13 / o.cov12;
    if (convention == Conditioning::as_written)
        o.cond_var = o.var1 - 2.0 * o.chi * o.cov12 + o.chi * o.chi * o.var2 - sigma_ro_sq;
    else
        o.cond_var = o.var2 - 2.0 * o.chi * o.cov12 + o.chi * o.chi * o.var1 - sigma_ro_sq;
    o.x_sm_sq = o.cond_var / (o.r_a * j0);
    o.x_m_sq = (o.var1 - j0) / j0;
    o.delta_j_s = (vj2 - vj1) / j0;   // = eta*(beta-1) + sigma_tech_sq/j0
    o.x_s_sq = o.delta_j_s / o.r_a;
    return o;
}

inline OracleMoments oracle_moments(const ExperimentParams& params) {
    const DerivedParams d = derive(params);
    return oracle_moments_at(d.j0, params.eta, params.beta, sigma_ro_sq_or_throw(d),
                             params.sigma_tech_sq, params.conditioning_convention);
}

// Oracle for one atom-number ladder step: the latent spin scales with the
// step's atom count while the readout noise stays a property of the probe.
inline OracleMoments oracle_moments_at_step(const ExperimentParams& params,
                                            double n_atoms_step) {
    const DerivedParams d = derive(params);
    return oracle_moments_at(n_atoms_step / 4.0, params.eta, params.beta,
                             sigma_ro_sq_or_throw(d), params.sigma_tech_sq,
                             params.conditioning_convention);
}

}  // namespace qnd

#endif  // QND_MODEL_HPP
