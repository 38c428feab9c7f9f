#ifndef QND_ESTIMATORS_HPP
#define QND_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qnd/params.hpp"
#include "qnd/simulator.hpp"

namespace qnd {

// Second-moment summary of the three pulses. Unbiased (n-1 denominator).
struct Moments {
    std::size_t n = 0;
    double mean1 = 0, mean2 = 0, mean3 = 0;
    double var1 = 0, var2 = 0, var3 = 0;
    double cov12 = 0, cov13 = 0, cov23 = 0;
};

// Readout-noise-subtracted statistics, Var'() and Cov'().
struct ExcessMoments {
    double var1 = 0, var2 = 0, var3 = 0;
    double cov12 = 0, cov13 = 0, cov23 = 0;
};

namespace detail {

// Shifted-data accumulation: center on a reference record to keep the sums
// well conditioned for arbitrary means, then correct for the residual mean.
template <class GetRecord>
Moments moments_impl(GetRecord&& get, std::size_t n, double c1, double c2, double c3) {
    if (n < 2) throw data_error("sample_moments: need at least 2 trials");
    double s1 = 0, s2 = 0, s3 = 0;
    double s11 = 0, s22 = 0, s33 = 0, s12 = 0, s13 = 0, s23 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const TrialRecord& r = get(i);
        const double x1 = r.phi1 - c1, x2 = r.phi2 - c2, x3 = r.phi3 - c3;
        s1 += x1; s2 += x2; s3 += x3;
        s11 += x1 * x1; s22 += x2 * x2; s33 += x3 * x3;
        s12 += x1 * x2; s13 += x1 * x3; s23 += x2 * x3;
    }
    const double dn = static_cast<double>(n);
    Moments m;
    m.n = n;
    m.mean1 = c1 + s1 / dn;
    m.mean2 = c2 + s2 / dn;
    m.mean3 = c3 + s3 / dn;
    m.var1 = (s11 - s1 * s1 / dn) / (dn - 1);
    m.var2 = (s22 - s2 * s2 / dn) / (dn - 1);
    m.var3 = (s33 - s3 * s3 / dn) / (dn - 1);
    m.cov12 = (s12 - s1 * s2 / dn) / (dn - 1);
    m.cov13 = (s13 - s1 * s3 / dn) / (dn - 1);
    m.cov23 = (s23 - s2 * s3 / dn) / (dn - 1);
    return m;
}

}  // namespace detail

inline Moments sample_moments(std::span<const TrialRecord> trials) {
    if (trials.size() < 2) throw data_error("sample_moments: need at least 2 trials");
    const TrialRecord& f = trials[0];
    return detail::moments_impl([&](std::size_t i) -> const TrialRecord& { return trials[i]; },
                                trials.size(), f.phi1, f.phi2, f.phi3);
}

// Bootstrap-resampled moments over an index list; centers come from the
// full-sample point estimate for numerical stability.
inline Moments sample_moments_indexed(std::span<const TrialRecord> trials,
                                      std::span<const std::uint32_t> idx,
                                      const Moments& center) {
    return detail::moments_impl(
        [&](std::size_t i) -> const TrialRecord& { return trials[idx[i]]; },
        idx.size(), center.mean1, center.mean2, center.mean3);
}

inline ExcessMoments excess_moments(const Moments& atoms, const Moments& ro) {
    ExcessMoments e;
    e.var1 = atoms.var1 - ro.var1;
    e.var2 = atoms.var2 - ro.var2;
    e.var3 = atoms.var3 - ro.var3;
    e.cov12 = atoms.cov12 - ro.cov12;
    e.cov13 = atoms.cov13 - ro.cov13;
    e.cov23 = atoms.cov23 - ro.cov23;
    return e;
}

// Var(J_z|phi1): conditional variance of the spin given the first pulse,
// with the readout contribution subtracted. chi is always
// cov(phi1,phi2)/Var(phi1), in both conventions.
inline double conditional_spin_variance(const Moments& atoms, const Moments& ro,
                                        Conditioning convention) {
    if (!(atoms.var1 > 0))
        throw data_error("conditional_spin_variance: Var(phi1) must be > 0");
    const double chi = atoms.cov12 / atoms.var1;
    if (convention == Conditioning::as_written)
        return atoms.var1 - 2.0 * chi * atoms.cov12 + chi * chi * atoms.var2 - ro.var1;
    return atoms.var2 - 2.0 * chi * atoms.cov12 + chi * chi * atoms.var1 - ro.var2;
}

// r_A = Cov'(phi1,phi3)/Cov'(phi1,phi2). Values outside [0,1] are legitimate
// finite-sample outcomes and are returned as-is with a quality warning.
inline double retention_fraction(const ExcessMoments& ex, double j0_reference,
                                 bool* quality_warning = nullptr,
                                 double denom_floor_rel = 1e-9) {
    const double floor = denom_floor_rel * j0_reference;
    if (std::abs(ex.cov12) < floor)
        throw data_error("retention_fraction: Cov'(phi1,phi2) below degeneracy floor");
    const double r = ex.cov13 / ex.cov12;
    if (quality_warning && (r < 0.0 || r > 1.0)) *quality_warning = true;
    return r;
}

struct MetricValue {
    double value = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double ci_lo = std::numeric_limits<double>::quiet_NaN();
    double ci_hi = std::numeric_limits<double>::quiet_NaN();
};

struct QndMetrics {
    MetricValue chi, r_a, cond_var_spins_sq, x_sm_sq, x_m_sq, x_s_sq,
        t_s, t_m, t_sum, delta_j_s;
    bool r_a_quality_warning = false;
    bool negative_excess_flag = false;  // some excess point estimate < 0
    bool has_se = false;
};

// Trials feeding one estimator run: an atoms list (typically one atom-number
// bin), the readout-only list, and the independently calibrated J_0.
struct CampaignData {
    std::vector<TrialRecord> atoms_trials;
    std::vector<TrialRecord> ro_trials;
    double j0_reference = 0;  // spins^2, from atom-number metadata, never from phi
};

namespace detail {

inline QndMetrics metrics_from_moments(const Moments& am, const Moments& rm,
                                       double j0, Conditioning convention) {
    if (!(j0 > 0)) throw config_error("qnd_metrics: j0_reference must be > 0");
    QndMetrics q;
    const ExcessMoments ex = excess_moments(am, rm);
    q.chi.value = am.cov12 / am.var1;
    q.r_a.value = retention_fraction(ex, j0, &q.r_a_quality_warning);
    q.cond_var_spins_sq.value = conditional_spin_variance(am, rm, convention);
    q.x_sm_sq.value = q.cond_var_spins_sq.value / (q.r_a.value * j0);
    q.x_m_sq.value = (am.var1 - j0) / j0;
    const double dvar = ex.var2 - ex.var1;
    q.delta_j_s.value = dvar / j0;
    q.x_s_sq.value = dvar / (q.r_a.value * j0);
    q.t_s.value = 1.0 / (1.0 + q.x_s_sq.value);
    q.t_m.value = 1.0 / (1.0 + q.x_m_sq.value);
    q.t_sum.value = q.t_s.value + q.t_m.value;
    if (ex.var1 < 0 || ex.var2 < 0 || ex.var3 < 0) q.negative_excess_flag = true;
    return q;
}

}  // namespace detail

// Point estimates of every figure of merit. Confidence intervals are filled
// separately by bootstrap_metrics.
inline QndMetrics qnd_metrics(const CampaignData& data, Conditioning convention) {
    if (data.atoms_trials.size() < 2 || data.ro_trials.size() < 2)
        throw data_error("qnd_metrics: need at least 2 trials in each of atoms and ro");
    const Moments am = sample_moments(data.atoms_trials);
    const Moments rm = sample_moments(data.ro_trials);
    return detail::metrics_from_moments(am, rm, data.j0_reference, convention);
}

struct BootstrapOptions {
    int n_resamples = 2000;
    std::uint64_t seed = 0;
    double ci_level = 0.68;
    double max_failure_fraction = 0.10;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline void fill_interval(MetricValue& m, std::vector<double>& draws, double ci_level) {
    std::sort(draws.begin(), draws.end());
    const double dn = static_cast<double>(draws.size());
    double mean = 0;
    for (double v : draws) mean += v;
    mean /= dn;
    double ss = 0;
    for (double v : draws) ss += (v - mean) * (v - mean);
    m.se = draws.size() > 1 ? std::sqrt(ss / (dn - 1)) : 0.0;
    const double a = (1.0 - ci_level) / 2.0;
    m.ci_lo = quantile_sorted(draws, a);
    m.ci_hi = quantile_sorted(draws, 1.0 - a);
}

}  // namespace detail

// Nonparametric bootstrap over trials; atoms and readout-only lists are
// resampled independently. Deterministic given the seed; resample r uses a
// stream derived from (seed, r), so resamples may be evaluated in any order.
inline QndMetrics bootstrap_metrics(const CampaignData& data, Conditioning convention,
                                    const BootstrapOptions& opt = {}) {
    if (opt.n_resamples < 100)
        throw config_error("bootstrap: n_resamples must be >= 100");
    QndMetrics point = qnd_metrics(data, convention);
    const Moments am = sample_moments(data.atoms_trials);
    const Moments rm = sample_moments(data.ro_trials);

    const std::size_t na = data.atoms_trials.size();
    const std::size_t nr = data.ro_trials.size();
    std::vector<std::uint32_t> ia(na), ir(nr);
    struct Draws {
        std::vector<double> chi, r_a, cond, x_sm, x_m, x_s, t_s, t_m, t_sum, djs;
    } d;
    int failures = 0;
    std::string failure_msg;

    for (int r = 0; r < opt.n_resamples; ++r) {
        auto rng = trial_rng(opt.seed, r, 0, TrialKind::atoms);  // reuse stream derivation
        std::uniform_int_distribution<std::uint32_t> da(0, static_cast<std::uint32_t>(na - 1));
        std::uniform_int_distribution<std::uint32_t> dr(0, static_cast<std::uint32_t>(nr - 1));
        for (auto& i : ia) i = da(rng);
        for (auto& i : ir) i = dr(rng);
        try {
            const Moments bam = sample_moments_indexed(data.atoms_trials, ia, am);
            const Moments brm = sample_moments_indexed(data.ro_trials, ir, rm);
            QndMetrics q = detail::metrics_from_moments(bam, brm, data.j0_reference,
                                                        convention);
            d.chi.push_back(q.chi.value);
            d.r_a.push_back(q.r_a.value);
            d.cond.push_back(q.cond_var_spins_sq.value);
            d.x_sm.push_back(q.x_sm_sq.value);
            d.x_m.push_back(q.x_m_sq.value);
            d.x_s.push_back(q.x_s_sq.value);
            d.t_s.push_back(q.t_s.value);
            d.t_m.push_back(q.t_m.value);
            d.t_sum.push_back(q.t_sum.value);
            d.djs.push_back(q.delta_j_s.value);
        } catch (const std::exception& e) {
            ++failures;
            failure_msg = e.what();
        }
    }
    if (failures > opt.max_failure_fraction * opt.n_resamples)
        throw data_error("bootstrap: unstable estimate, " + std::to_string(failures)
                         + "/" + std::to_string(opt.n_resamples)
                         + " resamples failed (last: " + failure_msg + ")");

    detail::fill_interval(point.chi, d.chi, opt.ci_level);
    detail::fill_interval(point.r_a, d.r_a, opt.ci_level);
    detail::fill_interval(point.cond_var_spins_sq, d.cond, opt.ci_level);
    detail::fill_interval(point.x_sm_sq, d.x_sm, opt.ci_level);
    detail::fill_interval(point.x_m_sq, d.x_m, opt.ci_level);
    detail::fill_interval(point.x_s_sq, d.x_s, opt.ci_level);
    detail::fill_interval(point.t_s, d.t_s, opt.ci_level);
    detail::fill_interval(point.t_m, d.t_m, opt.ci_level);
    detail::fill_interval(point.t_sum, d.t_sum, opt.ci_level);
    detail::fill_interval(point.delta_j_s, d.djs, opt.ci_level);
    point.has_se = true;
    return point;
}

// Bootstrap of a single scalar statistic of the (atoms, ro) moment pair.
// Same resampling scheme and determinism contract as bootstrap_metrics.
template <class Fn>
MetricValue bootstrap_statistic(const CampaignData& data, Fn&& statistic,
                                const BootstrapOptions& opt = {}) {
    if (opt.n_resamples < 100)
        throw config_error("bootstrap: n_resamples must be >= 100");
    const Moments am = sample_moments(data.atoms_trials);
    const Moments rm = sample_moments(data.ro_trials);
    MetricValue out;
    out.value = statistic(am, rm, data.j0_reference);

    const std::size_t na = data.atoms_trials.size();
    const std::size_t nr = data.ro_trials.size();
    std::vector<std::uint32_t> ia(na), ir(nr);
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(opt.n_resamples));
    int failures = 0;
    for (int r = 0; r < opt.n_resamples; ++r) {
        auto rng = trial_rng(opt.seed, r, 0, TrialKind::atoms);
        std::uniform_int_distribution<std::uint32_t> da(0, static_cast<std::uint32_t>(na - 1));
        std::uniform_int_distribution<std::uint32_t> dr(0, static_cast<std::uint32_t>(nr - 1));
        for (auto& i : ia) i = da(rng);
        for (auto& i : ir) i = dr(rng);
        try {
            const Moments bam = sample_moments_indexed(data.atoms_trials, ia, am);
            const Moments brm = sample_moments_indexed(data.ro_trials, ir, rm);
            draws.push_back(statistic(bam, brm, data.j0_reference));
        } catch (const std::exception&) {
            ++failures;
        }
    }
    if (failures > opt.max_failure_fraction * opt.n_resamples)
        throw data_error("bootstrap: unstable estimate, " + std::to_string(failures)
                         + "/" + std::to_string(opt.n_resamples) + " resamples failed");
    detail::fill_interval(out, draws, opt.ci_level);
    return out;
}

struct Verdict {
    bool qsp_pass = false;
    bool idt_pass = false;
    bool qnd_pass = false;
    double qsp_sigma = std::numeric_limits<double>::quiet_NaN();
    double idt_sigma = std::numeric_limits<double>::quiet_NaN();
    bool significance_available = false;
};

// Both criteria are strict inequalities; boundary points do not pass.
inline Verdict certify(const QndMetrics& m) {
    Verdict v;
    v.qsp_pass = m.x_sm_sq.value < 1.0;
    v.idt_pass = m.t_sum.value > 1.0;
    v.qnd_pass = v.qsp_pass && v.idt_pass;
    if (m.has_se && std::isfinite(m.x_sm_sq.se) && std::isfinite(m.t_sum.se)
        && m.x_sm_sq.se > 0 && m.t_sum.se > 0) {
        v.qsp_sigma = (1.0 - m.x_sm_sq.value) / m.x_sm_sq.se;
        v.idt_sigma = (m.t_sum.value - 1.0) / m.t_sum.se;
        v.significance_available = true;
    }
    return v;
}

}  // namespace qnd

#endif  // QND_ESTIMATORS_HPP
