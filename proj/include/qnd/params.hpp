#ifndef QND_PARAMS_HPP
#define QND_PARAMS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace qnd {

// Thrown for invalid configuration (bad parameter values, inconsistent flags).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for invalid or insufficient input data (malformed files, too few trials).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Which variable is conditioned on which in the conditional variance.
// as_written: Var(phi1 - chi*phi2) with chi = cov(phi1,phi2)/Var(phi1).
// regression: Var(phi2 - chi*phi1) with the same chi.
enum class Conditioning { as_written, regression };

// Stochastic backend for trial generation.
enum class Backend { gaussian, atomic };

inline std::string to_string(Conditioning c) {
    return c == Conditioning::as_written ? "as-written" : "regression";
}

inline std::string to_string(Backend b) {
    return b == Backend::gaussian ? "gaussian" : "atomic";
}

inline Conditioning conditioning_from_string(const std::string& s) {
    if (s == "as-written") return Conditioning::as_written;
    if (s == "regression") return Conditioning::regression;
    throw config_error("unknown conditioning convention: " + s);
}

inline Backend backend_from_string(const std::string& s) {
    if (s == "gaussian") return Backend::gaussian;
    if (s == "atomic") return Backend::atomic;
    throw config_error("unknown backend: " + s);
}

// Layout of one data-taking campaign: an atom-number ladder repeated over
// many trap loading cycles, with readout-only trials appended per cycle.
struct CampaignPlan {
    std::int64_t n_cycles = 1000;
    int n_steps = 20;
    double loss_per_step = 0.15;
    int ro_trials_per_cycle = 1;

    void validate() const {
        if (n_cycles < 0) throw config_error("n_cycles must be >= 0");
        if (n_steps < 1) throw config_error("n_steps must be >= 1");
        if (!(loss_per_step >= 0.0 && loss_per_step < 1.0))
            throw config_error("loss_per_step must be in [0,1)");
        if (ro_trials_per_cycle < 0)
            throw config_error("ro_trials_per_cycle must be >= 0");
    }
};

// Full physical and campaign configuration. All spin-domain quantities are
// in scaled-angle units (equivalent spins); radians appear only at the
// explicit conversion boundary (phi_scaled_to_radians and friends).
struct ExperimentParams {
    double n_atoms_total = 9.444444444444444e5;
    double atom_efficiency = 0.9;    // effective-atom factor
    double kappa = 1.47e-7;          // radians per spin
    double n_photons = 2e8;          // photons per effective measurement
    double eta = 0.093;              // per-measurement damage probability
    std::optional<double> d0;        // on-resonance optical depth, direct
    std::optional<double> sigma0_over_A = 43.5 / 8.5e5;  // d0 per effective atom
    double beta = 2.0;               // scattered-atom variance multiplier
    double sigma_tech_sq = 0.0;      // technical spin noise per interval, spins^2
    // Explicit readout-noise variance in spins^2. When set it replaces
    // j0/(d0*eta); required to simulate eta = 0 campaigns, where the
    // canonical expression is undefined.
    std::optional<double> sigma_ro_sq_override;
    Conditioning conditioning_convention = Conditioning::as_written;
    Backend backend = Backend::gaussian;
    double atomic_atom_cap = 1e7;    // refusal threshold for the atomic backend
    CampaignPlan campaign;
    std::uint64_t seed = 0;

    double n_atoms_effective() const { return atom_efficiency * n_atoms_total; }

    // Optical depth at a given (effective) atom number. In sigma0_over_A mode
    // d0 tracks the atom number; in direct mode it is a fixed calibration.
    double d0_at(double n_atoms) const {
        if (sigma0_over_A) return *sigma0_over_A * n_atoms;
        return *d0;
    }

    double d0_top() const { return d0_at(n_atoms_effective()); }

    void validate() const {
        if (!(n_atoms_total > 0)) throw config_error("n_atoms_total must be > 0");
        if (!(atom_efficiency > 0.0 && atom_efficiency <= 1.0))
            throw config_error("atom_efficiency must be in (0,1]");
        if (!(kappa > 0)) throw config_error("kappa must be > 0");
        if (!(n_photons > 0)) throw config_error("n_photons must be > 0");
        if (!(eta >= 0.0 && eta < 1.0)) throw config_error("eta must be in [0,1)");
        if (!(beta >= 0.0)) throw config_error("beta must be >= 0");
        if (!(sigma_tech_sq >= 0.0)) throw config_error("sigma_tech_sq must be >= 0");
        if (d0.has_value() == sigma0_over_A.has_value())
            throw config_error("exactly one of {d0, sigma0_over_A} must be set");
        if (d0 && !(*d0 >= 0)) throw config_error("d0 must be >= 0");
        if (sigma0_over_A && !(*sigma0_over_A > 0))
            throw config_error("sigma0_over_A must be > 0");
        if (sigma_ro_sq_override && !(*sigma_ro_sq_override > 0))
            throw config_error("sigma_ro_sq_override must be > 0");
        campaign.validate();
    }
};

// Quantities derived from ExperimentParams, shared by simulator, estimators
// and analytic model.
struct DerivedParams {
    double n_atoms_effective = 0;  // N_A
    double j0 = 0;                 // projection noise N_A/4, spins^2
    double d0 = 0;                 // optical depth at full atom number
    double snr = 0;                // d0 * eta
    std::optional<double> sigma_ro_sq;  // readout noise j0/(d0*eta); unset when snr == 0
    double sigma_w_sq = 0;         // first-interval damage noise j0*eta*(1+beta-eta)
    double r_a_model = 1;          // model retention fraction 1 - eta
};

inline DerivedParams derive(const ExperimentParams& p) {
    p.validate();
    DerivedParams d;
    d.n_atoms_effective = p.n_atoms_effective();
    d.j0 = d.n_atoms_effective / 4.0;
    d.d0 = p.d0_top();
    d.snr = d.d0 * p.eta;
    if (p.sigma_ro_sq_override)
        d.sigma_ro_sq = *p.sigma_ro_sq_override;
    else if (d.snr > 0)
        d.sigma_ro_sq = d.j0 / d.snr;
    d.sigma_w_sq = d.j0 * p.eta * (1.0 + p.beta - p.eta);
    d.r_a_model = 1.0 - p.eta;
    return d;
}

// Requires a populated readout noise; use where snr = 0 is a hard error.
inline double sigma_ro_sq_or_throw(const DerivedParams& d) {
    if (!d.sigma_ro_sq)
        throw config_error("infinite readout noise: d0*eta = 0");
    return *d.sigma_ro_sq;
}

// Diagnostic SNR from the coupling constant, kappa^2 * N_A * N_L / 2.
// Kept separate from DerivedParams::snr = d0*eta; the two can disagree when
// n_photons does not count a full measurement train.
inline double snr_from_coupling(double kappa, double n_atoms, double n_photons) {
    if (kappa < 0 || n_atoms < 0 || n_photons < 0)
        throw config_error("snr_from_coupling: inputs must be >= 0");
    return kappa * kappa * n_atoms * n_photons / 2.0;
}

inline double phi_scaled_to_radians(double phi_scaled, double kappa) {
    if (!(kappa > 0)) throw config_error("kappa must be > 0 for angle conversion");
    return kappa * phi_scaled;
}

inline double phi_radians_to_scaled(double phi_raw, double kappa) {
    if (!(kappa > 0)) throw config_error("kappa must be > 0 for angle conversion");
    return phi_raw / kappa;
}

}  // namespace qnd

#endif  // QND_PARAMS_HPP
