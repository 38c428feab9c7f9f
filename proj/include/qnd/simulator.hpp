#ifndef QND_SIMULATOR_HPP
#define QND_SIMULATOR_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qnd/params.hpp"

namespace qnd {

enum class TrialKind { atoms, readout_only };

inline std::string to_string(TrialKind k) {
    return k == TrialKind::atoms ? "atoms" : "ro";
}

// One three-pulse measurement outcome. phi values are scaled angles in spins.
struct TrialRecord {
    std::int64_t cycle_id = 0;
    int step_index = 0;
    TrialKind kind = TrialKind::atoms;
    std::int64_t n_atoms_at_step = 0;  // 0 for readout-only trials
    double phi1 = 0, phi2 = 0, phi3 = 0;
};

// Latent collective spin before each of the three measurements.
struct SpinTrajectory {
    double jz1 = 0, jz2 = 0, jz3 = 0;
};

struct TrialResult {
    TrialRecord record;
    SpinTrajectory spins;
};

struct Campaign {
    std::vector<TrialRecord> records;  // canonical order (cycle, step, kind)
    bool atom_floor_warning = false;   // ladder clamped to 1 atom somewhere
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic per-trial stream from (seed, cycle, step, kind). Trials are
// independent of evaluation order by construction.
inline std::mt19937_64 trial_rng(std::uint64_t seed, std::int64_t cycle_id,
                                 int step_index, TrialKind kind) {
    std::uint64_t s = detail::splitmix64(seed);
    s = detail::splitmix64(s ^ static_cast<std::uint64_t>(cycle_id));
    s = detail::splitmix64(s ^ static_cast<std::uint64_t>(step_index));
    s = detail::splitmix64(s ^ (kind == TrialKind::readout_only ? 0x726fULL : 0ULL));
    return std::mt19937_64(s);
}

// Gaussian surrogate of the damage process. Between measurements the spin
// shrinks by (1-eta) and picks up injected noise whose variance is chosen so
// the second moments equal the per-atom backend's exactly:
//   Var(j_{k+1}) = (1-eta) Var(j_k) + j0_step*eta*beta + sigma_tech_sq
// which for the first interval reduces to j0*eta*(1+beta-eta) + sigma_tech_sq.
inline TrialResult simulate_trial_gaussian(const DerivedParams& derived,
                                           const ExperimentParams& params,
                                           double n_atoms_step,
                                           std::mt19937_64& rng) {
    const double sigma_ro_sq = sigma_ro_sq_or_throw(derived);
    const double j0_step = n_atoms_step / 4.0;
    const double u = 1.0 - params.eta;
    std::normal_distribution<double> unit(0.0, 1.0);

    TrialResult out;
    double jz = std::sqrt(j0_step) * unit(rng);
    double var_jz = j0_step;  // population variance of the latent spin
    const double sigma_ro = std::sqrt(sigma_ro_sq);

    out.spins.jz1 = jz;
    out.record.phi1 = jz + sigma_ro * unit(rng);

    for (int k = 0; k < 2; ++k) {
        const double w_var = params.eta * u * var_jz + j0_step * params.eta * params.beta
                             + params.sigma_tech_sq;
        jz = u * jz + std::sqrt(w_var) * unit(rng);
        var_jz = u * var_jz + j0_step * params.eta * params.beta + params.sigma_tech_sq;
        if (k == 0) {
            out.spins.jz2 = jz;
            out.record.phi2 = jz + sigma_ro * unit(rng);
        } else {
            out.spins.jz3 = jz;
            out.record.phi3 = jz + sigma_ro * unit(rng);
        }
    }
    out.record.n_atoms_at_step = static_cast<std::int64_t>(std::llround(n_atoms_step));
    out.record.kind = TrialKind::atoms;
    return out;
}

// Per-atom backend. Atoms start as independent pseudo-spins +-1/2; between
// measurements each scatters with probability eta and is redrawn as
// +-sqrt(beta)/2, permanently flagged lost from the input state. Atoms are
// exchangeable, so the population is tracked as four category counts
// (retained/lost x up/down) and evolved with exact binomial draws; the
// resulting distribution is identical to an explicit per-atom loop.
inline TrialResult simulate_trial_atomic(const DerivedParams& derived,
                                         const ExperimentParams& params,
                                         double n_atoms_step,
                                         std::mt19937_64& rng) {
    if (n_atoms_step < 1)
        throw config_error("atomic backend needs n_atoms_effective >= 1");
    if (n_atoms_step > params.atomic_atom_cap)
        throw config_error("atomic backend: atom count exceeds cap");
    const double sigma_ro_sq = sigma_ro_sq_or_throw(derived);
    const double sigma_ro = std::sqrt(sigma_ro_sq);
    const double sigma_tech = std::sqrt(params.sigma_tech_sq);
    const double s_beta = std::sqrt(params.beta) / 2.0;
    const auto n = static_cast<std::int64_t>(std::llround(n_atoms_step));

    std::normal_distribution<double> unit(0.0, 1.0);
    std::binomial_distribution<std::int64_t> half(n, 0.5);

    std::int64_t retained_up = half(rng);
    std::int64_t retained_dn = n - retained_up;
    std::int64_t lost_up = 0, lost_dn = 0;
    double tech_offset = 0.0;  // accumulated technical noise on the sum

    auto collective_spin = [&]() {
        return 0.5 * static_cast<double>(retained_up - retained_dn)
               + s_beta * static_cast<double>(lost_up - lost_dn) + tech_offset;
    };
    auto binom = [&](std::int64_t count, double p) -> std::int64_t {
        if (count == 0 || p == 0.0) return 0;
        std::binomial_distribution<std::int64_t> b(count, p);
        return b(rng);
    };
    auto scatter_step = [&]() {
        const std::int64_t s_ru = binom(retained_up, params.eta);
        const std::int64_t s_rd = binom(retained_dn, params.eta);
        const std::int64_t s_lu = binom(lost_up, params.eta);
        const std::int64_t s_ld = binom(lost_dn, params.eta);
        retained_up -= s_ru;
        retained_dn -= s_rd;
        lost_up -= s_lu;
        lost_dn -= s_ld;
        const std::int64_t scattered = s_ru + s_rd + s_lu + s_ld;
        const std::int64_t fresh_up = binom(scattered, 0.5);
        lost_up += fresh_up;
        lost_dn += scattered - fresh_up;
        if (sigma_tech > 0) tech_offset += sigma_tech * unit(rng);
    };

    TrialResult out;
    out.spins.jz1 = collective_spin();
    out.record.phi1 = out.spins.jz1 + sigma_ro * unit(rng);
    scatter_step();
    out.spins.jz2 = collective_spin();
    out.record.phi2 = out.spins.jz2 + sigma_ro * unit(rng);
    scatter_step();
    out.spins.jz3 = collective_spin();
    out.record.phi3 = out.spins.jz3 + sigma_ro * unit(rng);

    out.record.n_atoms_at_step = n;
    out.record.kind = TrialKind::atoms;
    return out;
}

inline TrialResult simulate_trial(const DerivedParams& derived,
                                  const ExperimentParams& params,
                                  double n_atoms_step,
                                  std::mt19937_64& rng) {
    return params.backend == Backend::gaussian
               ? simulate_trial_gaussian(derived, params, n_atoms_step, rng)
               : simulate_trial_atomic(derived, params, n_atoms_step, rng);
}

// Readout-only trial: pure polarimeter noise, no atoms in the trap.
inline TrialRecord simulate_readout_trial(const DerivedParams& derived,
                                          std::mt19937_64& rng) {
    const double sigma_ro = std::sqrt(sigma_ro_sq_or_throw(derived));
    std::normal_distribution<double> unit(0.0, 1.0);
    TrialRecord r;
    r.kind = TrialKind::readout_only;
    r.n_atoms_at_step = 0;
    r.phi1 = sigma_ro * unit(rng);
    r.phi2 = sigma_ro * unit(rng);
    r.phi3 = sigma_ro * unit(rng);
    return r;
}

// Atom count on ladder step s; clamps to one atom when the ladder underflows.
inline double ladder_atoms(const ExperimentParams& p, int step, bool* clamped = nullptr) {
    const double raw = p.n_atoms_effective()
                       * std::pow(1.0 - p.campaign.loss_per_step, step);
    double n = std::round(raw);
    if (n < 1) {
        n = 1;
        if (clamped) *clamped = true;
    }
    return n;
}

// Full campaign: for each loading cycle, walk the atom-number ladder and then
// append readout-only trials. The per-trial RNG stream depends only on
// (seed, cycle, step, kind), so any evaluation schedule gives the same output
// once records are in canonical (cycle, step, kind) order. Readout-only
// trials use step_index = n_steps + i to keep that order natural.
inline Campaign simulate_campaign(const ExperimentParams& params) {
    const DerivedParams derived = derive(params);
    Campaign out;
    const auto& plan = params.campaign;
    out.records.reserve(static_cast<std::size_t>(plan.n_cycles)
                        * (plan.n_steps + plan.ro_trials_per_cycle));
    for (std::int64_t cycle = 0; cycle < plan.n_cycles; ++cycle) {
        for (int step = 0; step < plan.n_steps; ++step) {
            bool clamped = false;
            const double n_step = ladder_atoms(params, step, &clamped);
            if (clamped) out.atom_floor_warning = true;
            auto rng = trial_rng(params.seed, cycle, step, TrialKind::atoms);
            TrialResult r = simulate_trial(derived, params, n_step, rng);
            r.record.cycle_id = cycle;
            r.record.step_index = step;
            out.records.push_back(r.record);
        }
        for (int i = 0; i < plan.ro_trials_per_cycle; ++i) {
            const int step = plan.n_steps + i;
            auto rng = trial_rng(params.seed, cycle, step, TrialKind::readout_only);
            TrialRecord r = simulate_readout_trial(derived, rng);
            r.cycle_id = cycle;
            r.step_index = step;
            out.records.push_back(r);
        }
    }
    return out;
}

}  // namespace qnd

#endif  // QND_SIMULATOR_HPP
