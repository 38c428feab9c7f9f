#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qnd/model.hpp"
#include "qnd/params.hpp"
#include "qnd/simulator.hpp"

using namespace qnd;

namespace {

// Independent reference: explicit per-atom loop, written directly from the
// damage process definition. Used as an oracle for both production backends.
struct RefTrial {
    double phi1, phi2, phi3;
};

RefTrial reference_trial(std::int64_t n_atoms, double eta, double beta,
                         double sigma_ro, double sigma_tech, std::mt19937& rng) {
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution scatters(eta);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double sb = std::sqrt(beta) / 2.0;
    std::vector<double> spins(n_atoms);
    for (auto& s : spins) s = coin(rng) ? 0.5 : -0.5;
    double tech = 0.0;
    auto sum = [&]() {
        double t = tech;
        for (double s : spins) t += s;
        return t;
    };
    RefTrial out{};
    out.phi1 = sum() + sigma_ro * unit(rng);
    for (int k = 0; k < 2; ++k) {
        for (auto& s : spins)
            if (scatters(rng)) s = coin(rng) ? sb : -sb;
        tech += sigma_tech * unit(rng);
        (k == 0 ? out.phi2 : out.phi3) = sum() + sigma_ro * unit(rng);
    }
    return out;
}

struct Mom {
    double v1 = 0, v2 = 0, v3 = 0, c12 = 0, c13 = 0, c23 = 0;
};

template <class Get>
Mom moments_of(std::size_t n, Get&& get) {
    double m1 = 0, m2 = 0, m3 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto [a, b, c] = get(i);
        m1 += a; m2 += b; m3 += c;
    }
    m1 /= n; m2 /= n; m3 /= n;
    Mom m;
    for (std::size_t i = 0; i < n; ++i) {
        auto [a, b, c] = get(i);
        const double x = a - m1, y = b - m2, z = c - m3;
        m.v1 += x * x; m.v2 += y * y; m.v3 += z * z;
        m.c12 += x * y; m.c13 += x * z; m.c23 += y * z;
    }
    const double dn = static_cast<double>(n - 1);
    m.v1 /= dn; m.v2 /= dn; m.v3 /= dn;
    m.c12 /= dn; m.c13 /= dn; m.c23 /= dn;
    return m;
}

ExperimentParams small_params(Backend backend) {
    ExperimentParams p;
    p.n_atoms_total = 200.0 / 0.9;
    p.sigma0_over_A.reset();
    p.d0 = 43.5;
    p.eta = 0.093;
    p.beta = 2.0;
    p.backend = backend;
    return p;
}

std::vector<TrialResult> run_trials(const ExperimentParams& p, int n, std::uint64_t seed) {
    const DerivedParams d = derive(p);
    std::vector<TrialResult> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        auto rng = trial_rng(seed, i, 0, TrialKind::atoms);
        out.push_back(simulate_trial(d, p, d.n_atoms_effective, rng));
    }
    return out;
}

// standard error of a sample variance / covariance of roughly-Gaussian data
double var_se(double var, std::size_t n) {
    return var * std::sqrt(2.0 / static_cast<double>(n));
}

}  // namespace

TEST_CASE("both backends match the independent per-atom reference") {
    const int n_trials = 150000;
    const std::int64_t n_atoms = 200;

    ExperimentParams p = small_params(Backend::gaussian);
    const DerivedParams d = derive(p);
    const double sigma_ro = std::sqrt(*d.sigma_ro_sq);

    std::mt19937 ref_rng(1234);
    std::vector<RefTrial> ref(n_trials);
    for (auto& t : ref)
        t = reference_trial(n_atoms, p.eta, p.beta, sigma_ro, 0.0, ref_rng);
    const Mom rm = moments_of(ref.size(), [&](std::size_t i) {
        return std::tuple{ref[i].phi1, ref[i].phi2, ref[i].phi3};
    });

    for (Backend backend : {Backend::gaussian, Backend::atomic}) {
        p.backend = backend;
        const auto trials = run_trials(p, n_trials, 99 + static_cast<int>(backend));
        const Mom sm = moments_of(trials.size(), [&](std::size_t i) {
            const auto& r = trials[i].record;
            return std::tuple{r.phi1, r.phi2, r.phi3};
        });
        INFO("backend = " << to_string(backend));
        const double se2 = std::sqrt(2.0) * var_se(rm.v1, n_trials);
        CHECK(std::abs(sm.v1 - rm.v1) < 4 * se2);
        CHECK(std::abs(sm.v2 - rm.v2) < 4 * se2);
        CHECK(std::abs(sm.v3 - rm.v3) < 4 * se2);
        CHECK(std::abs(sm.c12 - rm.c12) < 4 * se2);
        CHECK(std::abs(sm.c13 - rm.c13) < 4 * se2);
        CHECK(std::abs(sm.c23 - rm.c23) < 4 * se2);
    }
}

TEST_CASE("backend second moments agree with oracle_moments") {
    const int n_trials = 300000;
    for (Backend backend : {Backend::gaussian, Backend::atomic}) {
        ExperimentParams p = small_params(backend);
        p.n_atoms_total = 1e4 / 0.9;
        p.sigma_tech_sq = 50.0;
        const OracleMoments o = oracle_moments(p);
        const auto trials = run_trials(p, n_trials, 4);
        const Mom sm = moments_of(trials.size(), [&](std::size_t i) {
            const auto& r = trials[i].record;
            return std::tuple{r.phi1, r.phi2, r.phi3};
        });
        INFO("backend = " << to_string(backend));
        CHECK(std::abs(sm.v1 - o.var1) < 4 * var_se(o.var1, n_trials));
        CHECK(std::abs(sm.v2 - o.var2) < 4 * var_se(o.var2, n_trials));
        CHECK(std::abs(sm.v3 - o.var3) < 4 * var_se(o.var3, n_trials));
        CHECK(std::abs(sm.c12 - o.cov12) < 4 * var_se(o.var1, n_trials));
        CHECK(std::abs(sm.c13 - o.cov13) < 4 * var_se(o.var1, n_trials));
        CHECK(std::abs(sm.c23 - o.cov23) < 4 * var_se(o.var2, n_trials));
    }
}

TEST_CASE("population moments at the calibrated operating point") {
    // frozen closed-form values: Var(phi1) = j0 + sigma_ro^2,
    // Cov(phi1,phi2) = (1-eta) j0, Cov(phi1,phi3) = (1-eta)^2 j0,
    // Var(phi2) - Var(phi1) = j0 eta (beta-1)
    ExperimentParams p = small_params(Backend::gaussian);
    p.n_atoms_total = 9.444444444444444e5;
    const OracleMoments o = oracle_moments(p);
    CHECK(o.var1 == Catch::Approx(265027.5).epsilon(1e-4));
    CHECK(o.cov12 == Catch::Approx(192737.5).epsilon(1e-6));
    CHECK(o.cov13 == Catch::Approx(174812.9).epsilon(1e-4));
    CHECK(o.var2 - o.var1 == Catch::Approx(19762.5).epsilon(1e-6));
    CHECK(o.delta_j_s == Catch::Approx(0.093).epsilon(1e-9));

    const int n_trials = 200000;
    const auto trials = run_trials(p, n_trials, 5);
    const Mom sm = moments_of(trials.size(), [&](std::size_t i) {
        const auto& r = trials[i].record;
        return std::tuple{r.phi1, r.phi2, r.phi3};
    });
    CHECK(std::abs(sm.v1 - 265027.5) < 4 * var_se(265027.5, n_trials));
    CHECK(std::abs(sm.c12 - 192737.5) < 4 * var_se(265027.5, n_trials));
    CHECK(std::abs(sm.c13 - 174812.9) < 4 * var_se(265027.5, n_trials));
}

TEST_CASE("QND identity at eta = 0: latent spin exactly constant") {
    for (Backend backend : {Backend::gaussian, Backend::atomic}) {
        ExperimentParams p = small_params(backend);
        p.n_atoms_total = 1000.0 / 0.9;
        p.eta = 0.0;
        p.sigma_tech_sq = 0;
        p.sigma_ro_sq_override = 5000.0;  // readout noise undefined at snr = 0
        INFO("backend = " << to_string(backend));
        const auto trials = run_trials(p, 200, 6);
        for (const auto& t : trials) {
            CHECK(t.spins.jz1 == t.spins.jz2);
            CHECK(t.spins.jz2 == t.spins.jz3);
        }
    }
}

TEST_CASE("atomic backend: single atom with eta = 1, beta = 0") {
    ExperimentParams p = small_params(Backend::atomic);
    p.eta = 0.999999;  // eta < 1 invariant; scattering near-certain
    p.beta = 0.0;
    DerivedParams d = derive(p);
    for (int i = 0; i < 100; ++i) {
        auto rng = trial_rng(7, i, 0, TrialKind::atoms);
        const TrialResult t = simulate_trial_atomic(d, p, 1, rng);
        CHECK(std::abs(t.spins.jz1) == 0.5);
        CHECK(t.spins.jz2 == 0.0);
        CHECK(t.spins.jz3 == 0.0);
    }
}

TEST_CASE("atomic backend refuses counts above the cap") {
    ExperimentParams p = small_params(Backend::atomic);
    p.atomic_atom_cap = 1000;
    DerivedParams d = derive(p);
    auto rng = trial_rng(1, 0, 0, TrialKind::atoms);
    CHECK_THROWS_AS(simulate_trial_atomic(d, p, 2000, rng), config_error);
}

TEST_CASE("readout-only trials carry pure readout noise") {
    ExperimentParams p = small_params(Backend::gaussian);
    const DerivedParams d = derive(p);
    const int n = 200000;
    std::vector<TrialRecord> ro(n);
    for (int i = 0; i < n; ++i) {
        auto rng = trial_rng(11, i, 0, TrialKind::readout_only);
        ro[i] = simulate_readout_trial(d, rng);
        REQUIRE(ro[i].n_atoms_at_step == 0);
    }
    const Mom m = moments_of(ro.size(), [&](std::size_t i) {
        return std::tuple{ro[i].phi1, ro[i].phi2, ro[i].phi3};
    });
    const double sro = *d.sigma_ro_sq;
    CHECK(std::abs(m.v1 - sro) < 4 * var_se(sro, n));
    CHECK(std::abs(m.v2 - sro) < 4 * var_se(sro, n));
    CHECK(std::abs(m.c12) < 4 * sro / std::sqrt(n));
    CHECK(std::abs(m.c13) < 4 * sro / std::sqrt(n));
}

TEST_CASE("campaign structure follows the plan") {
    ExperimentParams p;  // defaults: 8.5e5 effective atoms, sigma0 mode
    p.campaign.n_cycles = 50;
    p.seed = 3;
    const Campaign c = simulate_campaign(p);
    REQUIRE(c.records.size() == 50u * 21u);

    // ladder endpoint: 8.5e5 * 0.85^19 ~ 3.9e4
    std::int64_t last_step_atoms = 0;
    for (const auto& r : c.records)
        if (r.kind == TrialKind::atoms && r.step_index == 19) last_step_atoms = r.n_atoms_at_step;
    CHECK(last_step_atoms == Catch::Approx(3.9e4).epsilon(0.01));

    // canonical ordering
    const bool sorted = std::is_sorted(
        c.records.begin(), c.records.end(), [](const TrialRecord& a, const TrialRecord& b) {
            return std::tuple{a.cycle_id, a.step_index, a.kind == TrialKind::readout_only}
                   < std::tuple{b.cycle_id, b.step_index, b.kind == TrialKind::readout_only};
        });
    CHECK(sorted);
}

TEST_CASE("empty plan gives empty campaign") {
    ExperimentParams p;
    p.campaign.n_cycles = 0;
    CHECK(simulate_campaign(p).records.empty());
}

TEST_CASE("ladder clamps to one atom with a warning") {
    ExperimentParams p;
    p.n_atoms_total = 3.0;
    p.atom_efficiency = 1.0;
    p.campaign.n_cycles = 1;
    p.campaign.n_steps = 20;
    p.campaign.loss_per_step = 0.5;
    const Campaign c = simulate_campaign(p);
    CHECK(c.atom_floor_warning);
    for (const auto& r : c.records)
        if (r.kind == TrialKind::atoms) CHECK(r.n_atoms_at_step >= 1);
}

TEST_CASE("fixed seed reproduces the campaign exactly") {
    ExperimentParams p;
    p.campaign.n_cycles = 20;
    p.seed = 42;
    const Campaign a = simulate_campaign(p);
    const Campaign b = simulate_campaign(p);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].phi1 == b.records[i].phi1);
        CHECK(a.records[i].phi2 == b.records[i].phi2);
        CHECK(a.records[i].phi3 == b.records[i].phi3);
    }
}

TEST_CASE("trial streams depend only on (seed, cycle, step, kind)") {
    // evaluating a single trial out of campaign order reproduces its record
    ExperimentParams p;
    p.campaign.n_cycles = 10;
    p.seed = 8;
    const DerivedParams d = derive(p);
    const Campaign c = simulate_campaign(p);
    for (std::size_t i : {std::size_t{5}, std::size_t{100}, std::size_t{150}}) {
        const TrialRecord& r = c.records[i];
        if (r.kind != TrialKind::atoms) continue;
        auto rng = trial_rng(p.seed, r.cycle_id, r.step_index, TrialKind::atoms);
        const TrialResult redo =
            simulate_trial(d, p, static_cast<double>(r.n_atoms_at_step), rng);
        CHECK(redo.record.phi1 == r.phi1);
        CHECK(redo.record.phi2 == r.phi2);
        CHECK(redo.record.phi3 == r.phi3);
    }
}

TEST_CASE("retention telescoping: cov13/cov12 ~ (1-eta)") {
    for (Backend backend : {Backend::gaussian, Backend::atomic}) {
        ExperimentParams p = small_params(backend);
        p.n_atoms_total = 1e4 / 0.9;
        p.eta = 0.2;
        const int n = 400000;
        const auto trials = run_trials(p, n, 13);
        const Mom m = moments_of(trials.size(), [&](std::size_t i) {
            const auto& r = trials[i].record;
            return std::tuple{r.phi1, r.phi2, r.phi3};
        });
        INFO("backend = " << to_string(backend));
        CHECK(m.c13 / m.c12 == Catch::Approx(0.8).margin(0.02));
    }
}
