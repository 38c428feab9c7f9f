#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qnd/params.hpp"

using namespace qnd;

namespace {

ExperimentParams paper_params() {
    ExperimentParams p;
    p.n_atoms_total = 9.444444444444444e5;
    p.atom_efficiency = 0.9;
    p.sigma0_over_A.reset();
    p.d0 = 43.5;
    p.eta = 0.093;
    return p;
}

}  // namespace

TEST_CASE("derive reproduces the calibrated operating point") {
    const DerivedParams d = derive(paper_params());
    CHECK(d.n_atoms_effective == Catch::Approx(8.5e5).epsilon(1e-12));
    CHECK(d.j0 == Catch::Approx(212500.0).epsilon(1e-12));
    CHECK(d.snr == Catch::Approx(4.0455).epsilon(1e-10));
    REQUIRE(d.sigma_ro_sq.has_value());
    CHECK(*d.sigma_ro_sq == Catch::Approx(52527.5).epsilon(1e-4));
}

TEST_CASE("derive at eta = 0 flags infinite readout noise") {
    ExperimentParams p = paper_params();
    p.eta = 0;
    const DerivedParams d = derive(p);
    CHECK(d.snr == 0.0);
    CHECK_FALSE(d.sigma_ro_sq.has_value());
    CHECK_THROWS_AS(sigma_ro_sq_or_throw(d), config_error);
}

TEST_CASE("sigma_ro_sq * snr recovers j0") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.01, 0.9);
    for (int i = 0; i < 200; ++i) {
        ExperimentParams p = paper_params();
        p.eta = u(rng);
        p.d0 = 200.0 * u(rng);
        p.n_atoms_total = 1e6 * u(rng);
        const DerivedParams d = derive(p);
        REQUIRE(d.sigma_ro_sq.has_value());
        // identity by construction, up to one rounding in the division
        CHECK(*d.sigma_ro_sq * d.snr == Catch::Approx(d.j0).epsilon(4e-16));
    }
}

TEST_CASE("increasing eta at fixed d0 decreases readout noise") {
    ExperimentParams p = paper_params();
    double prev = 1e300;
    for (double eta : {0.01, 0.05, 0.093, 0.3, 0.8}) {
        p.eta = eta;
        const double s = *derive(p).sigma_ro_sq;
        CHECK(s < prev);
        prev = s;
    }
}

TEST_CASE("sigma0_over_A mode derives d0 from the atom number") {
    ExperimentParams p;  // defaults: sigma0_over_A = 43.5/8.5e5
    const DerivedParams d = derive(p);
    CHECK(d.d0 == Catch::Approx(43.5).epsilon(1e-12));
    p.n_atoms_total /= 2;
    CHECK(derive(p).d0 == Catch::Approx(21.75).epsilon(1e-12));
}

TEST_CASE("snr_from_coupling diagnostic") {
    CHECK(snr_from_coupling(1.47e-7, 8.5e5, 2e8) == Catch::Approx(1.837).epsilon(1e-3));
    CHECK(snr_from_coupling(0, 8.5e5, 2e8) == 0.0);
    // photon number solving kappa^2 N_A N_L / 2 = d0*eta
    CHECK(snr_from_coupling(1.47e-7, 8.5e5, 4.4e8) == Catch::Approx(4.04).epsilon(1e-2));
}

TEST_CASE("angle conversions") {
    CHECK(phi_scaled_to_radians(1.0, 1.47e-7) == Catch::Approx(1.47e-7).epsilon(1e-15));
    CHECK(phi_scaled_to_radians(0.0, 1.47e-7) == 0.0);
    CHECK_THROWS_AS(phi_radians_to_scaled(1.0, 0.0), config_error);
    CHECK_THROWS_AS(phi_scaled_to_radians(1.0, 0.0), config_error);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        const double rt = phi_radians_to_scaled(phi_scaled_to_radians(x, 1.47e-7), 1.47e-7);
        CHECK(rt == Catch::Approx(x).epsilon(4e-16).margin(1e-300));
    }
}

TEST_CASE("parameter invariants are enforced") {
    ExperimentParams p = paper_params();
    SECTION("eta out of range") {
        p.eta = 1.0;
        CHECK_THROWS_AS(p.validate(), config_error);
    }
    SECTION("both d0 and sigma0_over_A set") {
        p.sigma0_over_A = 1e-5;
        CHECK_THROWS_AS(p.validate(), config_error);
    }
    SECTION("neither d0 nor sigma0_over_A set") {
        p.d0.reset();
        CHECK_THROWS_AS(p.validate(), config_error);
    }
    SECTION("bad efficiency") {
        p.atom_efficiency = 1.5;
        CHECK_THROWS_AS(p.validate(), config_error);
    }
    SECTION("negative beta") {
        p.beta = -1;
        CHECK_THROWS_AS(p.validate(), config_error);
    }
    SECTION("bad loss per step") {
        p.campaign.loss_per_step = 1.0;
        CHECK_THROWS_AS(p.validate(), config_error);
    }
}

TEST_CASE("derive is deterministic") {
    const ExperimentParams p = paper_params();
    const DerivedParams a = derive(p);
    const DerivedParams b = derive(p);
    CHECK(a.j0 == b.j0);
    CHECK(a.snr == b.snr);
    CHECK(*a.sigma_ro_sq == *b.sigma_ro_sq);
    CHECK(a.sigma_w_sq == b.sigma_w_sq);
}
