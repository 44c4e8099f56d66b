#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bbh/bbgky.hpp"
#include "bbh/firstq.hpp"
#include "bbh/oracle.hpp"

using namespace bbh;

namespace {
CIState random_ci(int m, int N, std::mt19937& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    CIState a;
    a.m = m;
    a.N = N;
    a.amplitudes.resize(static_cast<Eigen::Index>(fock_dimension(m, N)));
    for (Eigen::Index i = 0; i < a.amplitudes.size(); ++i)
        a.amplitudes(i) = Complex(dist(rng), dist(rng));
    a.normalize();
    return a;
}

double max_abs(const Matrix& m)
{
    return m.cwiseAbs().maxCoeff();
}
} // namespace

TEST_CASE("collision integral structure")
{
    std::mt19937 rng(3);
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.4, 9);
    CIState psi = random_ci(2, 9, rng);

    SUBCASE("traceless and hermitian by construction")
    {
        for (int o = 1; o <= 3; ++o) {
            BosonicOperator c = collision_integral(extract_rdm(psi, o + 1), spec, o);
            CHECK(std::abs(c.trace()) < 1e-12);
        }
    }

    SUBCASE("first-quantization conditional construction at o = 1")
    {
        BosonicOperator rho2 = extract_rdm(psi, 2);
        BosonicOperator fast = collision_integral(rho2, spec, 1);
        BosonicOperator dense = firstq::collision_first_quantized(rho2, spec);
        fast -= dense;
        CHECK(max_abs(fast.to_matrix()) < 1e-12);
    }

    SUBCASE("top of the full hierarchy carries no collision term")
    {
        // (N - o) = 0 at o = N
        CIState small = random_ci(2, 3, rng);
        ModelSpec spec3 = bose_hubbard_dimer_lambda(1.0, 0.4, 3);
        // argument order o+1 = 4 exceeds N; the operator itself must not
        // be requested in that regime
        CHECK_THROWS_AS(collision_integral(extract_rdm(small, 3), spec3, 3), Error);
        (void)small;
    }
}

TEST_CASE("hierarchy right-hand side")
{
    std::mt19937 rng(5);
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.4, 9);
    CIState psi = random_ci(2, 9, rng);
    const int obar = 4;
    std::vector<BosonicOperator> rhos;
    for (int o = 1; o <= obar; ++o)
        rhos.push_back(extract_rdm(psi, o));
    std::vector<Matrix> hams;
    for (int o = 1; o <= obar; ++o)
        hams.push_back(sector_hamiltonian(spec, o).to_matrix());
    auto derivs = hierarchy_rhs(rhos, spec, hams);

    SUBCASE("derivatives are traceless")
    {
        for (const auto& d : derivs)
            CHECK(std::abs(d.trace()) < 1e-12);
    }

    SUBCASE("compatibility is conserved by the flow")
    {
        // tr_1 of the derivative at order o+1 equals the derivative at o
        for (int o = 1; o < obar; ++o) {
            BosonicOperator lhs = partial_trace(derivs[static_cast<std::size_t>(o)], 1);
            lhs -= derivs[static_cast<std::size_t>(o - 1)];
            CHECK(trace_norm(lhs) < 1e-9);
        }
    }

    SUBCASE("exact top order reduces to the pure von-Neumann equation")
    {
        ModelSpec full = bose_hubbard_dimer_lambda(1.0, 0.4, 4);
        CIState small = random_ci(2, 4, rng);
        std::vector<BosonicOperator> fam;
        std::vector<Matrix> h4;
        for (int o = 1; o <= 4; ++o) {
            fam.push_back(extract_rdm(small, o));
            h4.push_back(sector_hamiltonian(full, o).to_matrix());
        }
        auto d4 = hierarchy_rhs(fam, full, h4);
        Matrix rho = fam[3].to_matrix();
        Matrix von = Complex(0.0, -1.0) * (h4[3] * rho - rho * h4[3]);
        CHECK(max_abs(d4[3].to_matrix() - von) < 1e-12);
    }
}

TEST_CASE("np rates")
{
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
    CIState psi0 = permanent_state({10, 0}, 10);

    SUBCASE("rates match finite differences of the exact natural populations")
    {
        IntegratorOptions opts;
        opts.rtol = 1e-12;
        opts.atol = 1e-14;
        const double t0 = 7.0, dt = 1e-4;
        std::vector<CIState> states;
        opts.output_dt = dt;
        exact_propagate(spec, psi0, t0 + dt, opts, [&](const CISample& s) {
            if (std::abs(s.t - (t0 - dt)) < 1e-9 || std::abs(s.t - t0) < 1e-9 ||
                std::abs(s.t - (t0 + dt)) < 1e-9)
                states.push_back(s.state);
        });
        REQUIRE(states.size() == 3);
        const int o = 2;
        BosonicOperator rho = extract_rdm(states[1], o);
        BosonicOperator coll = collision_integral(extract_rdm(states[1], o + 1), spec, o);
        auto rates = np_derivative(rho, coll);

        EigResult before = eigh(extract_rdm(states[0], o));
        EigResult after = eigh(extract_rdm(states[2], o));
        for (std::size_t r = 0; r < rates.size(); ++r) {
            if (rates[r].degenerate)
                continue;
            const double fd =
                (after.eigenvalues(static_cast<Eigen::Index>(r)) -
                 before.eigenvalues(static_cast<Eigen::Index>(r))) /
                (2.0 * dt);
            CHECK(rates[r].rate == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
        }
    }

    SUBCASE("diagonal two-body matrices drive no one-body rate")
    {
        // a rho_2 diagonal in the NO product basis leaves the 1-RDM NPs
        // frozen
        BosonicOperator rho1 = extract_rdm(psi0, 1);
        BosonicOperator rho2_diag = closure({rho1}, 1e-8);
        BosonicOperator coll = collision_integral(rho2_diag, spec, 1);
        auto rates = np_derivative(rho1, coll);
        for (const auto& r : rates)
            CHECK(std::abs(r.rate) < 1e-12);
    }

    SUBCASE("degenerate blocks are flagged")
    {
        CIState noon = noon_state(2, 10, 0.0);
        BosonicOperator rho1 = extract_rdm(noon, 1); // eigenvalues (1/2, 1/2)
        BosonicOperator coll(2, 1);
        auto rates = np_derivative(rho1, coll);
        CHECK(rates[0].degenerate);
        CHECK(rates[1].degenerate);
        CHECK(rates[0].block == rates[1].block);
    }
}

TEST_CASE("packing round trip")
{
    std::mt19937 rng(7);
    CIState psi = random_ci(2, 6, rng);
    std::vector<BosonicOperator> rhos;
    for (int o = 1; o <= 3; ++o)
        rhos.push_back(extract_rdm(psi, o));
    std::vector<int> orders = {1, 2, 3};
    Vector y(static_cast<Eigen::Index>(packed_size(2, orders)));
    pack_state(rhos, y);
    std::vector<BosonicOperator> back = {BosonicOperator(2, 1), BosonicOperator(2, 2),
                                         BosonicOperator(2, 3)};
    unpack_state(y, back);
    for (int o = 0; o < 3; ++o) {
        BosonicOperator d = back[static_cast<std::size_t>(o)];
        d -= rhos[static_cast<std::size_t>(o)];
        CHECK(max_abs(d.to_matrix()) == 0.0);
    }
}

TEST_CASE("short propagation conserves the invariants")
{
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
    CIState psi0 = permanent_state({10, 0}, 10);
    HierarchyState initial = initial_hierarchy(psi0, 3);
    PropagateOptions opts;
    opts.integrator.output_dt = 1.0;

    double e0 = 0.0;
    double worst_trace = 0.0, worst_energy = 0.0, worst_compat = 0.0;
    auto sink = [&](const HierarchySample& s) {
        for (int o = 1; o <= 3; ++o)
            worst_trace = std::max(worst_trace, std::abs(s.state->rho(o).trace() - 1.0));
        const double e = energy(s.state->rho(1), s.state->rho(2), spec);
        if (s.t == 0.0)
            e0 = e;
        worst_energy = std::max(worst_energy, std::abs(e - e0));
        for (int o = 1; o < 3; ++o) {
            BosonicOperator d = partial_trace(s.state->rho(o + 1), 1);
            d -= s.state->rho(o);
            worst_compat = std::max(worst_compat, trace_norm(d));
        }
    };
    PropagateResult r = propagate(spec, initial, 10.0, opts, sink);
    CHECK(r.status == RunStatus::ok);
    CHECK(worst_trace < 1e-10);
    CHECK(worst_energy < 1e-8);
    CHECK(worst_compat < 1e-8);
}

TEST_CASE("gauge choice leaves the trajectory invariant")
{
    // fixed-basis gauge versus the interaction picture with g = h; after
    // the frame rotation both must give the same RDMs
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 8);
    CIState psi0 = permanent_state({8, 0}, 8);
    HierarchyState initial = initial_hierarchy(psi0, 2);

    PropagateOptions opts;
    opts.integrator.output_dt = 2.0;
    opts.integrator.rtol = 1e-10;
    opts.integrator.atol = 1e-12;

    std::vector<std::vector<BosonicOperator>> plain;
    propagate(spec, initial, 20.0, opts,
              [&](const HierarchySample& s) { plain.push_back(s.state->rhos); });

    ModelSpec gauged = spec;
    gauged.gauge = Gauge::one_body;
    std::vector<std::vector<BosonicOperator>> rotated;
    std::vector<double> times;
    propagate(gauged, initial, 20.0, opts, [&](const HierarchySample& s) {
        rotated.push_back(s.state->rhos);
        times.push_back(s.t);
    });

    REQUIRE(plain.size() == rotated.size());
    Eigen::SelfAdjointEigenSolver<Matrix> es(spec.h);
    for (std::size_t i = 0; i < plain.size(); ++i) {
        Eigen::VectorXcd phases =
            (Complex(0.0, 1.0) * times[i] * es.eigenvalues().cast<Complex>()).array().exp();
        Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
        for (int o = 1; o <= 2; ++o) {
            BosonicOperator back = rotate_basis(rotated[i][static_cast<std::size_t>(o - 1)], u);
            back -= plain[i][static_cast<std::size_t>(o - 1)];
            CHECK(trace_norm(back) < 1e-7);
        }
    }
}

TEST_CASE("symmetry conservation in the even-odd frame")
{
    // parity-symmetric initial state propagated in the parity eigenbasis
    auto site = bose_hubbard_dimer_lambda(1.0, 0.5, 8);
    Matrix u(2, 2);
    u << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    ModelSpec even_odd = site.rotated(u);
    even_odd.symmetry.enabled = true;

    Eigen::VectorXcd orb(2);
    orb << 1.0, 0.0;
    CIState psi0 = product_bec(2, 8, orb);
    HierarchyState initial = initial_hierarchy(psi0, 2);
    PropagateOptions opts;
    opts.integrator.output_dt = 2.0;

    double worst = 0.0;
    propagate(even_odd, initial, 20.0, opts, [&](const HierarchySample& s) {
        for (int o = 1; o <= 2; ++o)
            worst = std::max(worst,
                             symmetry_commutator_norm(s.state->rho(o), even_odd.symmetry));
    });
    CHECK(worst < 1e-7);
}

TEST_CASE("state validation catches corrupted families")
{
    CIState psi = permanent_state({6, 0}, 6);
    HierarchyState state = initial_hierarchy(psi, 2);
    state.validate();
    state.rho(2).add(0, 0, 0.5);
    CHECK_THROWS_AS(state.validate(), Error);
}
