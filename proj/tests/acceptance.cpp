// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria. Criterion numbers can be passed as arguments
// to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bbh/bbgky.hpp"
#include "bbh/oracle.hpp"
#include "bbh/representability.hpp"
#include "bbh/selftest.hpp"

using namespace bbh;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail)
{
    std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++g_failures;
}

std::vector<CIState> oracle_on_grid(const ModelSpec& spec, const CIState& psi0, double t_final,
                                    const IntegratorOptions& opts)
{
    std::vector<CIState> out;
    exact_propagate(spec, psi0, t_final, opts, [&](const CISample& s) { out.push_back(s.state); });
    return out;
}

// --- criterion 1: exact-closure equivalence --------------------------------

void criterion_1()
{
    Timer timer;
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 6);
    CIState psi0 = permanent_state({6, 0}, 6);
    IntegratorOptions iopts;
    iopts.rtol = 1e-10;
    iopts.atol = 1e-12;
    iopts.output_dt = 0.5;
    auto exact = oracle_on_grid(spec, psi0, 20.0, iopts);

    HierarchyState initial = initial_hierarchy(psi0, 6);
    PropagateOptions popts;
    popts.integrator = iopts;
    double worst = 0.0;
    std::size_t idx = 0;
    propagate(spec, initial, 20.0, popts, [&](const HierarchySample& s) {
        for (int o = 1; o <= 3; ++o)
            worst = std::max(worst, trace_distance(s.state->rho(o), extract_rdm(exact[idx], o)));
        ++idx;
    });
    const double wall = timer.seconds();
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "exact-closure equivalence: max D(rho_o) = %.3e (< 1e-7), %.1f s (< 10 s)",
                  worst, wall);
    report(1, worst < 1e-7 && wall < 10.0, buf);
}

// --- criterion 2: conservation suite ----------------------------------------

void criterion_2()
{
    bool all = true;
    std::string detail = "conservation suite:";
    for (int obar : {2, 3, 4}) {
        Timer timer;
        auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
        CIState psi0 = permanent_state({10, 0}, 10);
        HierarchyState initial = initial_hierarchy(psi0, obar);
        PropagateOptions popts;
        popts.integrator.output_dt = 0.5;
        popts.integrator.rtol = 1e-9;
        popts.integrator.atol = 1e-12;

        double worst_trace = 0.0, worst_energy = 0.0, worst_compat = 0.0;
        double e0 = 0.0;
        propagate(spec, initial, 50.0, popts, [&](const HierarchySample& s) {
            for (int o = 1; o <= obar; ++o)
                worst_trace = std::max(worst_trace, std::abs(s.state->rho(o).trace() - 1.0));
            const double e = energy(s.state->rho(1), s.state->rho(2), spec);
            if (s.t == 0.0)
                e0 = e;
            worst_energy = std::max(worst_energy, std::abs(e - e0) / std::max(std::abs(e0), 1.0));
            for (int o = 1; o < obar; ++o) {
                BosonicOperator d = partial_trace(s.state->rho(o + 1), 1);
                d -= s.state->rho(o);
                worst_compat = std::max(worst_compat, trace_norm(d));
            }
        });

        // parity-symmetric companion run in the even/odd frame
        Matrix u(2, 2);
        u << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0),
            -1.0 / std::sqrt(2.0);
        ModelSpec even_odd = spec.rotated(u);
        even_odd.symmetry.enabled = true;
        Eigen::VectorXcd orb(2);
        orb << 1.0, 0.0;
        CIState bec = product_bec(2, 10, orb);
        HierarchyState sym_initial = initial_hierarchy(bec, obar);
        double worst_sym = 0.0;
        propagate(even_odd, sym_initial, 50.0, popts, [&](const HierarchySample& s) {
            for (int o = 1; o <= obar; ++o)
                worst_sym = std::max(
                    worst_sym, symmetry_commutator_norm(s.state->rho(o), even_odd.symmetry));
        });

        const double wall = timer.seconds();
        const bool ok = worst_trace < 1e-8 && worst_energy < 1e-6 && worst_compat < 1e-6 &&
                        worst_sym < 1e-7 && wall < 60.0;
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      " [obar=%d: tr %.1e, E %.1e, compat %.1e, sym %.1e, %.0f s]", obar,
                      worst_trace, worst_energy, worst_compat, worst_sym, wall);
        detail += buf;
        all = all && ok;
    }
    report(2, all, detail);
}

// --- criterion 3: stationary natural populations at obar = 1 ----------------

void criterion_3()
{
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
    CIState psi0 = permanent_state({7, 3}, 10);
    HierarchyState initial = initial_hierarchy(psi0, 1);
    PropagateOptions popts;
    popts.integrator.output_dt = 1.0;
    popts.integrator.rtol = 1e-11;
    popts.integrator.atol = 1e-13;

    Eigen::VectorXd np0;
    double worst = 0.0;
    propagate(spec, initial, 100.0, popts, [&](const HierarchySample& s) {
        EigResult e = eigh(s.state->rho(1));
        if (s.t == 0.0)
            np0 = e.eigenvalues;
        worst = std::max(worst, (e.eigenvalues - np0).cwiseAbs().maxCoeff());
    });
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "stationary NPs at obar=1: max |lambda(t) - lambda(0)| = %.3e (< 1e-9)", worst);
    report(3, worst < 1e-9, buf);
}

// --- criterion 4: short-time accuracy ordering ------------------------------

void criterion_4()
{
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
    CIState psi0 = permanent_state({10, 0}, 10);
    IntegratorOptions iopts;
    iopts.rtol = 1e-10;
    iopts.atol = 1e-12;
    iopts.output_dt = 20.0;
    auto exact = oracle_on_grid(spec, psi0, 20.0, iopts);

    std::map<int, double> dist;
    for (int obar : {2, 3, 4}) {
        HierarchyState initial = initial_hierarchy(psi0, obar);
        PropagateOptions popts;
        popts.integrator = iopts;
        propagate(spec, initial, 20.0, popts, [&](const HierarchySample& s) {
            if (std::abs(s.t - 20.0) < 1e-9)
                dist[obar] = trace_distance(s.state->rho(1), extract_rdm(exact.back(), 1));
        });
    }
    // regression values frozen from the in-repo oracle
    const std::map<int, double> frozen = {
        {2, 4.56920990758e-3}, {3, 1.47209185442e-4}, {4, 1.35078560545e-5}};
    bool ok = dist[3] < dist[2] && dist[4] < dist[3];
    for (auto [obar, expect] : frozen)
        ok = ok && std::abs(dist[obar] - expect) < 0.02 * expect;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "short-time accuracy ordering: D1(20) = %.4e > %.4e > %.4e, regression ok",
                  dist[2], dist[3], dist[4]);
    report(4, ok, buf);
}

// --- criterion 5: instability phenomenology ---------------------------------

void criterion_5()
{
    bool all = true;
    std::string detail = "instability phenomenology:";
    double imbalance_onset = -1.0;
    for (int obar : {2, 3, 4}) {
        auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
        CIState psi0 = permanent_state({10, 0}, 10);
        HierarchyState initial = initial_hierarchy(psi0, obar);
        PropagateOptions popts;
        popts.integrator.output_dt = 0.25;
        popts.integrator.rtol = 1e-10;
        popts.integrator.atol = 1e-13;

        RepresentabilityReport report_;
        report_.epsilon = -1e-10;
        propagate(spec, initial, 130.0, popts, [&](const HierarchySample& s) {
            report_.check(s.state->rhos, spec.N, s.t);
            if (obar == 2 && imbalance_onset < 0.0) {
                const auto& rho1 = s.state->rho(1);
                // a genuine violation, not the initial |N,0> at rounding
                // distance from one
                if (std::abs((rho1(0, 0) - rho1(1, 1)).real()) > 1.000001)
                    imbalance_onset = s.t;
            }
        });
        // t_neg(o) non-increasing in o
        bool mono = true;
        for (int o = 1; o <= obar; ++o)
            mono = mono && report_.t_neg.count(o) == 1;
        if (mono)
            for (int o = 1; o < obar; ++o)
                mono = mono && report_.t_neg.at(o) >= report_.t_neg.at(o + 1) - 1e-9;
        char buf[200];
        std::string ts;
        for (int o = 1; o <= obar; ++o)
            ts += (report_.t_neg.count(o) ? std::to_string(report_.t_neg.at(o)).substr(0, 5)
                                          : std::string("none")) +
                  (o < obar ? "," : "");
        std::snprintf(buf, sizeof buf, " [obar=%d t_neg(1..%d)=(%s) %s]", obar, obar, ts.c_str(),
                      mono ? "monotone" : "NOT monotone");
        detail += buf;
        all = all && mono;
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, " [obar=2 |imbalance|>1 at t=%.1f (< 120)]", imbalance_onset);
    detail += buf;
    all = all && imbalance_onset > 0.0 && imbalance_onset < 120.0;
    report(5, all, detail);
}

// --- criterion 6: EOM-correction stabilization ------------------------------

struct DecayWindowStats {
    int windows = 0;
    double median_slope = 0.0;
};

DecayWindowStats decay_slopes(const std::vector<double>& ts, const std::vector<double>& vals,
                              double epsilon)
{
    // maximal monotone-recovery runs below the threshold; each one starts
    // at a local minimum and relaxes toward the threshold
    std::vector<double> slopes;
    std::size_t i = 0;
    const std::size_t n = vals.size();
    while (i < n) {
        if (vals[i] >= epsilon) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && vals[j + 1] < epsilon && vals[j + 1] > vals[j])
            ++j;
        if (j - i + 1 >= 25 && vals[i] / vals[j] >= 1.25 && vals[i] < 1.2 * epsilon) {
            double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
            const double En = static_cast<double>(j - i + 1);
            for (std::size_t k = i; k <= j; ++k) {
                const double x = ts[k];
                const double y = std::log(-vals[k]);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            slopes.push_back((En * sxy - sx * sy) / (En * sxx - sx * sx));
        }
        i = j + 1;
    }
    DecayWindowStats stats;
    stats.windows = static_cast<int>(slopes.size());
    if (!slopes.empty()) {
        std::sort(slopes.begin(), slopes.end());
        stats.median_slope = slopes[slopes.size() / 2];
    }
    return stats;
}

void criterion_6()
{
    Timer timer;
    const double eta = 10.0;
    const double epsilon = -1e-10;
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
    CIState psi0 = permanent_state({10, 0}, 10);
    HierarchyState initial = initial_hierarchy(psi0, 2);

    PropagateOptions popts;
    popts.mode = CorrectionMode::eom;
    popts.eta = eta;
    popts.epsilon = epsilon;
    popts.integrator.rtol = 1e-12;
    popts.integrator.atol = 1e-14;
    popts.integrator.output_dt = 0.5;

    double min_lambda = 0.0, min_xi = 0.0, worst_energy = 0.0, e0 = 0.0;
    PropagateResult run = propagate(spec, initial, 1000.0, popts, [&](const HierarchySample& s) {
        EigResult e2 = eigh(s.state->rho(2));
        min_lambda = std::min(min_lambda, e2.eigenvalues(0));
        KMatrix k = k_matrix(s.state->rho(1), s.state->rho(2), spec.N);
        min_xi = std::min(min_xi, eigh(k.elements).eigenvalues(0));
        const double e = energy(s.state->rho(1), s.state->rho(2), spec);
        if (s.t == 0.0)
            e0 = e;
        worst_energy = std::max(worst_energy, std::abs(e - e0) / std::max(std::abs(e0), 1.0));
    });

    // finely sampled segment across the first deep defect events for the
    // damping-slope measurement
    PropagateOptions fine = popts;
    fine.integrator.output_dt = 0.001;
    std::vector<double> ts, lam, xi;
    propagate(spec, initial, 80.0, fine, [&](const HierarchySample& s) {
        ts.push_back(s.t);
        lam.push_back(eigh(s.state->rho(2)).eigenvalues(0));
        xi.push_back(
            eigh(k_matrix(s.state->rho(1), s.state->rho(2), spec.N).elements).eigenvalues(0));
    });
    DecayWindowStats slam = decay_slopes(ts, lam, epsilon);
    DecayWindowStats sxi = decay_slopes(ts, xi, epsilon);

    const double wall = timer.seconds();
    const bool ok = run.status == RunStatus::ok && run.t_reached >= 1000.0 - 1e-6 &&
                    min_lambda >= 5.0 * epsilon && min_xi >= 5.0 * epsilon &&
                    worst_energy < 1e-6 && slam.windows >= 3 && sxi.windows >= 3 &&
                    std::abs(slam.median_slope + eta) < 0.05 * eta &&
                    std::abs(sxi.median_slope + eta) < 0.05 * eta && wall < 600.0;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "eom stabilization to t=1000: min lam %.2e, min xi %.2e (>= %.1e), dE %.1e, "
                  "decay slopes %.3f/%.3f over %d/%d windows (eta = %g +- 5%%), %.0f s (< 600)",
                  min_lambda, min_xi, 5.0 * epsilon, worst_energy, slam.median_slope,
                  sxi.median_slope, slam.windows, sxi.windows, eta, wall);
    report(6, ok, buf);
}

// --- criterion 7: purification failure reproduction -------------------------

void criterion_7()
{
    auto spec = bose_hubbard_dimer_lambda(1.0, 0.1, 10);
    CIState psi0 = permanent_state({10, 0}, 10);
    HierarchyState initial = initial_hierarchy(psi0, 2);
    PropagateOptions popts;
    popts.mode = CorrectionMode::purify;
    popts.max_iter = 500;
    popts.integrator.output_dt = 0.1;

    double first_cap = -1.0;
    int max_iters = 0;
    popts.correction_log = [&](const CorrectionLogEntry& e) {
        max_iters = std::max(max_iters, e.iterations);
        if (e.status == "max_iter" && first_cap < 0.0)
            first_cap = e.t;
    };
    propagate(spec, initial, 115.0, popts, nullptr);

    const bool ok = first_cap >= 70.0 && first_cap <= 110.0;
    char buf[256];
    if (first_cap >= 0.0)
        std::snprintf(buf, sizeof buf,
                      "purification iteration cap first hit at t = %.1f (expected in [70, 110])",
                      first_cap);
    else
        std::snprintf(buf, sizeof buf,
                      "purification never hit the 500-iteration cap up to t = 115 (max %d "
                      "iterations); expected a convergence failure in [70, 110] - see the "
                      "decisions ledger for the analysis",
                      max_iters);
    report(7, ok, buf);
}

// --- criterion 8: property suites --------------------------------------------

void criterion_8()
{
    Timer timer;
    auto results = run_selftest();
    bool all = true;
    double worst_margin = 0.0;
    for (const auto& r : results) {
        all = all && r.pass;
        worst_margin = std::max(worst_margin, r.worst / r.tol);
    }
    const double wall = timer.seconds();
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "property suites: %zu checks, worst margin %.1e of tolerance, %.1f s (< 30)",
                  results.size(), worst_margin, wall);
    report(8, all && wall < 30.0, buf);
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<int> which;
    for (int i = 1; i < argc; ++i)
        which.push_back(std::atoi(argv[i]));
    auto wanted = [&](int c) {
        return which.empty() || std::find(which.begin(), which.end(), c) != which.end();
    };

    if (wanted(1))
        criterion_1();
    if (wanted(2))
        criterion_2();
    if (wanted(3))
        criterion_3();
    if (wanted(4))
        criterion_4();
    if (wanted(5))
        criterion_5();
    if (wanted(6))
        criterion_6();
    if (wanted(7))
        criterion_7();
    if (wanted(8))
        criterion_8();

    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
