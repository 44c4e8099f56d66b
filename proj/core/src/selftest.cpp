#include "bbh/selftest.hpp"

#include <iomanip>
#include <iostream>
#include <random>

#include "bbh/bbgky.hpp"
#include "bbh/firstq.hpp"
#include "bbh/oracle.hpp"

namespace bbh {

namespace {

BosonicOperator random_hermitian(int m, int o, std::mt19937& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    BosonicOperator b(m, o);
    for (std::size_t r = 0; r < b.dim(); ++r) {
        for (std::size_t c = 0; c < r; ++c)
            b.set(r, c, Complex(dist(rng), dist(rng)));
        b.set(r, r, dist(rng));
    }
    return b;
}

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

Matrix random_unitary(int m, std::mt19937& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            g(i, j) = Complex(dist(rng), dist(rng));
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    // fix the phases for a proper Haar-like draw
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < m; ++i) {
        const Complex d = r(i, i);
        q.col(i) *= std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0, 0.0);
    }
    return q;
}

double max_abs(const Matrix& a)
{
    return a.cwiseAbs().maxCoeff();
}

struct Harness {
    std::vector<SelftestResult> results;

    void record(const std::string& name, double worst, double tol)
    {
        results.push_back({name, worst, tol, worst <= tol});
    }
};

void check_uid(Harness& h)
{
    std::mt19937 rng(12001);
    double worst_cf = 0.0, worst_traces = 0.0, worst_idem = 0.0, worst_cov = 0.0,
           worst_identity = 0.0;
    for (int m = 2; m <= 4; ++m) {
        for (int o = 2; o <= (m <= 3 ? 4 : 3); ++o) {
            BosonicOperator b = random_hermitian(m, o, rng);
            UidSplit s = uid_split(b);
            worst_cf = std::max(worst_cf, trace_norm(partial_trace(s.irr, 1)));
            for (int k = 1; k <= o; ++k) {
                BosonicOperator diff = partial_trace(s.red, k);
                diff -= partial_trace(b, k);
                worst_traces = std::max(worst_traces, trace_norm(diff));
            }
            worst_idem = std::max(worst_idem, trace_norm(uid_split(s.red).irr));
            // unitary covariance
            Matrix u = random_unitary(m, rng);
            UidSplit rs = uid_split(rotate_basis(b, u));
            BosonicOperator dred = rotate_basis(s.red, u);
            dred -= rs.red;
            worst_cov = std::max(worst_cov, trace_norm(dred));
            // the bosonic identity is fully determined by its traces
            UidSplit si = uid_split(BosonicOperator::identity(m, o));
            worst_identity = std::max(worst_identity, trace_norm(si.irr));
        }
    }
    h.record("uid contraction-free component", worst_cf, 1e-10);
    h.record("uid trace reproduction", worst_traces, 1e-10);
    h.record("uid idempotence", worst_idem, 1e-10);
    h.record("uid unitary covariance", worst_cov, 1e-10);
    h.record("uid of bosonic identity is reducible", worst_identity, 1e-10);
}

void check_raise_trace_identity(Harness& h)
{
    std::mt19937 rng(12002);
    double worst = 0.0;
    for (int m = 2; m <= 4; ++m)
        for (int o = 1; o <= (m <= 3 ? 4 : 3); ++o) {
            BosonicOperator b = random_hermitian(m, o, rng);
            BosonicOperator lhs = partial_trace(raise(b, 1), 1);
            BosonicOperator rhs = b;
            rhs *= (2.0 * o + m) / ((o + 1.0) * (o + 1.0));
            if (o >= 1) {
                BosonicOperator tail = raise(partial_trace(b, 1), 1);
                tail *= (static_cast<double>(o) / (o + 1.0)) * (static_cast<double>(o) / (o + 1.0));
                rhs += tail;
            }
            lhs -= rhs;
            worst = std::max(worst, max_abs(lhs.to_matrix()));
        }
    h.record("partial trace of raising identity", worst, 1e-10);
}

void check_join_dense(Harness& h)
{
    std::mt19937 rng(12003);
    double worst = 0.0;
    for (int m = 2; m <= 3; ++m)
        for (int o1 = 1; o1 <= 2; ++o1)
            for (int o2 = o1; o2 <= 2; ++o2) {
                if (fock_dimension(m, o1 + o2) > 100)
                    continue;
                BosonicOperator a = random_hermitian(m, o1, rng);
                BosonicOperator b = random_hermitian(m, o2, rng);
                BosonicOperator fast = join(a, b);
                fast -= firstq::join(a, b);
                worst = std::max(worst, max_abs(fast.to_matrix()));
            }
    h.record("join vs dense symmetrized tensor product", worst, 1e-9);
}

void check_cluster_dense(Harness& h)
{
    std::mt19937 rng(12004);
    double worst = 0.0;
    for (int m = 2; m <= 3; ++m) {
        const int N = 5;
        CIState psi = random_ci(m, N, rng);
        std::vector<BosonicOperator> rhos;
        for (int o = 1; o <= 4; ++o)
            rhos.push_back(extract_rdm(psi, o));
        ClusterSet set = compute_clusters(rhos, 1e-8);
        std::vector<BosonicOperator> dense = firstq::clusters(rhos);
        for (int o = 1; o <= 4; ++o) {
            BosonicOperator diff = set.cluster(o);
            diff -= dense[static_cast<std::size_t>(o - 1)];
            worst = std::max(worst, max_abs(diff.to_matrix()));
        }
    }
    h.record("cluster recursion vs dense expansion", worst, 1e-9);
}

void check_collision_contraction_free(Harness& h)
{
    std::mt19937 rng(12005);
    double worst = 0.0;
    for (int m = 2; m <= 3; ++m) {
        ModelSpec spec;
        spec.m = m;
        spec.N = 7;
        spec.h = Matrix::Zero(m, m);
        // random hermitian interaction tensor with the bosonic exchange
        // symmetry
        std::normal_distribution<double> dist(0.0, 1.0);
        spec.v.assign(static_cast<std::size_t>(m) * m * m * m, Complex(0.0, 0.0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                for (int q = 0; q < m; ++q)
                    for (int p = 0; p < m; ++p) {
                        Complex val(dist(rng), dist(rng));
                        auto at = [&](int a, int b, int c, int d) -> Complex& {
                            return spec.v[static_cast<std::size_t>(((a * m + b) * m + c) * m + d)];
                        };
                        // symmetrize: exchange + hermiticity orbit
                        at(i, j, q, p) += val;
                        at(j, i, p, q) += val;
                        at(q, p, i, j) += std::conj(val);
                        at(p, q, j, i) += std::conj(val);
                    }
        spec.validate();
        for (int o = 1; o <= 3; ++o) {
            BosonicOperator arg = uid_split(random_hermitian(m, o + 1, rng)).irr;
            BosonicOperator coll = collision_integral(arg, spec, o);
            worst = std::max(worst, std::abs(coll.trace()));
            if (o >= 2)
                worst = std::max(worst, trace_norm(partial_trace(coll, 1)));
        }
    }
    h.record("collision integral keeps contraction-free arguments contraction-free", worst, 1e-10);
}

void check_fixtures(Harness& h)
{
    std::mt19937 rng(12006);
    // product BEC: all clusters vanish
    double worst_bec = 0.0;
    for (int m = 2; m <= 3; ++m) {
        Eigen::VectorXcd orb(m);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (int i = 0; i < m; ++i)
            orb(i) = Complex(dist(rng), dist(rng));
        orb /= orb.norm();
        CIState bec = product_bec(m, 6, orb);
        std::vector<BosonicOperator> rhos;
        for (int o = 1; o <= 4; ++o)
            rhos.push_back(extract_rdm(bec, o));
        ClusterSet set = compute_clusters(rhos, 1e-8);
        for (int o = 2; o <= 4; ++o)
            worst_bec = std::max(worst_bec, trace_norm(set.cluster(o)));
        // analytic product RDMs
        for (int o = 1; o <= 4; ++o) {
            BosonicOperator diff = rhos[static_cast<std::size_t>(o - 1)];
            diff -= bec_rdm(m, o, orb);
            worst_bec = std::max(worst_bec, max_abs(diff.to_matrix()));
        }
    }
    h.record("product BEC has vanishing clusters", worst_bec, 1e-10);

    // tr_1(c_2) = (rho_1 - rho_1^2)/2
    double worst_c2 = 0.0;
    for (int m = 2; m <= 3; ++m) {
        CIState psi = random_ci(m, 6, rng);
        BosonicOperator rho1 = extract_rdm(psi, 1);
        BosonicOperator rho2 = extract_rdm(psi, 2);
        ClusterSet set = compute_clusters({rho1, rho2}, 1e-8);
        Matrix r1 = rho1.to_matrix();
        Matrix expect = 0.5 * (r1 - r1 * r1);
        Matrix got = partial_trace(set.cluster(2), 1).to_matrix();
        worst_c2 = std::max(worst_c2, max_abs(got - expect));
    }
    h.record("partial trace of the two-particle cluster", worst_c2, 1e-10);

    // NOON state RDMs
    double worst_noon = 0.0;
    {
        const int N = 10;
        CIState noon = noon_state(2, N, 0.7);
        for (int o = 1; o <= 9; o += 4) {
            BosonicOperator diff = extract_rdm(noon, o);
            diff -= noon_rdm(2, N, o, 0.7);
            worst_noon = std::max(worst_noon, max_abs(diff.to_matrix()));
        }
        BosonicOperator top = extract_rdm(noon, N);
        top -= noon_rdm(2, N, N, 0.7);
        worst_noon = std::max(worst_noon, max_abs(top.to_matrix()));
    }
    h.record("NOON state reduced density matrices", worst_noon, 1e-10);

    // permanent RDMs
    double worst_perm = 0.0;
    {
        OccupationVector k = {3, 2, 2};
        CIState perm = permanent_state(k, 7);
        for (int o = 1; o <= 3; ++o) {
            BosonicOperator diff = extract_rdm(perm, o);
            diff -= permanent_rdm(k, 7, o);
            worst_perm = std::max(worst_perm, max_abs(diff.to_matrix()));
        }
    }
    h.record("permanent-state reduced density matrices", worst_perm, 1e-10);
}

} // namespace

std::vector<SelftestResult> run_selftest()
{
    Harness h;
    check_uid(h);
    check_raise_trace_identity(h);
    check_join_dense(h);
    check_cluster_dense(h);
    check_collision_contraction_free(h);
    check_fixtures(h);
    return h.results;
}

bool report_selftest(std::ostream& os)
{
    auto results = run_selftest();
    bool all = true;
    for (const auto& r : results) {
        os << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(64) << r.name
           << " worst " << std::scientific << std::setprecision(2) << r.worst << "  tol "
           << r.tol << "\n";
        all = all && r.pass;
    }
    return all;
}

} // namespace bbh
