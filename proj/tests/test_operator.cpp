#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "bbh/cluster.hpp"
#include "bbh/firstq.hpp"
#include "bbh/oracle.hpp"

using namespace bbh;

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

BosonicOperator random_density(int m, int o, std::mt19937& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    const auto d = fock_dimension(m, o);
    Matrix g(d, d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c)
            g(r, c) = Complex(dist(rng), dist(rng));
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return BosonicOperator::from_matrix(m, o, rho);
}

Matrix random_unitary(int m, std::mt19937& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            g(i, j) = Complex(dist(rng), dist(rng));
    return Eigen::HouseholderQR<Matrix>(g).householderQ();
}

double max_abs(const Matrix& m)
{
    return m.cwiseAbs().maxCoeff();
}

BosonicOperator ketbra(int m, int o, const OccupationVector& n)
{
    auto basis = FockBasis::make(m, o);
    BosonicOperator b(m, o);
    const std::size_t r = basis->rank(n);
    b.set(r, r, 1.0);
    return b;
}

} // namespace

TEST_CASE("partial trace basics")
{
    // tr_1(|1,1><1,1|) = (|1,0><1,0| + |0,1><0,1|)/2
    BosonicOperator b = ketbra(2, 2, {1, 1});
    BosonicOperator t = partial_trace(b, 1);
    CHECK(t(0, 0) == Complex(0.5, 0.0));
    CHECK(t(1, 1) == Complex(0.5, 0.0));
    CHECK(std::abs(t(1, 0)) == 0.0);
    // ... matching the brute-force first-quantization trace
    BosonicOperator dense = firstq::partial_trace(b, 1);
    dense -= t;
    CHECK(max_abs(dense.to_matrix()) < 1e-14);

    // tr_o(B) = tr(B) |0><0|
    std::mt19937 rng(3);
    BosonicOperator r = random_hermitian(3, 3, rng);
    BosonicOperator full = partial_trace(r, 3);
    CHECK(full.dim() == 1);
    CHECK(full(0, 0).real() == doctest::Approx(r.trace()).epsilon(1e-12));

    CHECK_THROWS_AS(partial_trace(r, 4), Error);
    CHECK_THROWS_AS(partial_trace(r, 0), Error);
}

TEST_CASE("partial trace preserves the trace and matches the dense oracle")
{
    std::mt19937 rng(5);
    for (int m = 2; m <= 3; ++m)
        for (int o = 2; o <= 4; ++o) {
            BosonicOperator b = random_hermitian(m, o, rng);
            for (int k = 1; k < o; ++k) {
                BosonicOperator t = partial_trace(b, k);
                CHECK(t.trace() == doctest::Approx(b.trace()).epsilon(1e-12));
                if (o <= 3) {
                    BosonicOperator dense = firstq::partial_trace(b, k);
                    dense -= t;
                    CHECK(max_abs(dense.to_matrix()) < 1e-12);
                }
            }
        }
}

TEST_CASE("wavefunction compatibility ties the extraction paths together")
{
    std::mt19937 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    CIState psi;
    psi.m = 2;
    psi.N = 6;
    psi.amplitudes.resize(7);
    for (int i = 0; i < 7; ++i)
        psi.amplitudes(i) = Complex(dist(rng), dist(rng));
    psi.normalize();
    for (int o = 1; o <= 5; ++o) {
        BosonicOperator direct = extract_rdm(psi, o);
        BosonicOperator traced = partial_trace(extract_rdm(psi, o + 1), 1);
        traced -= direct;
        CHECK(trace_norm(traced) < 1e-12);
    }
}

TEST_CASE("raising")
{
    // R_1(|1,0><1,0|) = |2,0><2,0| + |1,1><1,1|/2
    BosonicOperator b = ketbra(2, 1, {1, 0});
    BosonicOperator r = raise(b, 1);
    auto basis = FockBasis::make(2, 2);
    CHECK(r(basis->rank({2, 0}), basis->rank({2, 0})).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r(basis->rank({1, 1}), basis->rank({1, 1})).real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(r(basis->rank({0, 2}), basis->rank({0, 2}))) < 1e-15);

    // direct evaluation of the ladder formula sum_r a+_r B a_r / (o+1)
    std::mt19937 rng(11);
    for (int m = 2; m <= 3; ++m) {
        BosonicOperator x = random_hermitian(m, 2, rng);
        BosonicOperator viajoin = raise(x, 1);
        auto b2 = FockBasis::make(m, 2);
        auto b3 = FockBasis::make(m, 3);
        Matrix ladder = Matrix::Zero(b3->dim(), b3->dim());
        for (std::size_t i = 0; i < b2->dim(); ++i)
            for (std::size_t j = 0; j < b2->dim(); ++j)
                for (int rr = 0; rr < m; ++rr) {
                    const auto ni = b2->state(i);
                    const auto nj = b2->state(j);
                    const double amp = std::sqrt((ni[rr] + 1.0) * (nj[rr] + 1.0)) / 3.0;
                    ladder(b2->raised_ranks(i)[rr], b2->raised_ranks(j)[rr]) += amp * x(i, j);
                }
        CHECK(max_abs(viajoin.to_matrix() - ladder) < 1e-12);
    }

    // raising the vacuum scalar gives the one-body unit operator
    BosonicOperator vac = BosonicOperator::vacuum_scalar(2, 1.0);
    BosonicOperator one = raise(vac, 1);
    CHECK(max_abs(one.to_matrix() - Matrix::Identity(2, 2)) < 1e-14);
}

TEST_CASE("join")
{
    // join(|1,0><1,0|, |1,0><1,0|) = 2 |2,0><2,0|
    BosonicOperator b = ketbra(2, 1, {1, 0});
    BosonicOperator j = join(b, b);
    CHECK(j(0, 0).real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(j(0, 0).imag() == 0.0);
    CHECK(j.trace() == doctest::Approx(2.0));

    // join(A, one-body identity)/(o+1) = raise(A, 1)
    std::mt19937 rng(13);
    BosonicOperator a = random_hermitian(2, 2, rng);
    BosonicOperator viaid = join(a, BosonicOperator::identity(2, 1));
    viaid *= 1.0 / 3.0;
    viaid -= raise(a, 1);
    CHECK(max_abs(viaid.to_matrix()) < 1e-13);

    CHECK_THROWS_AS(join(random_hermitian(2, 1, rng), random_hermitian(3, 1, rng)), Error);
}

TEST_CASE("uid split on small cases")
{
    std::mt19937 rng(17);
    for (int m = 2; m <= 4; ++m) {
        BosonicOperator b = random_hermitian(m, 3, rng);
        UidSplit s = uid_split(b);
        BosonicOperator sum = s.red;
        sum += s.irr;
        sum -= b;
        CHECK(max_abs(sum.to_matrix()) < 1e-12);
        CHECK(trace_norm(partial_trace(s.irr, 1)) < 1e-10);
        CHECK(trace_norm(uid_split(BosonicOperator::identity(m, 3)).irr) < 1e-10);
    }
}

TEST_CASE("trace distance")
{
    BosonicOperator a = ketbra(2, 2, {2, 0});
    CHECK(trace_distance(a, a) == doctest::Approx(0.0));
    BosonicOperator c = ketbra(2, 2, {0, 2});
    CHECK(trace_distance(a, c) == doctest::Approx(1.0));

    // |tr(A rho) - tr(A sigma)| <= 2 ||A||_1 D(rho, sigma)
    std::mt19937 rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        BosonicOperator rho = random_density(2, 2, rng);
        BosonicOperator sig = random_density(2, 2, rng);
        BosonicOperator obs = random_hermitian(2, 2, rng);
        const double lhs = std::abs(((obs.to_matrix() * rho.to_matrix()).trace() -
                                     (obs.to_matrix() * sig.to_matrix()).trace())
                                        .real());
        CHECK(lhs <= 2.0 * trace_norm(obs) * trace_distance(rho, sig) + 1e-12);
    }
}

TEST_CASE("trace norm")
{
    std::mt19937 rng(23);
    CHECK(trace_norm(random_density(2, 2, rng)) == doctest::Approx(1.0));
    CHECK(trace_norm(BosonicOperator(2, 2)) == doctest::Approx(0.0));
}

TEST_CASE("basis rotation")
{
    std::mt19937 rng(29);
    BosonicOperator b = random_hermitian(2, 3, rng);

    // identity rotation
    BosonicOperator same = rotate_basis(b, Matrix::Identity(2, 2));
    same -= b;
    CHECK(max_abs(same.to_matrix()) < 1e-12);

    Matrix u = random_unitary(2, rng);
    BosonicOperator rot = rotate_basis(b, u);
    // spectrum preserved
    EigResult e0 = eigh(b);
    EigResult e1 = eigh(rot);
    CHECK((e0.eigenvalues - e1.eigenvalues).cwiseAbs().maxCoeff() < 1e-11);
    // partial trace is basis-covariant
    BosonicOperator lhs = partial_trace(rot, 1);
    BosonicOperator rhs = rotate_basis(partial_trace(b, 1), u);
    lhs -= rhs;
    CHECK(max_abs(lhs.to_matrix()) < 1e-11);

    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(rotate_basis(b, bad), Error);
}

TEST_CASE("binary round trip")
{
    std::mt19937 rng(31);
    BosonicOperator b = random_hermitian(3, 2, rng);
    const std::string path = (std::filesystem::temp_directory_path() / "bbh_test_op.bop").string();
    save_operator(b, path);
    BosonicOperator back = load_operator(path);
    CHECK(back.modes() == b.modes());
    CHECK(back.order() == b.order());
    for (std::size_t i = 0; i < b.packed().size(); ++i)
        CHECK(back.packed()[i] == b.packed()[i]);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_operator("/nonexistent/file.bop"), Error);
}

TEST_CASE("two independent condensates carry the exchange-induced pair correlation")
{
    // |N_A, N_B>: trace norm of c_2 approaches lambda (1 - lambda)
    auto c2_norm = [](int na, int nb) {
        const int n = na + nb;
        std::vector<BosonicOperator> rhos = {permanent_rdm({na, nb}, n, 1),
                                             permanent_rdm({na, nb}, n, 2)};
        ClusterSet set = compute_clusters(rhos, 1e-8);
        return trace_norm(set.cluster(2));
    };
    const double lambda = 0.5;
    const double limit = lambda * (1.0 - lambda);
    const double at100 = c2_norm(50, 50);
    const double at400 = c2_norm(200, 200);
    CHECK(std::abs(at400 - limit) < std::abs(at100 - limit)); // 1/N convergence
    CHECK(std::abs(at400 - limit) < 4.0 / 400.0);

    // and the limiting operator is the symmetric pair projector
    std::vector<BosonicOperator> rhos = {permanent_rdm({200, 200}, 400, 1),
                                         permanent_rdm({200, 200}, 400, 2)};
    ClusterSet set = compute_clusters(rhos, 1e-8);
    auto basis = FockBasis::make(2, 2);
    BosonicOperator proj(2, 2);
    proj.set(basis->rank({1, 1}), basis->rank({1, 1}), limit);
    BosonicOperator diff = set.cluster(2);
    diff -= proj;
    CHECK(trace_norm(diff) < 4.0 / 400.0);
}
