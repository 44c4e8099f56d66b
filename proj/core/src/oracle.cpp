#include "bbh/oracle.hpp"

#include <cmath>

#include "bbh/cluster.hpp"

namespace bbh {

CIState product_bec(int m, int N, const Eigen::VectorXcd& coeffs)
{
    if (coeffs.size() != m)
        throw Error("product_bec: need one orbital coefficient per mode");
    if (std::abs(coeffs.norm() - 1.0) > 1e-12)
        throw Error("product_bec: orbital coefficients must be normalized");
    auto basis = FockBasis::make(m, N);
    CIState a;
    a.m = m;
    a.N = N;
    a.amplitudes.resize(basis->dim());
    const double logNfac = std::lgamma(N + 1.0);
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const auto& n = basis->state(i);
        double logw = logNfac;
        Complex prod(1.0, 0.0);
        for (int r = 0; r < m; ++r) {
            logw -= std::lgamma(n[r] + 1.0);
            for (int rep = 0; rep < n[r]; ++rep)
                prod *= coeffs(r);
        }
        a.amplitudes(static_cast<Eigen::Index>(i)) = std::exp(0.5 * logw) * prod;
    }
    a.normalize(); // remove rounding residue
    return a;
}

CIState permanent_state(const OccupationVector& k, int N)
{
    if (order_of(k) != N)
        throw Error("permanent_state: occupations must sum to N");
    const int m = static_cast<int>(k.size());
    auto basis = FockBasis::make(m, N);
    CIState a;
    a.m = m;
    a.N = N;
    a.amplitudes = Eigen::VectorXcd::Zero(basis->dim());
    a.amplitudes(static_cast<Eigen::Index>(basis->rank(k))) = 1.0;
    return a;
}

CIState noon_state(int m, int N, double theta)
{
    auto basis = FockBasis::make(m, N);
    OccupationVector left(m, 0), right(m, 0);
    left[0] = N;
    right[m - 1] = N;
    CIState a;
    a.m = m;
    a.N = N;
    a.amplitudes = Eigen::VectorXcd::Zero(basis->dim());
    const double s = 1.0 / std::sqrt(2.0);
    a.amplitudes(static_cast<Eigen::Index>(basis->rank(left))) = s;
    a.amplitudes(static_cast<Eigen::Index>(basis->rank(right))) =
        s * Complex(std::cos(theta), std::sin(theta));
    return a;
}

BosonicOperator extract_rdm(const CIState& a, int o)
{
    const int m = a.m;
    const int N = a.N;
    if (o < 0 || o > N)
        throw Error("extract_rdm: need 0 <= o <= N");
    auto table = ComposeTable::make(m, o, N - o); // (n, l) -> n + l
    auto bo = FockBasis::make(m, o);
    auto benv = FockBasis::make(m, N - o);
    BosonicOperator rho(m, o);
    const double norm = 1.0 / static_cast<double>(binomial(N, o));
    for (std::size_t rn = 0; rn < bo->dim(); ++rn) {
        for (std::size_t rm = 0; rm <= rn; ++rm) {
            Complex acc(0.0, 0.0);
            for (std::size_t l = 0; l < benv->dim(); ++l) {
                const Complex an = a.amplitudes(static_cast<Eigen::Index>(table->index(rn, l)));
                const Complex am = a.amplitudes(static_cast<Eigen::Index>(table->index(rm, l)));
                acc += std::conj(am) * an * table->weight(rn, l) * table->weight(rm, l);
            }
            rho.set(rn, rm, norm * acc);
        }
    }
    return rho;
}

BosonicOperator bec_rdm(int m, int o, const Eigen::VectorXcd& coeffs)
{
    // projector onto the o-fold product of the condensate orbital
    CIState prod = product_bec(m, o, coeffs);
    BosonicOperator rho(m, o);
    for (std::size_t r = 0; r < rho.dim(); ++r)
        for (std::size_t c = 0; c <= r; ++c)
            rho.set(r, c, prod.amplitudes(static_cast<Eigen::Index>(r)) *
                              std::conj(prod.amplitudes(static_cast<Eigen::Index>(c))));
    return rho;
}

BosonicOperator permanent_rdm(const OccupationVector& k, int N, int o)
{
    const int m = static_cast<int>(k.size());
    auto basis = FockBasis::make(m, o);
    BosonicOperator rho(m, o);
    const double norm = 1.0 / static_cast<double>(binomial(N, o));
    for (std::size_t r = 0; r < basis->dim(); ++r) {
        const auto& n = basis->state(r);
        double w = 1.0;
        bool ok = true;
        for (int i = 0; i < m && ok; ++i) {
            if (n[i] > k[i])
                ok = false;
            else
                w *= static_cast<double>(binomial(static_cast<std::uint64_t>(k[i]),
                                                  static_cast<std::uint64_t>(n[i])));
        }
        if (ok)
            rho.set(r, r, norm * w);
    }
    return rho;
}

BosonicOperator noon_rdm(int m, int N, int o, double theta)
{
    auto basis = FockBasis::make(m, o);
    BosonicOperator rho(m, o);
    OccupationVector left(m, 0), right(m, 0);
    left[0] = o;
    right[m - 1] = o;
    const std::size_t rl = basis->rank(left);
    const std::size_t rr = basis->rank(right);
    rho.set(rl, rl, 0.5);
    rho.set(rr, rr, 0.5);
    // for o < N the cross terms are killed by the environment overlap
    if (o == N)
        rho.set(rr, rl, 0.5 * Complex(std::cos(theta), std::sin(theta)));
    return rho;
}

IntegrateResult exact_propagate(const ModelSpec& spec, const CIState& a0, double t_final,
                                const IntegratorOptions& opts,
                                const std::function<void(const CISample&)>& sink)
{
    if (std::abs(a0.norm() - 1.0) > 1e-10)
        throw Error("exact_propagate: initial state is not normalized");
    const Matrix h = sector_hamiltonian(spec, spec.N).to_matrix();
    const Eigen::Index d = h.rows();

    Rhs rhs = [&h, d](double, const Vector& y, Vector& dy) {
        // y holds (Re A, Im A) interleaved; dA/dt = -i H A
        Eigen::VectorXcd a(d);
        for (Eigen::Index i = 0; i < d; ++i)
            a(i) = Complex(y(2 * i), y(2 * i + 1));
        Eigen::VectorXcd da = Complex(0.0, -1.0) * (h * a);
        dy.resize(2 * d);
        for (Eigen::Index i = 0; i < d; ++i) {
            dy(2 * i) = da(i).real();
            dy(2 * i + 1) = da(i).imag();
        }
    };

    Vector y0(2 * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        y0(2 * i) = a0.amplitudes(i).real();
        y0(2 * i + 1) = a0.amplitudes(i).imag();
    }

    OutputHook hook = [&](double t, Vector& y, long steps) {
        CISample s;
        s.t = t;
        s.steps = steps;
        s.state.m = spec.m;
        s.state.N = spec.N;
        s.state.time = t;
        s.state.amplitudes.resize(d);
        for (Eigen::Index i = 0; i < d; ++i)
            s.state.amplitudes(i) = Complex(y(2 * i), y(2 * i + 1));
        if (sink)
            sink(s);
        return false;
    };

    return integrate(rhs, y0, a0.time, t_final, opts, hook, false);
}

std::vector<double> exact_cluster_norms(const CIState& a, int max_o)
{
    if (max_o > a.N)
        throw Error("exact_cluster_norms: max_o exceeds the particle number");
    std::vector<BosonicOperator> rhos;
    for (int o = 1; o <= max_o; ++o)
        rhos.push_back(extract_rdm(a, o));
    ClusterSet set = compute_clusters(rhos, 1e-6);
    std::vector<double> norms;
    for (int o = 1; o <= max_o; ++o)
        norms.push_back(trace_norm(set.cluster(o)));
    return norms;
}

} // namespace bbh
