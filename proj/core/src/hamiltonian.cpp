#include "bbh/hamiltonian.hpp"

#include <cmath>

namespace bbh {

namespace {
constexpr double TWO_PI = 6.283185307179586476925286766559;

double wrap_angle(double a)
{
    a = std::fmod(a, TWO_PI);
    if (a < 0.0)
        a += TWO_PI;
    return a;
}
} // namespace

double SymmetrySpec::angle(const OccupationVector& occ) const
{
    double a = 0.0;
    for (std::size_t j = 0; j < occ.size(); ++j)
        a += occ[j] * phases[j];
    return wrap_angle(a);
}

bool SymmetrySpec::equivalent(const OccupationVector& a, const OccupationVector& b) const
{
    double d = wrap_angle(angle(a) - angle(b));
    return d < 1e-9 || TWO_PI - d < 1e-9;
}

void ModelSpec::validate() const
{
    if (m < 1 || N < 1)
        throw Error("ModelSpec: need m >= 1, N >= 1");
    if (h.rows() != m || h.cols() != m)
        throw Error("ModelSpec: h must be m x m");
    if (v.size() != static_cast<std::size_t>(m) * m * m * m)
        throw Error("ModelSpec: v must hold m^4 elements");
    if ((h - h.adjoint()).norm() > 1e-12 * std::max(1.0, h.norm()))
        throw Error("ModelSpec: h is not hermitian");
    const double vscale = [&] {
        double s = 0.0;
        for (const auto& x : v)
            s = std::max(s, std::abs(x));
        return std::max(1.0, s);
    }();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int q = 0; q < m; ++q)
                for (int p = 0; p < m; ++p) {
                    if (std::abs(vel(i, j, q, p) - vel(j, i, p, q)) > 1e-12 * vscale)
                        throw Error("ModelSpec: v lacks the exchange symmetry v_ijqp = v_jipq");
                    if (std::abs(vel(i, j, q, p) - std::conj(vel(q, p, i, j))) > 1e-12 * vscale)
                        throw Error("ModelSpec: v lacks hermiticity v_ijqp = conj(v_qpij)");
                }
    if (symmetry.enabled && static_cast<int>(symmetry.phases.size()) != m)
        throw Error("ModelSpec: symmetry phases must list one angle per mode");
}

ModelSpec ModelSpec::rotated(const Matrix& u) const
{
    if ((u.adjoint() * u - Matrix::Identity(m, m)).norm() > 1e-12 * m)
        throw Error("ModelSpec::rotated: matrix is not unitary");
    ModelSpec out = *this;
    out.h = u.adjoint() * h * u;
    out.v.assign(v.size(), Complex(0.0, 0.0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int q = 0; q < m; ++q)
                for (int p = 0; p < m; ++p) {
                    Complex acc(0.0, 0.0);
                    for (int a = 0; a < m; ++a)
                        for (int b = 0; b < m; ++b)
                            for (int c = 0; c < m; ++c)
                                for (int d = 0; d < m; ++d)
                                    acc += std::conj(u(a, i)) * std::conj(u(b, j)) *
                                           vel(a, b, c, d) * u(c, q) * u(d, p);
                    out.v[static_cast<std::size_t>(((i * m + j) * m + q) * m + p)] = acc;
                }
    return out;
}

Matrix ModelSpec::one_body_gauge_matrix() const
{
    if (gauge == Gauge::one_body)
        return Matrix::Zero(m, m);
    return h;
}

ModelSpec bose_hubbard_dimer(double J, double U, int N)
{
    if (J <= 0.0)
        throw Error("bose_hubbard_dimer: need J > 0");
    ModelSpec spec;
    spec.m = 2;
    spec.N = N;
    spec.h = Matrix::Zero(2, 2);
    spec.h(0, 1) = -J;
    spec.h(1, 0) = -J;
    spec.v.assign(16, Complex(0.0, 0.0));
    spec.v[0] = U;  // v_LLLL
    spec.v[15] = U; // v_RRRR
    spec.labels = {"L", "R"};
    spec.J = J;
    spec.U = U;
    spec.lambda = U * (N - 1) / (2.0 * J);
    spec.lambda_crit = 2.0;
    spec.t_mf = spec.lambda > 0.0 ? std::sqrt(2.0 * N + 1.0) / (J * spec.lambda) : 0.0;
    spec.symmetry.phases = {0.0, M_PI}; // parity in the even/odd basis
    spec.symmetry.enabled = false;      // sites are not parity eigenstates
    spec.validate();
    return spec;
}

ModelSpec bose_hubbard_dimer_lambda(double J, double lambda, int N)
{
    if (N < 2)
        throw Error("bose_hubbard_dimer_lambda: need N >= 2");
    return bose_hubbard_dimer(J, 2.0 * J * lambda / (N - 1), N);
}

BosonicOperator one_body_sector(const Matrix& h, int o)
{
    return BosonicOperator::from_matrix(static_cast<int>(h.rows()), o, one_body_lift(h, o));
}

BosonicOperator interaction_sector(const ModelSpec& spec, int o)
{
    const int m = spec.m;
    auto basis = FockBasis::make(m, o);
    const std::size_t d = basis->dim();
    Matrix acc = Matrix::Zero(d, d);
    OccupationVector w;
    for (std::size_t col = 0; col < d; ++col) {
        const auto& s = basis->state(col);
        for (int p = 0; p < m; ++p) {
            if (s[p] == 0)
                continue;
            w = s;
            const double ap = std::sqrt(static_cast<double>(w[p]));
            --w[p];
            for (int q = 0; q < m; ++q) {
                if (w[q] == 0)
                    continue;
                const double aq = std::sqrt(static_cast<double>(w[q]));
                --w[q];
                for (int j = 0; j < m; ++j) {
                    ++w[j];
                    const double aj = std::sqrt(static_cast<double>(w[j]));
                    for (int i = 0; i < m; ++i) {
                        const Complex vv = spec.vel(i, j, q, p);
                        if (vv == Complex(0.0, 0.0))
                            continue;
                        ++w[i];
                        const double ai = std::sqrt(static_cast<double>(w[i]));
                        acc(basis->rank(w), col) += 0.5 * vv * ap * aq * aj * ai;
                        --w[i];
                    }
                    --w[j];
                }
                ++w[q];
            }
        }
    }
    return BosonicOperator::from_matrix(m, o, acc);
}

BosonicOperator sector_hamiltonian(const ModelSpec& spec, int o)
{
    BosonicOperator ham = interaction_sector(spec, o);
    ham += one_body_sector(spec.one_body_gauge_matrix(), o);
    return ham;
}

double energy(const BosonicOperator& rho1, const BosonicOperator& rho2, const ModelSpec& spec)
{
    const double t1 = std::abs(rho1.trace() - 1.0);
    const double t2 = std::abs(rho2.trace() - 1.0);
    if (t1 > 1e-8 || t2 > 1e-8)
        throw Error("energy: input RDMs are not trace-one (corrupted state)");
    const double one = (spec.h * rho1.to_matrix()).trace().real();
    // interaction_sector restricted to two particles is exactly the pair
    // potential v_12, so tr(v_12 rho2) = tr(interaction_sector * rho2)
    const double two = (interaction_sector(spec, 2).to_matrix() * rho2.to_matrix()).trace().real();
    return spec.N * one + 0.5 * spec.N * (spec.N - 1) * two;
}

double energy_k2(const BosonicOperator& rho2, const ModelSpec& spec)
{
    Matrix k2 = 0.5 * (one_body_sector(spec.h, 2).to_matrix() +
                       (spec.N - 1) * interaction_sector(spec, 2).to_matrix());
    return spec.N * (k2 * rho2.to_matrix()).trace().real();
}

Eigen::VectorXcd symmetry_phases(const SymmetrySpec& sym, int m, int o)
{
    auto basis = FockBasis::make(m, o);
    Eigen::VectorXcd ph(basis->dim());
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const double a = sym.angle(basis->state(i));
        ph(i) = Complex(std::cos(a), std::sin(a));
    }
    return ph;
}

double symmetry_commutator_norm(const BosonicOperator& b, const SymmetrySpec& sym)
{
    Eigen::VectorXcd ph = symmetry_phases(sym, b.modes(), b.order());
    double acc = 0.0;
    for (std::size_t r = 0; r < b.dim(); ++r)
        for (std::size_t c = 0; c < b.dim(); ++c) {
            const Complex x = (ph(r) - ph(c)) * b(r, c);
            acc += std::norm(x);
        }
    return std::sqrt(acc);
}

} // namespace bbh
