#include "bbh/operator.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace bbh {

static_assert(std::endian::native == std::endian::little,
              "operator serialization assumes a little-endian host");

BosonicOperator::BosonicOperator(int m, int o)
    : m_(m), o_(o), dim_(fock_dimension(m, o)), tri_(dim_ * (dim_ + 1) / 2, Complex(0.0, 0.0))
{
}

BosonicOperator BosonicOperator::identity(int m, int o)
{
    BosonicOperator b(m, o);
    for (std::size_t r = 0; r < b.dim_; ++r)
        b.tri_[r * (r + 1) / 2 + r] = 1.0;
    return b;
}

BosonicOperator BosonicOperator::vacuum_scalar(int m, double value)
{
    BosonicOperator b(m, 0);
    b.tri_[0] = value;
    return b;
}

BosonicOperator BosonicOperator::from_matrix(int m, int o, const Matrix& a)
{
    BosonicOperator b(m, o);
    if (a.rows() != static_cast<Eigen::Index>(b.dim_) || a.cols() != a.rows())
        throw Error("from_matrix: dimension mismatch");
    for (std::size_t r = 0; r < b.dim_; ++r) {
        for (std::size_t c = 0; c < r; ++c)
            b.tri_[r * (r + 1) / 2 + c] = a(r, c);
        b.tri_[r * (r + 1) / 2 + r] = a(r, r).real();
    }
    return b;
}

void BosonicOperator::set(std::size_t r, std::size_t c, Complex value)
{
    if (r < c)
        throw Error("BosonicOperator::set expects a lower-triangle index");
    tri_[r * (r + 1) / 2 + c] = r == c ? Complex(value.real(), 0.0) : value;
}

void BosonicOperator::add(std::size_t r, std::size_t c, Complex value)
{
    if (r < c)
        throw Error("BosonicOperator::add expects a lower-triangle index");
    tri_[r * (r + 1) / 2 + c] += r == c ? Complex(value.real(), 0.0) : value;
}

Matrix BosonicOperator::to_matrix() const
{
    Matrix a(dim_, dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
        for (std::size_t c = 0; c <= r; ++c) {
            a(r, c) = tri_[r * (r + 1) / 2 + c];
            if (c != r)
                a(c, r) = std::conj(a(r, c));
        }
    }
    return a;
}

double BosonicOperator::trace() const
{
    double t = 0.0;
    for (std::size_t r = 0; r < dim_; ++r)
        t += tri_[r * (r + 1) / 2 + r].real();
    return t;
}

BosonicOperator& BosonicOperator::operator+=(const BosonicOperator& other)
{
    if (m_ != other.m_ || o_ != other.o_)
        throw Error("operator+=: shape mismatch");
    for (std::size_t i = 0; i < tri_.size(); ++i)
        tri_[i] += other.tri_[i];
    return *this;
}

BosonicOperator& BosonicOperator::operator-=(const BosonicOperator& other)
{
    if (m_ != other.m_ || o_ != other.o_)
        throw Error("operator-=: shape mismatch");
    for (std::size_t i = 0; i < tri_.size(); ++i)
        tri_[i] -= other.tri_[i];
    return *this;
}

BosonicOperator& BosonicOperator::operator*=(double s)
{
    for (auto& x : tri_)
        x *= s;
    return *this;
}

BosonicOperator partial_trace(const BosonicOperator& b, int k)
{
    const int o = b.order();
    if (k < 1 || k > o)
        throw Error("partial_trace: need 1 <= k <= o");
    const int m = b.modes();
    const int or_ = o - k;
    auto table = ComposeTable::make(m, or_, k);
    auto blow = FockBasis::make(m, or_);
    auto bk = FockBasis::make(m, k);
    BosonicOperator out(m, or_);
    const double norm = 1.0 / static_cast<double>(binomial(o, k));
    for (std::size_t ra = 0; ra < blow->dim(); ++ra) {
        for (std::size_t rb = 0; rb <= ra; ++rb) {
            Complex acc(0.0, 0.0);
            for (std::size_t l = 0; l < bk->dim(); ++l) {
                const double w = table->weight(ra, l) * table->weight(rb, l);
                acc += w * b(table->index(ra, l), table->index(rb, l));
            }
            out.set(ra, rb, norm * acc);
        }
    }
    return out;
}

BosonicOperator join(const BosonicOperator& a, const BosonicOperator& b)
{
    if (a.modes() != b.modes())
        throw Error("join: mode-count mismatch");
    const int m = a.modes();
    const int o1 = a.order();
    const int o2 = b.order();
    auto table = ComposeTable::make(m, o1, o2);
    const std::size_t d1 = a.dim();
    const std::size_t d2 = b.dim();
    Matrix acc = Matrix::Zero(fock_dimension(m, o1 + o2), fock_dimension(m, o1 + o2));
    for (std::size_t ra = 0; ra < d1; ++ra) {
        for (std::size_t rb = 0; rb < d1; ++rb) {
            const Complex aval = a(ra, rb);
            if (aval == Complex(0.0, 0.0))
                continue;
            for (std::size_t rc = 0; rc < d2; ++rc) {
                const std::size_t row = table->index(ra, rc);
                const double wac = table->weight(ra, rc);
                for (std::size_t rd = 0; rd < d2; ++rd) {
                    const Complex bval = b(rc, rd);
                    if (bval == Complex(0.0, 0.0))
                        continue;
                    const std::size_t col = table->index(rb, rd);
                    if (row < col)
                        continue; // upper triangle follows by hermiticity
                    acc(row, col) += aval * bval * wac * table->weight(rb, rd);
                }
            }
        }
    }
    return BosonicOperator::from_matrix(m, o1 + o2, acc);
}

BosonicOperator raise(const BosonicOperator& b, int k)
{
    if (k < 1)
        throw Error("raise: need k >= 1");
    BosonicOperator out = join(b, BosonicOperator::identity(b.modes(), k));
    out *= 1.0 / static_cast<double>(binomial(b.order() + k, k));
    return out;
}

BosonicOperator reducible_from_traces(const std::vector<BosonicOperator>& traces, int o, int m)
{
    if (static_cast<int>(traces.size()) != o)
        throw Error("reducible_from_traces: need traces of orders 0..o-1");
    BosonicOperator red(m, o);
    for (int k = 0; k < o; ++k) {
        if (traces[k].order() != k || traces[k].modes() != m)
            throw Error("reducible_from_traces: trace family shape mismatch");
        // exact integer binomials, converted once
        const double num = static_cast<double>(binomial(o, k)) * static_cast<double>(binomial(o, k));
        const double den = static_cast<double>(binomial(2 * o + m - 2, o - k));
        const double sign = ((o + k) % 2 == 0) ? -1.0 : 1.0; // -(-1)^(o+k)
        BosonicOperator term = raise(traces[k], o - k);
        term *= sign * num / den;
        red += term;
    }
    return red;
}

UidSplit uid_split(const BosonicOperator& b)
{
    const int o = b.order();
    const int m = b.modes();
    std::vector<BosonicOperator> traces(o, BosonicOperator());
    if (o > 0) {
        BosonicOperator t = b;
        for (int k = o - 1; k >= 0; --k) {
            t = partial_trace(t, 1);
            traces[k] = t;
        }
    }
    UidSplit s;
    s.red = reducible_from_traces(traces, o, m);
    s.irr = b;
    s.irr -= s.red;
    return s;
}

static Eigen::VectorXd hermitian_eigenvalues(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.compute(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw Error("eigenvalue computation failed");
    return es.eigenvalues();
}

double trace_distance(const BosonicOperator& a, const BosonicOperator& b)
{
    if (a.modes() != b.modes() || a.order() != b.order())
        throw Error("trace_distance: shape mismatch");
    BosonicOperator d = a;
    d -= b;
    return 0.5 * trace_norm(d);
}

double trace_norm(const BosonicOperator& b)
{
    return hermitian_eigenvalues(b.to_matrix()).cwiseAbs().sum();
}

Matrix one_body_lift(const Matrix& h, int o)
{
    const int m = static_cast<int>(h.rows());
    auto basis = FockBasis::make(m, o);
    const std::size_t d = basis->dim();
    Matrix g = Matrix::Zero(d, d);
    OccupationVector w;
    for (std::size_t col = 0; col < d; ++col) {
        const auto& s = basis->state(col);
        for (int j = 0; j < m; ++j) {
            if (s[j] == 0)
                continue;
            const double aj = std::sqrt(static_cast<double>(s[j]));
            w = s;
            --w[j];
            for (int i = 0; i < m; ++i) {
                if (h(i, j) == Complex(0.0, 0.0))
                    continue;
                ++w[i];
                const double ai = std::sqrt(static_cast<double>(w[i]));
                g(basis->rank(w), col) += h(i, j) * aj * ai;
                --w[i];
            }
        }
    }
    return g;
}

Matrix lift_unitary(const Matrix& u, int o)
{
    const int m = static_cast<int>(u.rows());
    if (u.cols() != m)
        throw Error("lift_unitary: square matrix required");
    if ((u.adjoint() * u - Matrix::Identity(m, m)).norm() > 1e-12 * m)
        throw Error("lift_unitary: matrix is not unitary");
    if (o == 0)
        return Matrix::Identity(1, 1);
    // hermitian generator: u = exp(i a) via the Schur form (diagonal for
    // normal matrices)
    Eigen::ComplexSchur<Matrix> schur(u);
    Matrix q = schur.matrixU();
    Eigen::VectorXd theta(m);
    for (int i = 0; i < m; ++i)
        theta(i) = std::arg(schur.matrixT()(i, i));
    Matrix a = q * theta.asDiagonal() * q.adjoint();
    Matrix gen = one_body_lift(a, o); // hermitian
    Eigen::SelfAdjointEigenSolver<Matrix> es(gen);
    if (es.info() != Eigen::Success)
        throw Error("lift_unitary: eigensolver failed");
    Eigen::VectorXcd phases = (Complex(0.0, 1.0) * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

BosonicOperator rotate_basis(const BosonicOperator& b, const Matrix& u)
{
    Matrix l = lift_unitary(u, b.order());
    Matrix rotated = l.adjoint() * b.to_matrix() * l;
    return BosonicOperator::from_matrix(b.modes(), b.order(), rotated);
}

void save_operator(const BosonicOperator& b, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("save_operator: cannot open " + path);
    const char magic[4] = {'B', 'O', 'P', '1'};
    out.write(magic, 4);
    const std::uint32_t m = static_cast<std::uint32_t>(b.modes());
    const std::uint32_t o = static_cast<std::uint32_t>(b.order());
    const std::uint64_t dim = b.dim();
    out.write(reinterpret_cast<const char*>(&m), sizeof m);
    out.write(reinterpret_cast<const char*>(&o), sizeof o);
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(b.packed().data()),
              static_cast<std::streamsize>(b.packed().size() * sizeof(Complex)));
    if (!out)
        throw Error("save_operator: write failed for " + path);
}

BosonicOperator load_operator(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("load_operator: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "BOP1", 4) != 0)
        throw Error("load_operator: bad magic in " + path);
    std::uint32_t m = 0, o = 0;
    std::uint64_t dim = 0;
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    in.read(reinterpret_cast<char*>(&o), sizeof o);
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    BosonicOperator b(static_cast<int>(m), static_cast<int>(o));
    if (b.dim() != dim)
        throw Error("load_operator: dimension mismatch in " + path);
    in.read(reinterpret_cast<char*>(b.packed().data()),
            static_cast<std::streamsize>(b.packed().size() * sizeof(Complex)));
    if (!in)
        throw Error("load_operator: truncated file " + path);
    return b;
}

} // namespace bbh
