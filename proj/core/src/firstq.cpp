#include "bbh/firstq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bbh/cluster.hpp"

namespace bbh {
namespace firstq {

namespace {
std::size_t ipow(std::size_t base, int exp)
{
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i)
        r *= base;
    return r;
}

void decode(std::size_t index, int m, int o, std::vector<int>& digits)
{
    digits.resize(o);
    for (int k = o - 1; k >= 0; --k) {
        digits[static_cast<std::size_t>(k)] = static_cast<int>(index % m);
        index /= static_cast<std::size_t>(m);
    }
}

std::size_t encode(const std::vector<int>& digits, int m)
{
    std::size_t index = 0;
    for (int d : digits)
        index = index * static_cast<std::size_t>(m) + static_cast<std::size_t>(d);
    return index;
}

double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}
} // namespace

Matrix embedding(int m, int o)
{
    auto basis = FockBasis::make(m, o);
    const std::size_t dprod = ipow(static_cast<std::size_t>(m), o);
    Matrix e = Matrix::Zero(dprod, basis->dim());
    std::vector<int> digits;
    OccupationVector occ(m, 0);
    for (std::size_t idx = 0; idx < dprod; ++idx) {
        decode(idx, m, o, digits);
        std::fill(occ.begin(), occ.end(), 0);
        for (int d : digits)
            ++occ[static_cast<std::size_t>(d)];
        double w = 1.0;
        for (int r = 0; r < m; ++r)
            w *= factorial(occ[static_cast<std::size_t>(r)]);
        e(idx, basis->rank(occ)) = std::sqrt(w / factorial(o));
    }
    return e;
}

Matrix symmetrizer(int m, int o)
{
    const std::size_t dprod = ipow(static_cast<std::size_t>(m), o);
    Matrix s = Matrix::Zero(dprod, dprod);
    std::vector<int> perm(o);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> digits, permuted(o);
    const double w = 1.0 / factorial(o);
    do {
        for (std::size_t idx = 0; idx < dprod; ++idx) {
            decode(idx, m, o, digits);
            for (int k = 0; k < o; ++k)
                permuted[static_cast<std::size_t>(k)] = digits[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
            s(encode(permuted, m), idx) += w;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return s;
}

Matrix embed(const BosonicOperator& b)
{
    Matrix e = embedding(b.modes(), b.order());
    return e * b.to_matrix() * e.adjoint();
}

BosonicOperator project(const Matrix& dense, int m, int o)
{
    Matrix e = embedding(m, o);
    return BosonicOperator::from_matrix(m, o, e.adjoint() * dense * e);
}

namespace {
Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}
} // namespace

BosonicOperator join(const BosonicOperator& a, const BosonicOperator& b)
{
    const int m = a.modes();
    const int o = a.order() + b.order();
    Matrix s = symmetrizer(m, o);
    Matrix product = kron(embed(a), embed(b));
    const double scale = static_cast<double>(binomial(o, a.order()));
    return project(scale * s * product * s, m, o);
}

BosonicOperator partial_trace(const BosonicOperator& b, int k)
{
    const int m = b.modes();
    const int o = b.order();
    const std::size_t dlow = ipow(static_cast<std::size_t>(m), o - k);
    const std::size_t denv = ipow(static_cast<std::size_t>(m), k);
    Matrix dense = embed(b);
    Matrix traced = Matrix::Zero(dlow, dlow);
    for (std::size_t i = 0; i < dlow; ++i)
        for (std::size_t j = 0; j < dlow; ++j) {
            Complex acc(0.0, 0.0);
            for (std::size_t t = 0; t < denv; ++t)
                acc += dense(i * denv + t, j * denv + t);
            traced(i, j) = acc;
        }
    return project(traced, m, o - k);
}

BosonicOperator symbol(const std::vector<std::pair<int, int>>& parts,
                       const std::vector<BosonicOperator>& clusters)
{
    if (parts.empty())
        throw Error("firstq::symbol: empty partition");
    const int m = clusters.at(0).modes();
    int o = 0;
    double stabilizer = 1.0;
    Matrix tensor = Matrix::Identity(1, 1);
    for (auto [sigma, n] : parts) {
        const auto& c = clusters.at(static_cast<std::size_t>(sigma - 1));
        for (int rep = 0; rep < n; ++rep)
            tensor = kron(tensor, embed(c));
        o += sigma * n;
        stabilizer *= factorial(n) * std::pow(factorial(sigma), n);
    }
    Matrix s = symmetrizer(m, o);
    const double mult = factorial(o) / stabilizer; // distinguishable label assignments
    return project(mult * s * tensor * s, m, o);
}

std::vector<BosonicOperator> clusters(const std::vector<BosonicOperator>& rhos)
{
    std::vector<BosonicOperator> out;
    out.push_back(rhos.at(0));
    for (int o = 2; o <= static_cast<int>(rhos.size()); ++o) {
        BosonicOperator c = rhos[static_cast<std::size_t>(o - 1)];
        for (const auto& part : integer_partitions(o)) {
            if (part.trivial())
                continue;
            c -= symbol(part.parts, out);
        }
        out.push_back(std::move(c));
    }
    return out;
}

BosonicOperator collision_first_quantized(const BosonicOperator& rho2, const ModelSpec& spec)
{
    const int m = spec.m;
    Matrix dense = embed(rho2); // m^2 x m^2, particle 1 is the major index
    Matrix acc = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Matrix cond(m, m), t(m, m);
            for (int q = 0; q < m; ++q)
                for (int p = 0; p < m; ++p) {
                    cond(q, p) = dense(q * m + i, p * m + j);
                    t(q, p) = spec.vel(q, j, p, i);
                }
            acc += t * cond - cond * t;
        }
    acc *= static_cast<double>(spec.N - 1);
    // hermitian -i I_1 form
    Matrix herm = Complex(0.0, -1.0) * acc;
    return BosonicOperator::from_matrix(m, 1, herm);
}

} // namespace firstq
} // namespace bbh
