#ifndef BBH_OPERATOR_HPP
#define BBH_OPERATOR_HPP

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <vector>

#include "bbh/fock.hpp"

namespace bbh {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Hermitian bosonic o-body operator in the number-state basis of
/// FockBasis(m, o). Only the lower triangle is stored (row-major, with a
/// real diagonal); the upper triangle is the conjugate of the stored
/// elements, so hermiticity is structural.
class BosonicOperator {
public:
    BosonicOperator() = default;
    BosonicOperator(int m, int o); // zero operator

    static BosonicOperator identity(int m, int o); // bosonic o-body unit operator
    static BosonicOperator vacuum_scalar(int m, double value); // value * |0><0|, order 0

    /// Takes the lower triangle of `a` as is; the given upper triangle is
    /// ignored (the stored layout defines hermiticity).
    static BosonicOperator from_matrix(int m, int o, const Matrix& a);

    int modes() const { return m_; }
    int order() const { return o_; }
    std::size_t dim() const { return dim_; }

    Complex operator()(std::size_t r, std::size_t c) const
    {
        return r >= c ? tri_[r * (r + 1) / 2 + c] : std::conj(tri_[c * (c + 1) / 2 + r]);
    }
    /// Assign element (r, c) with r >= c; the mirrored element follows.
    void set(std::size_t r, std::size_t c, Complex value);
    void add(std::size_t r, std::size_t c, Complex value);

    Matrix to_matrix() const;

    double trace() const;

    BosonicOperator& operator+=(const BosonicOperator& other);
    BosonicOperator& operator-=(const BosonicOperator& other);
    BosonicOperator& operator*=(double s);
    friend BosonicOperator operator+(BosonicOperator a, const BosonicOperator& b) { return a += b; }
    friend BosonicOperator operator-(BosonicOperator a, const BosonicOperator& b) { return a -= b; }
    friend BosonicOperator operator*(double s, BosonicOperator a) { return a *= s; }

    const std::vector<Complex>& packed() const { return tri_; }
    std::vector<Complex>& packed() { return tri_; }

private:
    int m_ = 0;
    int o_ = 0;
    std::size_t dim_ = 0;
    std::vector<Complex> tri_;
};

/// Partial trace over k particles, Eq.-exact with square-root binomial
/// weights; preserves the total trace. k = o yields tr(B)*|0><0|.
BosonicOperator partial_trace(const BosonicOperator& b, int k = 1);

/// Joins an o1-body and an o2-body operator into an (o1+o2)-body operator.
BosonicOperator join(const BosonicOperator& a, const BosonicOperator& b);

/// k-fold raising: join with the bosonic k-body unit operator over
/// binom(o+k, k); adds k particles in an undefined state.
BosonicOperator raise(const BosonicOperator& b, int k = 1);

struct UidSplit {
    BosonicOperator red; // fixed by all partial traces of the input
    BosonicOperator irr; // contraction-free remainder
};

/// Unitarily invariant decomposition B = red + irr with tr_1(irr) = 0 and
/// tr_k(red) = tr_k(B) for all k.
UidSplit uid_split(const BosonicOperator& b);

/// Reducible o-body operator determined by a consistent family of partial
/// traces; traces[k] must be the order-k trace (k = 0..o-1, with traces[0]
/// the scalar part as a 0-body operator).
BosonicOperator reducible_from_traces(const std::vector<BosonicOperator>& traces, int o, int m);

/// Half the Schatten-1 norm of a - b; in [0, 1] for density operators.
double trace_distance(const BosonicOperator& a, const BosonicOperator& b);

/// Sum of absolute eigenvalues.
double trace_norm(const BosonicOperator& b);

/// Operator expressed in the rotated single-particle basis phi'_q =
/// sum_p U_{pq} phi_p; trace and spectrum preserved. U must be unitary.
BosonicOperator rotate_basis(const BosonicOperator& b, const Matrix& u);

/// Lift of a one-body unitary to the o-particle number-state basis.
Matrix lift_unitary(const Matrix& u, int o);

/// Dense o-sector matrix of the one-body operator sum_ij h_ij a+_i a_j.
Matrix one_body_lift(const Matrix& h, int o);

/// Binary serialization (little-endian; header m, o, dim; payload packed
/// lower triangle).
void save_operator(const BosonicOperator& b, const std::string& path);
BosonicOperator load_operator(const std::string& path);

} // namespace bbh

#endif
