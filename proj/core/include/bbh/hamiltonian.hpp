#ifndef BBH_HAMILTONIAN_HPP
#define BBH_HAMILTONIAN_HPP

#include <string>
#include <vector>

#include "bbh/operator.hpp"

namespace bbh {

enum class Gauge {
    zero,     // fixed-basis propagation, g = 0
    one_body, // g = h; removes the one-body part from the sector Hamiltonians
};

/// Single-particle symmetry: every mode is an eigenstate of the symmetry
/// operation with phase exp(i theta_j). Number states then carry the
/// phase exp(i sum_j n_j theta_j).
struct SymmetrySpec {
    std::vector<double> phases;
    bool enabled = false;

    /// phase angle of an occupation vector, in [0, 2 pi)
    double angle(const OccupationVector& occ) const;
    bool equivalent(const OccupationVector& a, const OccupationVector& b) const;
};

/// One- and two-body integrals of the model plus particle number and
/// gauge choice. Immutable after construction/validation.
struct ModelSpec {
    int m = 0;
    int N = 0;
    Matrix h;                      // m x m hermitian
    std::vector<Complex> v;        // dense v_{ijqp}, index ((i*m+j)*m+q)*m+p
    Gauge gauge = Gauge::zero;
    SymmetrySpec symmetry;
    std::vector<std::string> labels;

    // dimer metadata (zero when not built by bose_hubbard_dimer)
    double J = 0.0;
    double U = 0.0;
    double lambda = 0.0;          // U (N-1) / (2 J)
    double lambda_crit = 0.0;     // self-trapping threshold
    double t_mf = 0.0;            // quantum break time sqrt(2N+1)/(J lambda)

    Complex vel(int i, int j, int q, int p) const
    {
        return v[static_cast<std::size_t>(((i * m + j) * m + q) * m + p)];
    }

    /// Checks hermiticity of h and g plus the exchange symmetry
    /// v_ijqp = v_jipq and hermiticity v*_ijqp = v_qpij. Throws on failure.
    void validate() const;

    /// Same model expressed in the rotated basis phi'_q = sum_p U_{pq} phi_p.
    ModelSpec rotated(const Matrix& u) const;

    Matrix one_body_gauge_matrix() const; // h - g for the active gauge
};

/// Two-site Bose-Hubbard model; h = [[0, -J], [-J, 0]], v_iiii = U.
/// Site-exchange parity phases (0, pi) are recorded for the even/odd
/// basis but disabled (the site basis is not a parity eigenbasis).
ModelSpec bose_hubbard_dimer(double J, double U, int N);

/// Dimer parametrized by the dimensionless interaction Lambda = U(N-1)/(2J).
ModelSpec bose_hubbard_dimer_lambda(double J, double lambda, int N);

/// Number-state matrix of sum_ij (h-g)_ij a+_i a_j
///  + 1/2 sum_ijqp v_ijqp a+_i a+_j a_q a_p on the o-particle sector.
BosonicOperator sector_hamiltonian(const ModelSpec& spec, int o);

/// Interaction part only (the 1/2 v a+a+aa term) on the o-particle sector.
BosonicOperator interaction_sector(const ModelSpec& spec, int o);

/// One-body part sum_ij h_ij a+_i a_j on the o-particle sector.
BosonicOperator one_body_sector(const Matrix& h, int o);

/// E = N tr(h rho1) + N(N-1)/2 tr(v rho2).
double energy(const BosonicOperator& rho1, const BosonicOperator& rho2, const ModelSpec& spec);

/// Cross-check variant E = N tr(k2 rho2) with
/// k2 = [h (x) 1 + 1 (x) h + (N-1) v]/2; equals energy() on compatible pairs.
double energy_k2(const BosonicOperator& rho2, const ModelSpec& spec);

/// Diagonal phase matrix of the lifted symmetry operation at order o.
Eigen::VectorXcd symmetry_phases(const SymmetrySpec& sym, int m, int o);

/// Frobenius norm of [Pi_o, B] for the lifted symmetry operation.
double symmetry_commutator_norm(const BosonicOperator& b, const SymmetrySpec& sym);

} // namespace bbh

#endif
