#ifndef BBH_CORRECTION_HPP
#define BBH_CORRECTION_HPP

#include <functional>
#include <map>
#include <string>

#include "bbh/representability.hpp"

namespace bbh {

enum class CorrectionMode { none, purify, eom };

class CorrectionSolveError : public Error {
public:
    using Error::Error;
};

/// Bijection between hermitian two-body operators and real vectors of
/// length m^2 (m+1)^2 / 4: upper triangle of the real symmetric part
/// followed by the strict upper triangle of the imaginary antisymmetric
/// part.
Vector vectorize(const BosonicOperator& c2);
BosonicOperator devectorize(const Vector& c, int m);

/// Real linear system A c = b for the correction operator, with the
/// stability rescaling N_b applied to the defect rows.
struct ConstraintSystem {
    Eigen::MatrixXd a;
    Vector b;
    double scale = 1.0; // N_b; the solution is rescaled by it
    std::vector<std::string> labels;
    int defects_d = 0;      // negative rho_2 eigenvalues below epsilon
    int defects_dprime = 0; // negative K eigenvalues below epsilon

    int rows() const { return static_cast<int>(a.rows()); }

    /// Appends the row(s) of one operator-valued constraint
    /// tr(O * C_2) = rhs.
    void add_constraint(const Matrix& o, Complex rhs, const std::string& label);
};

/// Rows (i)-(v): contraction-free, energy, symmetry (when enabled in the
/// model), D-defect and K-defect rows. In eom mode the defect rows use
/// the damping form and need the uncorrected rates.
ConstraintSystem build_constraints(CorrectionMode mode, const EigResult& rho2_eig,
                                   const KMatrix& k, const EigResult& k_eig,
                                   const ModelSpec& spec, double epsilon, double eta,
                                   const Vector* np_rates = nullptr,
                                   const Vector* k_rates = nullptr);

struct LeastNormSolution {
    BosonicOperator c2;
    Vector c;
    double residual = 0.0;     // ||A c - b|| relative to ||b|| (scaled system)
    double residual_abs = 0.0; // unscaled ||A c - b||, in rate units for eom rows
    bool feasible = true;
};

/// Minimum-2-norm c with A c = b via the dual normal equations and a
/// spectral-cutoff pseudo-inverse; infeasible systems are flagged, not
/// thrown.
LeastNormSolution least_norm_solve(const ConstraintSystem& sys, int m);

/// K update induced by a contraction-free two-body correction (the
/// Delta_2 map).
Matrix k_update(const BosonicOperator& c2, int N, double nk);

/// Right side of the K-matrix EOM expressed through the RDM derivatives.
Matrix t2_matrix(const BosonicOperator& rho1, const KMatrix& k, const BosonicOperator& r1,
                 const BosonicOperator& r2, int N);

/// Rank-one-ansatz correction for orders above two: sum_i a_i
/// [|phi_i><phi_i|]^irr with the coefficients fixed by first-order
/// perturbation theory. In eom mode `deriv` must hold the current
/// derivative of rho_o.
BosonicOperator mazziotti_correction(const BosonicOperator& rho_o, double epsilon,
                                     CorrectionMode mode, double eta = 0.0,
                                     const BosonicOperator* deriv = nullptr);

struct CorrectionLogEntry {
    double t = 0.0;
    CorrectionMode mode = CorrectionMode::none;
    int order = 2;
    int d = 0;
    int dprime = 0;
    double cnorm = 0.0;
    double residual = 0.0;
    int iterations = 0;
    std::string status; // "ok", "max_iter", "infeasible", "identity"
};

using CorrectionLog = std::function<void(const CorrectionLogEntry&)>;

/// Iterative minimal-invasive purification of the family after one output
/// step: order 2 via the constrained least-norm solve, orders above two
/// via the rank-one ansatz, bottom-up with reducible-part updates.
/// Returns false when some order hit the iteration cap (the run carries
/// on with the last iterate).
bool purify_family(std::vector<BosonicOperator>& rhos, const ModelSpec& spec, double epsilon,
                   int max_iter, double t, const CorrectionLog& log);

/// EOM-correction state for one trajectory: corrects the derivative
/// family inside every RHS evaluation. Throws CorrectionSolveError when
/// the quadratic program has no solution.
class EomCorrector {
public:
    EomCorrector(double epsilon, double eta) : epsilon_(epsilon), eta_(eta) {}

    /// `spec` is the model in the frame of the state matrices (the
    /// rotated tensor when running in the one-body gauge).
    void apply(double t, const ModelSpec& spec, const std::vector<BosonicOperator>& rhos,
               std::vector<BosonicOperator>& derivs);

    /// Summary of the solves since the previous drain (for the per-step
    /// correction log).
    CorrectionLogEntry drain_summary(double t);

private:
    double epsilon_;
    double eta_;
    long solves_ = 0;
    long soft_solves_ = 0;
    int last_d_ = 0;
    int last_dprime_ = 0;
    double last_cnorm_ = 0.0;
    double last_residual_ = 0.0;
};

} // namespace bbh

#endif
