#ifndef BBH_NUMERICS_HPP
#define BBH_NUMERICS_HPP

#include <Eigen/Dense>
#include <functional>

#include "bbh/operator.hpp"

namespace bbh {

using Vector = Eigen::VectorXd;

struct EigResult {
    Eigen::VectorXd eigenvalues;  // ascending
    Matrix eigenvectors;          // orthonormal columns, phase-fixed
};

/// Hermitian eigendecomposition with a deterministic phase convention:
/// the first significant component of each eigenvector is made real
/// positive.
EigResult eigh(const Matrix& a);
EigResult eigh(const BosonicOperator& b);

/// y = pinv(aat) * b with eigenvalues below cutoff * max treated as zero;
/// aat must be symmetric positive semi-definite.
Vector solve_dual(const Eigen::MatrixXd& aat, const Vector& b, double cutoff = 1e-12);

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h0 = 0.0;      // 0 = automatic
    double h_min = 1e-13;
    double output_dt = 0.1;
};

enum class IntegrateStatus {
    ok,
    step_underflow,    // h fell below h_min (stiffness signature)
    rhs_failure,       // RHS kept failing at the minimum step size
};

struct IntegrateResult {
    IntegrateStatus status = IntegrateStatus::ok;
    double t_reached = 0.0;
    long total_steps = 0;
    long rejected_steps = 0;
};

/// Thrown by a RHS to signal a failure that should first be retried with
/// a smaller step (e.g. an infeasible correction solve at a trial state).
class RhsEvaluationError : public Error {
public:
    using Error::Error;
};

using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

/// Called at every output grid point. `steps` counts accepted steps since
/// the previous output. Return true if y was modified in place; the
/// integrator then restarts from the modified state.
using OutputHook = std::function<bool(double t, Vector& y, long steps)>;

/// Embedded Dormand-Prince 5(4) pair with PI step-size control and
/// 4th-order dense output at the write-out grid. When `hook_mutates` is
/// set, steps land exactly on grid points so the hook may alter the state.
IntegrateResult integrate(const Rhs& f, Vector y0, double t0, double t1,
                          const IntegratorOptions& opts, const OutputHook& on_output,
                          bool hook_mutates = false);

} // namespace bbh

#endif
