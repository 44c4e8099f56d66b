#ifndef BBH_ORACLE_HPP
#define BBH_ORACLE_HPP

#include <functional>

#include "bbh/hamiltonian.hpp"
#include "bbh/numerics.hpp"

namespace bbh {

/// Full-CI expansion coefficients over FockBasis(m, N).
struct CIState {
    int m = 0;
    int N = 0;
    Eigen::VectorXcd amplitudes;
    double time = 0.0;

    double norm() const { return amplitudes.norm(); }
    void normalize() { amplitudes /= amplitudes.norm(); }
};

/// All particles in the orbital sum_r coeffs[r] phi_r.
CIState product_bec(int m, int N, const Eigen::VectorXcd& coeffs);

/// Single permanent |k> (multi-orbital mean-field state).
CIState permanent_state(const OccupationVector& k, int N);

/// (|N,0,...> + e^{i theta} |0,...,N>)/sqrt(2), extreme modes.
CIState noon_state(int m, int N, double theta);

/// o-RDM of the CI state with probabilistic normalization tr = 1.
BosonicOperator extract_rdm(const CIState& a, int o);

/// Closed-form RDMs for cross-validation.
BosonicOperator bec_rdm(int m, int o, const Eigen::VectorXcd& coeffs);
BosonicOperator permanent_rdm(const OccupationVector& k, int N, int o);
BosonicOperator noon_rdm(int m, int N, int o, double theta);

struct CISample {
    double t;
    CIState state;
    long steps;
};

/// i dA/dt = H_N A in the fixed basis; same integrator and tolerances as
/// the hierarchy runs so trajectory differences measure truncation error.
IntegrateResult exact_propagate(const ModelSpec& spec, const CIState& a0, double t_final,
                                const IntegratorOptions& opts,
                                const std::function<void(const CISample&)>& sink);

/// ||c_o||_1 for o = 1..max_o from the exact RDMs of the state.
std::vector<double> exact_cluster_norms(const CIState& a, int max_o);

} // namespace bbh

#endif
