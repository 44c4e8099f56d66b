#ifndef BBH_BBGKY_HPP
#define BBH_BBGKY_HPP

#include <functional>
#include <optional>

#include "bbh/cluster.hpp"
#include "bbh/correction.hpp"
#include "bbh/hamiltonian.hpp"
#include "bbh/numerics.hpp"

namespace bbh {

/// The RDM family rho_1..rho_obar at one instant.
struct HierarchyState {
    std::vector<BosonicOperator> rhos; // rhos[o-1] has order o
    double time = 0.0;

    int truncation_order() const { return static_cast<int>(rhos.size()); }
    const BosonicOperator& rho(int o) const { return rhos[static_cast<std::size_t>(o - 1)]; }
    BosonicOperator& rho(int o) { return rhos[static_cast<std::size_t>(o - 1)]; }

    /// Trace, hermiticity-by-construction and compatibility checks;
    /// throws on violation.
    void validate(double trace_tol = 1e-8, double compat_tol = 1e-6) const;
};

/// Hermitian collision term -i I_o(rho_{o+1}); traceless, and
/// contraction-free for a contraction-free argument.
BosonicOperator collision_integral(const BosonicOperator& rho_next, const ModelSpec& spec, int o);

/// Derivatives d rho_o / dt = -i [H_o, rho_o] + collision term, with the
/// top order closed by the compatible cluster closure (or exactly when
/// obar = N). Sector Hamiltonians are supplied prebuilt.
std::vector<BosonicOperator> hierarchy_rhs(const std::vector<BosonicOperator>& rhos,
                                           const ModelSpec& spec,
                                           const std::vector<Matrix>& hams);

struct NpRate {
    double lambda = 0.0;
    double rate = 0.0;   // d lambda / dt
    int block = 0;       // degeneracy block id
    bool degenerate = false;
};

/// Natural-population rates <phi_r| (-i I_o) |phi_r>; eigenvalues within
/// 1e-12 of each other form one block whose total rate is reported on
/// every member (intra-block resolution is basis-dependent).
std::vector<NpRate> np_derivative(const BosonicOperator& rho_o, const BosonicOperator& coll);

struct PropagateOptions {
    CorrectionMode mode = CorrectionMode::none;
    double epsilon = -1e-10;
    double eta = 10.0;
    int max_iter = 500;
    IntegratorOptions integrator;
    CorrectionLog correction_log; // optional per-step correction records
};

struct HierarchySample {
    double t = 0.0;
    const HierarchyState* state = nullptr;
    long steps = 0; // accepted integrator steps since the previous sample
};

enum class RunStatus {
    ok,
    instability,         // integrator step underflow
    correction_failure,  // correction solve kept failing
};

struct PropagateResult {
    RunStatus status = RunStatus::ok;
    double t_reached = 0.0;
    long total_steps = 0;
    long rejected_steps = 0;
};

/// Propagates the truncated hierarchy. Without corrections only the top
/// order is integrated and lower orders are recovered by partial traces;
/// with corrections all orders are co-integrated. The sink runs at every
/// output grid point.
PropagateResult propagate(const ModelSpec& spec, const HierarchyState& initial, double t_final,
                          const PropagateOptions& opts,
                          const std::function<void(const HierarchySample&)>& sink);

/// Real packing of the rho family (lower triangles, re/im interleaved,
/// real diagonal) used as the integrator state vector.
std::size_t packed_size(int m, const std::vector<int>& orders);
void pack_state(const std::vector<BosonicOperator>& rhos, Vector& y);
void unpack_state(const Vector& y, std::vector<BosonicOperator>& rhos);

/// Initial RDM family of truncation order obar for a CI state.
HierarchyState initial_hierarchy(const struct CIState& a, int obar);

} // namespace bbh

#endif
