#ifndef BBH_FIRSTQ_HPP
#define BBH_FIRSTQ_HPP

#include "bbh/hamiltonian.hpp"
#include "bbh/operator.hpp"

namespace bbh {

/// Brute-force first-quantization reference implementations. Everything
/// here works on dense m^o tensor-product matrices with explicit
/// permutation sums and is independent of the number-state algebra it is
/// used to check. Exponential cost; intended for m <= 3, o <= 4.
namespace firstq {

/// Isometry from the (m, o) number-state basis into the m^o product space:
/// column n is the normalized symmetric tensor of |vec n>.
Matrix embedding(int m, int o);

/// Symmetrizer S_o on the m^o product space (sum over all o! permutations
/// of the tensor factors, divided by o!).
Matrix symmetrizer(int m, int o);

Matrix embed(const BosonicOperator& b);
BosonicOperator project(const Matrix& dense, int m, int o);

/// binom(o1+o2, o1) * S (A (x) B) S, projected back to number states;
/// the dense counterpart of the joining super-operator.
BosonicOperator join(const BosonicOperator& a, const BosonicOperator& b);

/// Partial trace over the last k tensor factors, projected back.
BosonicOperator partial_trace(const BosonicOperator& b, int k);

/// One class of cluster-expansion terms, evaluated densely:
/// (o! / (prod_r n_r! sigma_r!^n_r)) * S (c_{s1} (x) ... (x) c_{sK}) S
/// with the clusters in ascending part order.
BosonicOperator symbol(const std::vector<std::pair<int, int>>& parts,
                       const std::vector<BosonicOperator>& clusters);

/// Clusters of the symmetrized expansion computed densely from the RDMs.
std::vector<BosonicOperator> clusters(const std::vector<BosonicOperator>& rhos);

/// Collision integral at o = 1 via the conditional one-body states
/// <phi_i| rho_2 |phi_j> contracted densely; returns the hermitian
/// -i I_1(rho_2) form.
BosonicOperator collision_first_quantized(const BosonicOperator& rho2, const ModelSpec& spec);

} // namespace firstq
} // namespace bbh

#endif
