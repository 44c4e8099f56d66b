#ifndef BBH_REPRESENTABILITY_HPP
#define BBH_REPRESENTABILITY_HPP

#include <map>
#include <optional>

#include "bbh/hamiltonian.hpp"
#include "bbh/numerics.hpp"

namespace bbh {

/// Normalized particle-hole matrix over ordered mode pairs (i, j), row
/// index i*m + j; positive semi-definiteness is the K-condition.
struct KMatrix {
    Matrix elements;      // m^2 x m^2 hermitian
    double normalization; // N_K = N(N+m-1) - N^2 tr(rho1^2)
    int m = 0;
};

KMatrix k_matrix(const BosonicOperator& rho1, const BosonicOperator& rho2, int N);

/// First-crossing times of spectral minima below the threshold.
struct RepresentabilityReport {
    double epsilon = -1e-10;
    int m = 0;
    std::vector<double> min_eigenvalue;        // per order 1..obar at the last check
    double xi_min = 0.0;                       // K-matrix minimum at the last check
    std::map<int, double> t_neg;               // order -> first crossing time
    std::optional<double> t_neg_k;             // K-condition first crossing

    /// Eigen-decomposes every rho_o and K, records minima, updates the
    /// first-crossing table.
    void check(const std::vector<BosonicOperator>& rhos, int N, double t);
};

} // namespace bbh

#endif
