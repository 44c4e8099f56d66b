#include "bbh/representability.hpp"

#include <cmath>

namespace bbh {

KMatrix k_matrix(const BosonicOperator& rho1, const BosonicOperator& rho2, int N)
{
    const int m = rho1.modes();
    if (rho2.modes() != m || rho1.order() != 1 || rho2.order() != 2)
        throw Error("k_matrix: need (rho_1, rho_2) over one mode set");
    auto basis2 = FockBasis::make(m, 2);
    const Matrix r1 = rho1.to_matrix(); // mode-indexed

    const double tr_rho1_sq = (r1 * r1).trace().real();
    const double nk = N * (N + m - 1.0) - N * static_cast<double>(N) * tr_rho1_sq;

    auto f = [](int a, int b) { return a == b ? 1.0 : 1.0 / std::sqrt(2.0); };
    // f_ij = sqrt((1+delta_ij)/2)

    OccupationVector occ(m, 0);
    auto pair_rank = [&](int a, int b) {
        std::fill(occ.begin(), occ.end(), 0);
        ++occ[static_cast<std::size_t>(a)];
        ++occ[static_cast<std::size_t>(b)];
        return basis2->rank(occ);
    };

    KMatrix k;
    k.m = m;
    k.normalization = nk;
    k.elements = Matrix::Zero(m * m, m * m);
    const double nn1 = static_cast<double>(N) * (N - 1.0);
    for (int i1 = 0; i1 < m; ++i1)
        for (int j1 = 0; j1 < m; ++j1)
            for (int i2 = 0; i2 < m; ++i2)
                for (int j2 = 0; j2 < m; ++j2) {
                    Complex val = nn1 * f(i2, j1) * f(i1, j2) *
                                  rho2(pair_rank(i2, j1), pair_rank(i1, j2));
                    if (j1 == j2)
                        val += static_cast<double>(N) * r1(i2, i1);
                    val -= static_cast<double>(N) * N * r1(j1, i1) * r1(i2, j2);
                    k.elements(i1 * m + j1, i2 * m + j2) = val / nk;
                }
    return k;
}

void RepresentabilityReport::check(const std::vector<BosonicOperator>& rhos, int N, double t)
{
    m = rhos.empty() ? 0 : rhos[0].modes();
    min_eigenvalue.resize(rhos.size());
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        EigResult e = eigh(rhos[i]);
        min_eigenvalue[i] = e.eigenvalues(0);
        const int o = static_cast<int>(i) + 1;
        if (min_eigenvalue[i] < epsilon && t_neg.find(o) == t_neg.end())
            t_neg.emplace(o, t);
    }
    if (rhos.size() >= 2) {
        KMatrix k = k_matrix(rhos[0], rhos[1], N);
        EigResult e = eigh(k.elements);
        xi_min = e.eigenvalues(0);
        if (xi_min < epsilon && !t_neg_k)
            t_neg_k = t;
    }
}

} // namespace bbh
