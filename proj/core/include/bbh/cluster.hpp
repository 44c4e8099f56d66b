#ifndef BBH_CLUSTER_HPP
#define BBH_CLUSTER_HPP

#include <map>
#include <utility>
#include <vector>

#include "bbh/operator.hpp"

namespace bbh {

/// Integer partition written as (part size, multiplicity) pairs with
/// strictly increasing part sizes; labels one class of expansion terms.
struct PartitionSymbol {
    std::vector<std::pair<int, int>> parts; // (sigma_r, n_r), sigma ascending
    int order() const;
    bool operator<(const PartitionSymbol& other) const { return parts < other.parts; }
    bool trivial() const { return parts.size() == 1 && parts[0].second == 1; }
    std::string str() const;
};

/// All integer partitions of o in a deterministic order (largest parts
/// first). The expansion at order o uses all of them except the trivial
/// partition {o} itself.
std::vector<PartitionSymbol> integer_partitions(int o);

/// Clusters c_1..c_obar plus the cache of evaluated symbols. c_1 = rho_1.
class ClusterSet {
public:
    ClusterSet(int m, std::vector<BosonicOperator> clusters);

    int max_order() const { return static_cast<int>(clusters_.size()); }
    const BosonicOperator& cluster(int o) const { return clusters_[static_cast<std::size_t>(o - 1)]; }

    /// Adds the next-order cluster; evaluated symbols stay valid because
    /// they only reference clusters of lower order.
    void append(BosonicOperator c);

    /// Evaluates the class of expansion terms labeled by s via the two
    /// recursion rules; results are cached per symbol.
    const BosonicOperator& eval_symbol(const PartitionSymbol& s);

private:
    int m_;
    std::vector<BosonicOperator> clusters_;
    std::map<PartitionSymbol, BosonicOperator> cache_;
};

/// Clusters from a compatible trace-one RDM family rho_1..rho_obar;
/// aborts when tr_1(rho_{o+1}) deviates from rho_o beyond tol.
ClusterSet compute_clusters(const std::vector<BosonicOperator>& rhos, double tol = 1e-6);

/// Compatible closure approximation for rho_{obar+1}: the cluster
/// expansion with the unknown top cluster dropped, its contraction-full
/// part replaced by the one determined by the propagated RDMs.
BosonicOperator closure(const std::vector<BosonicOperator>& rhos, double tol = 1e-6);

/// Same, reusing an already computed ClusterSet for the family.
BosonicOperator closure(const std::vector<BosonicOperator>& rhos, ClusterSet& clusters);

} // namespace bbh

#endif
