#include "bbh/cluster.hpp"

#include <algorithm>
#include <sstream>

namespace bbh {

int PartitionSymbol::order() const
{
    int o = 0;
    for (auto [sigma, n] : parts)
        o += sigma * n;
    return o;
}

std::string PartitionSymbol::str() const
{
    std::ostringstream os;
    os << "F";
    for (auto [sigma, n] : parts)
        os << "_" << sigma << "^" << n;
    return os.str();
}

namespace {
void partitions_rec(int left, int max_part, std::vector<int>& acc,
                    std::vector<PartitionSymbol>& out)
{
    if (left == 0) {
        PartitionSymbol s;
        // acc holds parts in non-increasing order; fold into (sigma, n)
        // pairs with ascending sigma
        for (auto it = acc.rbegin(); it != acc.rend(); ++it) {
            if (!s.parts.empty() && s.parts.back().first == *it)
                ++s.parts.back().second;
            else
                s.parts.emplace_back(*it, 1);
        }
        out.push_back(std::move(s));
        return;
    }
    for (int p = std::min(left, max_part); p >= 1; --p) {
        acc.push_back(p);
        partitions_rec(left - p, p, acc, out);
        acc.pop_back();
    }
}
} // namespace

std::vector<PartitionSymbol> integer_partitions(int o)
{
    if (o < 1)
        throw Error("integer_partitions: need o >= 1");
    std::vector<PartitionSymbol> out;
    std::vector<int> acc;
    partitions_rec(o, o, acc, out);
    return out;
}

ClusterSet::ClusterSet(int m, std::vector<BosonicOperator> clusters)
    : m_(m), clusters_(std::move(clusters))
{
    for (std::size_t i = 0; i < clusters_.size(); ++i)
        if (clusters_[i].order() != static_cast<int>(i) + 1 || clusters_[i].modes() != m_)
            throw Error("ClusterSet: cluster family is inconsistent");
}

void ClusterSet::append(BosonicOperator c)
{
    if (c.order() != max_order() + 1 || c.modes() != m_)
        throw Error("ClusterSet::append: expected the next-order cluster");
    clusters_.push_back(std::move(c));
}

const BosonicOperator& ClusterSet::eval_symbol(const PartitionSymbol& s)
{
    auto it = cache_.find(s);
    if (it != cache_.end())
        return it->second;
    for (auto [sigma, n] : s.parts)
        if (sigma > max_order())
            throw Error("eval_symbol: missing prerequisite cluster of order " +
                        std::to_string(sigma));

    BosonicOperator value;
    if (s.parts.size() == 1) {
        const auto [sigma, n] = s.parts[0];
        if (n == 1) {
            value = cluster(sigma);
        } else {
            PartitionSymbol prev{{{sigma, n - 1}}};
            value = join(eval_symbol(prev), cluster(sigma));
            value *= 1.0 / static_cast<double>(n);
        }
    } else {
        PartitionSymbol head = s;
        const auto tail_part = head.parts.back();
        head.parts.pop_back();
        PartitionSymbol tail{{tail_part}};
        value = join(eval_symbol(head), eval_symbol(tail));
    }
    auto [pos, inserted] = cache_.emplace(s, std::move(value));
    return pos->second;
}

namespace {
void check_family(const std::vector<BosonicOperator>& rhos, double tol)
{
    if (rhos.empty())
        throw Error("cluster: empty RDM family");
    const int m = rhos[0].modes();
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        if (rhos[i].order() != static_cast<int>(i) + 1 || rhos[i].modes() != m)
            throw Error("cluster: RDM family must be rho_1..rho_obar over one mode set");
        if (std::abs(rhos[i].trace() - 1.0) > 1e-6)
            throw Error("cluster: rho_" + std::to_string(i + 1) + " is not trace-one");
    }
    for (std::size_t i = 0; i + 1 < rhos.size(); ++i) {
        BosonicOperator defect = partial_trace(rhos[i + 1], 1);
        defect -= rhos[i];
        const double d = trace_norm(defect);
        if (d > tol) {
            std::ostringstream os;
            os << "cluster: compatibility defect ||tr_1(rho_" << i + 2 << ") - rho_" << i + 1
               << "||_1 = " << d << " exceeds " << tol;
            throw Error(os.str());
        }
    }
}
} // namespace

ClusterSet compute_clusters(const std::vector<BosonicOperator>& rhos, double tol)
{
    check_family(rhos, tol);
    const int m = rhos[0].modes();
    const int obar = static_cast<int>(rhos.size());
    ClusterSet set(m, {rhos[0]}); // c_1 = rho_1
    for (int o = 2; o <= obar; ++o) {
        // symbols at order o only involve clusters of order < o
        BosonicOperator c = rhos[static_cast<std::size_t>(o - 1)];
        for (const auto& s : integer_partitions(o)) {
            if (s.trivial())
                continue;
            c -= set.eval_symbol(s);
        }
        set.append(std::move(c));
    }
    return set;
}

BosonicOperator closure(const std::vector<BosonicOperator>& rhos, ClusterSet& clusters)
{
    const int m = rhos[0].modes();
    const int obar = static_cast<int>(rhos.size());
    const int top = obar + 1;

    // eta: the expansion at order obar+1 with the unknown top cluster zero
    BosonicOperator eta(m, top);
    for (const auto& s : integer_partitions(top)) {
        if (s.trivial())
            continue;
        eta += clusters.eval_symbol(s);
    }

    // reducible part of the unknown rho_{obar+1} from its known traces
    std::vector<BosonicOperator> rho_traces;
    rho_traces.push_back(BosonicOperator::vacuum_scalar(m, 1.0));
    for (const auto& r : rhos)
        rho_traces.push_back(r);
    BosonicOperator rho_red = reducible_from_traces(rho_traces, top, m);

    // contraction-free part of eta via the UID
    BosonicOperator eta_irr = uid_split(eta).irr;

    rho_red += eta_irr;
    return rho_red;
}

BosonicOperator closure(const std::vector<BosonicOperator>& rhos, double tol)
{
    ClusterSet set = compute_clusters(rhos, tol);
    return closure(rhos, set);
}

} // namespace bbh
