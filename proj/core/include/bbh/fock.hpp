#ifndef BBH_FOCK_HPP
#define BBH_FOCK_HPP

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bbh {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Occupation numbers of m single-particle modes; the order of the state
/// is the total particle count sum(occ).
using OccupationVector = std::vector<int>;

int order_of(const OccupationVector& occ);

/// Exact binomial coefficient; throws bbh::Error on uint64 overflow.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Number of bosonic number states with o particles in m modes,
/// binom(o+m-1, m-1). Throws on overflow.
std::uint64_t fock_dimension(int m, int o);

/// Enumeration of all bosonic number states for (m, o) in descending
/// lexicographic order, so (o,0,...,0) has rank 0. Immutable after
/// construction; instances are shared through make().
class FockBasis {
public:
    static std::shared_ptr<const FockBasis> make(int m, int o);

    int modes() const { return m_; }
    int order() const { return o_; }
    std::size_t dim() const { return states_.size(); }

    const OccupationVector& state(std::size_t rank) const { return states_[rank]; }

    /// Rank of a valid occupation vector; throws if v does not belong
    /// to this basis.
    std::size_t rank(const OccupationVector& v) const;

    /// Rank of v + 1_r in the (m, o+1) basis.
    const std::vector<std::size_t>& raised_ranks(std::size_t rank) const { return raised_[rank]; }

    const std::vector<OccupationVector>& states() const { return states_; }

private:
    FockBasis(int m, int o);

    static std::shared_ptr<const FockBasis> basis_locked(int m, int o);
    static std::uint64_t pack_key(const OccupationVector& v);

    int m_;
    int o_;
    std::vector<OccupationVector> states_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
    // raised_[i][r] = rank of state(i) + 1_r at order o+1
    std::vector<std::vector<std::size_t>> raised_;
};

/// Precomputed composition table for joining an (m, o1) state with an
/// (m, o2) state: target rank at order o1+o2 and the square-root
/// binomial weight sqrt(prod_r binom(a_r+c_r, c_r)) of Eq.-level
/// occupation combinatorics. Built lazily and cached per (m, o1, o2).
class ComposeTable {
public:
    static std::shared_ptr<const ComposeTable> make(int m, int o1, int o2);

    std::size_t index(std::size_t i, std::size_t j) const { return idx_[i * d2_ + j]; }
    double weight(std::size_t i, std::size_t j) const { return w_[i * d2_ + j]; }

    int o1() const { return o1_; }
    int o2() const { return o2_; }

private:
    ComposeTable(int m, int o1, int o2);

    int m_, o1_, o2_;
    std::size_t d1_, d2_;
    std::vector<std::size_t> idx_;
    std::vector<double> w_;
};

/// rank(unrank(i) + unrank(j)); table-backed.
std::size_t compose_index(int m, int o1, std::size_t i, int o2, std::size_t j);

} // namespace bbh

#endif
