#include "bbh/fock.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace bbh {

int order_of(const OccupationVector& occ)
{
    int o = 0;
    for (int n : occ) {
        if (n < 0)
            throw Error("occupation numbers must be non-negative");
        o += n;
    }
    return o;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k)
{
    if (k > n)
        return 0;
    if (k > n - k)
        k = n - k;
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i; // exact: C(n-k+i, i) is integral
        if (r > UINT64_MAX)
            throw Error("binomial overflow");
    }
    return static_cast<std::uint64_t>(r);
}

std::uint64_t fock_dimension(int m, int o)
{
    if (m < 1 || o < 0)
        throw Error("fock_dimension: need m >= 1, o >= 0");
    return binomial(static_cast<std::uint64_t>(o) + m - 1, m - 1);
}

FockBasis::FockBasis(int m, int o) : m_(m), o_(o)
{
    if (m < 1 || o < 0)
        throw Error("FockBasis: need m >= 1, o >= 0");
    const std::uint64_t d = fock_dimension(m, o);
    states_.reserve(d);
    OccupationVector cur(m, 0);
    // descending lexicographic: fill modes left to right, highest count first
    struct Frame {
        int mode;
        int next; // occupation to try at this mode (counts down)
        int left; // particles not yet placed before this mode
    };
    std::vector<Frame> stack;
    stack.push_back({0, o, o});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.mode == m - 1) {
            cur[f.mode] = f.left;
            index_.emplace(pack_key(cur), states_.size());
            states_.push_back(cur);
            stack.pop_back();
            continue;
        }
        if (f.next < 0) {
            stack.pop_back();
            continue;
        }
        cur[f.mode] = f.next;
        const int left = f.left - f.next;
        --f.next;
        stack.push_back({f.mode + 1, left, left});
    }
    if (states_.size() != d)
        throw Error("fock enumeration size mismatch");
}

namespace {
std::mutex g_basis_mutex;
std::map<std::pair<int, int>, std::shared_ptr<const FockBasis>> g_basis_cache;

std::mutex g_table_mutex;
std::map<std::tuple<int, int, int>, std::shared_ptr<const ComposeTable>> g_table_cache;
} // namespace

std::shared_ptr<const FockBasis> FockBasis::basis_locked(int m, int o)
{
    auto key = std::make_pair(m, o);
    auto it = g_basis_cache.find(key);
    if (it != g_basis_cache.end())
        return it->second;
    auto basis = std::shared_ptr<FockBasis>(new FockBasis(m, o));
    g_basis_cache.emplace(key, basis);
    return basis;
}

std::shared_ptr<const FockBasis> FockBasis::make(int m, int o)
{
    std::lock_guard<std::mutex> lock(g_basis_mutex);
    auto key = std::make_pair(m, o);
    auto it = g_basis_cache.find(key);
    if (it != g_basis_cache.end() && !it->second->raised_.empty())
        return it->second;
    auto basis = std::const_pointer_cast<FockBasis>(basis_locked(m, o));
    auto up = basis_locked(m, o + 1);
    basis->raised_.resize(basis->states_.size());
    OccupationVector v;
    for (std::size_t i = 0; i < basis->states_.size(); ++i) {
        v = basis->states_[i];
        basis->raised_[i].resize(m);
        for (int r = 0; r < m; ++r) {
            ++v[r];
            basis->raised_[i][r] = up->rank(v);
            --v[r];
        }
    }
    return basis;
}

std::uint64_t FockBasis::pack_key(const OccupationVector& v)
{
    if (v.size() > 8)
        throw Error("FockBasis supports at most 8 modes");
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > 255)
            throw Error("occupation too large for packed key");
        key = (key << 8) | static_cast<std::uint64_t>(v[i]);
    }
    return key;
}

std::size_t FockBasis::rank(const OccupationVector& v) const
{
    if (static_cast<int>(v.size()) != m_)
        throw Error("rank: mode count mismatch");
    if (order_of(v) != o_)
        throw Error("rank: occupation sum does not match basis order");
    auto it = index_.find(pack_key(v));
    if (it == index_.end())
        throw Error("rank: state not in basis");
    return it->second;
}

ComposeTable::ComposeTable(int m, int o1, int o2) : m_(m), o1_(o1), o2_(o2)
{
    auto b1 = FockBasis::make(m, o1);
    auto b2 = FockBasis::make(m, o2);
    auto bt = FockBasis::make(m, o1 + o2);
    d1_ = b1->dim();
    d2_ = b2->dim();
    idx_.resize(d1_ * d2_);
    w_.resize(d1_ * d2_);
    OccupationVector sum(m, 0);
    for (std::size_t i = 0; i < d1_; ++i) {
        const auto& a = b1->state(i);
        for (std::size_t j = 0; j < d2_; ++j) {
            const auto& c = b2->state(j);
            std::uint64_t prod = 1;
            for (int r = 0; r < m; ++r) {
                sum[r] = a[r] + c[r];
                prod *= binomial(static_cast<std::uint64_t>(sum[r]), static_cast<std::uint64_t>(c[r]));
            }
            idx_[i * d2_ + j] = bt->rank(sum);
            w_[i * d2_ + j] = std::sqrt(static_cast<double>(prod));
        }
    }
}

std::shared_ptr<const ComposeTable> ComposeTable::make(int m, int o1, int o2)
{
    {
        std::lock_guard<std::mutex> lock(g_table_mutex);
        auto it = g_table_cache.find(std::make_tuple(m, o1, o2));
        if (it != g_table_cache.end())
            return it->second;
    }
    auto table = std::shared_ptr<const ComposeTable>(new ComposeTable(m, o1, o2));
    std::lock_guard<std::mutex> lock(g_table_mutex);
    auto [it, inserted] = g_table_cache.emplace(std::make_tuple(m, o1, o2), table);
    return it->second;
}

std::size_t compose_index(int m, int o1, std::size_t i, int o2, std::size_t j)
{
    return ComposeTable::make(m, o1, o2)->index(i, j);
}

} // namespace bbh
