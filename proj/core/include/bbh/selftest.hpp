#ifndef BBH_SELFTEST_HPP
#define BBH_SELFTEST_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace bbh {

struct SelftestResult {
    std::string name;
    double worst = 0.0; // largest observed deviation
    double tol = 0.0;
    bool pass = false;
};

/// Property suites checking the operator algebra, the cluster recursion
/// and the analytic reference states against brute-force first
/// quantization. Deterministic (fixed seeds).
std::vector<SelftestResult> run_selftest();

/// Prints one PASS/FAIL line per property; returns false if any failed.
bool report_selftest(std::ostream& os);

} // namespace bbh

#endif
