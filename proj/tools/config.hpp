#ifndef BBH_TOOLS_CONFIG_HPP
#define BBH_TOOLS_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bbh/bbgky.hpp"
#include "bbh/hamiltonian.hpp"

namespace bbh::tools {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Parsed key/value document plus provenance for diagnostics.
struct KeyValueFile {
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;
    std::string path;

    static KeyValueFile parse_file(const std::string& path);
    void apply_override(const std::string& key_equals_value);

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int_or(const std::string& key, int fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    [[noreturn]] void fail(const std::string& key, const std::string& message) const;
};

enum class InitialStateKind { fock, bec, noon };

struct RunConfig {
    ModelSpec model;
    InitialStateKind initial_kind = InitialStateKind::fock;
    OccupationVector initial_occupation;
    Eigen::VectorXcd initial_orbital;
    double noon_theta = 0.0;

    int truncation_order = 2;
    CorrectionMode mode = CorrectionMode::none;
    double epsilon = -1e-10;
    double eta = 10.0;
    int max_iter = 500;

    double t_final = 100.0;
    IntegratorOptions integrator;

    bool compare_to_exact = false;
    int report_order = 0;  // exact runs: highest order to report (default min(N,4))
    int cluster_order = 0; // exact runs: highest cluster norm order
    std::string output_dir = "out";

    KeyValueFile raw; // echoed into the metadata
};

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

} // namespace bbh::tools

#endif
