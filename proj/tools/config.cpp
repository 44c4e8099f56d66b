#include "config.hpp"

#include <fstream>
#include <sstream>

namespace bbh::tools {

namespace {
std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> tokens(const std::string& s)
{
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string t;
    while (is >> t)
        out.push_back(t);
    return out;
}

/// a value token is either "re" or "re,im"
Complex parse_complex(const std::string& t)
{
    const auto comma = t.find(',');
    if (comma == std::string::npos)
        return Complex(std::stod(t), 0.0);
    return Complex(std::stod(t.substr(0, comma)), std::stod(t.substr(comma + 1)));
}
} // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    KeyValueFile kv;
    kv.path = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        kv.values[key] = value;
        kv.lines[key] = lineno;
    }
    return kv;
}

void KeyValueFile::apply_override(const std::string& kv)
{
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: " + kv);
    values[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    lines[trim(kv.substr(0, eq))] = 0; // command line
}

std::string KeyValueFile::get(const std::string& key) const
{
    auto it = values.find(key);
    if (it == values.end())
        throw ConfigError(path + ": missing required key '" + key + "'");
    return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const
{
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key) const
{
    try {
        return std::stod(get(key));
    } catch (const std::invalid_argument&) {
        fail(key, "not a number");
    }
}

double KeyValueFile::get_double_or(const std::string& key, double fallback) const
{
    return has(key) ? get_double(key) : fallback;
}

int KeyValueFile::get_int(const std::string& key) const
{
    try {
        return std::stoi(get(key));
    } catch (const std::invalid_argument&) {
        fail(key, "not an integer");
    }
}

int KeyValueFile::get_int_or(const std::string& key, int fallback) const
{
    return has(key) ? get_int(key) : fallback;
}

bool KeyValueFile::get_bool_or(const std::string& key, bool fallback) const
{
    if (!has(key))
        return fallback;
    const std::string v = get(key);
    if (v == "true" || v == "on" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "off" || v == "no" || v == "0")
        return false;
    fail(key, "not a boolean (use true/false)");
}

void KeyValueFile::fail(const std::string& key, const std::string& message) const
{
    auto it = lines.find(key);
    const std::string where =
        it != lines.end() && it->second > 0 ? path + ":" + std::to_string(it->second) : path;
    throw ConfigError(where + ": key '" + key + "': " + message);
}

namespace {
ModelSpec parse_model(const KeyValueFile& kv)
{
    const std::string kind = kv.get_or("model", "dimer");
    ModelSpec spec;
    if (kind == "dimer") {
        const int N = kv.get_int("N");
        const double J = kv.get_double_or("J", 1.0);
        if (kv.has("U"))
            spec = bose_hubbard_dimer(J, kv.get_double("U"), N);
        else
            spec = bose_hubbard_dimer_lambda(J, kv.get_double("Lambda"), N);
    } else if (kind == "inline") {
        spec.m = kv.get_int("m");
        spec.N = kv.get_int("N");
        const auto htok = tokens(kv.get("h"));
        if (static_cast<int>(htok.size()) != spec.m * spec.m)
            kv.fail("h", "need m*m row-major entries");
        spec.h = Matrix::Zero(spec.m, spec.m);
        for (int i = 0; i < spec.m; ++i)
            for (int j = 0; j < spec.m; ++j)
                spec.h(i, j) = parse_complex(htok[static_cast<std::size_t>(i * spec.m + j)]);
        spec.v.assign(static_cast<std::size_t>(spec.m) * spec.m * spec.m * spec.m,
                      Complex(0.0, 0.0));
        if (kv.has("v")) {
            const auto vtok = tokens(kv.get("v"));
            if (vtok.size() % 5 != 0)
                kv.fail("v", "need 5-tuples: i j q p value");
            for (std::size_t t = 0; t < vtok.size(); t += 5) {
                const int i = std::stoi(vtok[t]);
                const int j = std::stoi(vtok[t + 1]);
                const int q = std::stoi(vtok[t + 2]);
                const int p = std::stoi(vtok[t + 3]);
                if (i < 0 || i >= spec.m || j < 0 || j >= spec.m || q < 0 || q >= spec.m ||
                    p < 0 || p >= spec.m)
                    kv.fail("v", "mode index out of range");
                spec.v[static_cast<std::size_t>(((i * spec.m + j) * spec.m + q) * spec.m + p)] =
                    parse_complex(vtok[t + 4]);
            }
        }
    } else {
        kv.fail("model", "unknown model kind '" + kind + "'");
    }

    const std::string gauge = kv.get_or("gauge", "zero");
    if (gauge == "zero")
        spec.gauge = Gauge::zero;
    else if (gauge == "one_body")
        spec.gauge = Gauge::one_body;
    else
        kv.fail("gauge", "must be zero or one_body");

    if (kv.has("symmetry_phases")) {
        const auto stok = tokens(kv.get("symmetry_phases"));
        if (static_cast<int>(stok.size()) != spec.m)
            kv.fail("symmetry_phases", "need one angle per mode");
        spec.symmetry.phases.clear();
        for (const auto& t : stok)
            spec.symmetry.phases.push_back(std::stod(t));
    }
    spec.symmetry.enabled = kv.get_bool_or("symmetry", spec.symmetry.enabled &&
                                                           !spec.symmetry.phases.empty());
    if (spec.symmetry.enabled && static_cast<int>(spec.symmetry.phases.size()) != spec.m)
        kv.fail("symmetry", "enabled but no phases known for this model");

    try {
        spec.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("model validation failed: ") + e.what());
    }
    return spec;
}
} // namespace

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides)
{
    KeyValueFile kv = KeyValueFile::parse_file(path);
    for (const auto& o : overrides)
        kv.apply_override(o);

    RunConfig cfg;
    cfg.raw = kv;
    cfg.model = parse_model(kv);

    const auto init = tokens(kv.get_or("initial_state", "fock"));
    if (init.empty())
        kv.fail("initial_state", "empty");
    if (init[0] == "fock") {
        cfg.initial_kind = InitialStateKind::fock;
        cfg.initial_occupation.clear();
        if (static_cast<int>(init.size()) == 1) {
            // default: all particles in the first mode
            cfg.initial_occupation.assign(static_cast<std::size_t>(cfg.model.m), 0);
            cfg.initial_occupation[0] = cfg.model.N;
        } else {
            for (std::size_t i = 1; i < init.size(); ++i)
                cfg.initial_occupation.push_back(std::stoi(init[i]));
            if (static_cast<int>(cfg.initial_occupation.size()) != cfg.model.m)
                kv.fail("initial_state", "fock needs one occupation per mode");
            if (order_of(cfg.initial_occupation) != cfg.model.N)
                kv.fail("initial_state", "occupations must sum to N");
        }
    } else if (init[0] == "bec") {
        cfg.initial_kind = InitialStateKind::bec;
        if (static_cast<int>(init.size()) != cfg.model.m + 1)
            kv.fail("initial_state", "bec needs one orbital amplitude per mode");
        cfg.initial_orbital.resize(cfg.model.m);
        for (int i = 0; i < cfg.model.m; ++i)
            cfg.initial_orbital(i) = parse_complex(init[static_cast<std::size_t>(i) + 1]);
        const double n = cfg.initial_orbital.norm();
        if (n <= 0)
            kv.fail("initial_state", "zero orbital");
        cfg.initial_orbital /= n;
    } else if (init[0] == "noon") {
        cfg.initial_kind = InitialStateKind::noon;
        cfg.noon_theta = init.size() > 1 ? std::stod(init[1]) : 0.0;
    } else {
        kv.fail("initial_state", "unknown kind '" + init[0] + "'");
    }

    cfg.truncation_order = kv.get_int_or("truncation_order", 2);
    if (cfg.truncation_order < 1 || cfg.truncation_order > cfg.model.N)
        kv.fail("truncation_order", "need 1 <= obar <= N");

    const std::string mode = kv.get_or("correction", "none");
    if (mode == "none")
        cfg.mode = CorrectionMode::none;
    else if (mode == "purify")
        cfg.mode = CorrectionMode::purify;
    else if (mode == "eom")
        cfg.mode = CorrectionMode::eom;
    else
        kv.fail("correction", "must be none, purify or eom");

    cfg.epsilon = kv.get_double_or("epsilon", -1e-10);
    cfg.eta = kv.get_double_or("eta", 10.0);
    if (cfg.mode == CorrectionMode::eom && cfg.eta <= 0.0)
        kv.fail("eta", "must be positive in eom mode");
    cfg.max_iter = kv.get_int_or("max_iter", 500);

    cfg.t_final = kv.get_double("t_final");
    cfg.integrator.output_dt = kv.get_double_or("output_dt", 0.1);
    cfg.integrator.rtol = kv.get_double_or("rtol", 1e-8);
    cfg.integrator.atol = kv.get_double_or("atol", 1e-10);
    cfg.integrator.h0 = kv.get_double_or("h0", 0.0);
    cfg.integrator.h_min = kv.get_double_or("h_min", 1e-13);

    cfg.compare_to_exact = kv.get_bool_or("compare_to_exact", false);
    cfg.report_order = kv.get_int_or("report_order", std::min(cfg.model.N, 4));
    cfg.cluster_order = kv.get_int_or("cluster_order", cfg.report_order);
    cfg.output_dir = kv.get_or("output_dir", "out");
    return cfg;
}

} // namespace bbh::tools
