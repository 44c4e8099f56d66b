#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "bbh/oracle.hpp"
#include "bbh/representability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bbh::tools {

namespace {

std::string format_double(double x)
{
    std::ostringstream os;
    os << std::setprecision(16) << x;
    return os.str();
}

const char* status_name(RunStatus s)
{
    switch (s) {
    case RunStatus::ok:
        return "ok";
    case RunStatus::instability:
        return "instability";
    case RunStatus::correction_failure:
        return "correction_failure";
    }
    return "unknown";
}

int status_exit(RunStatus s)
{
    switch (s) {
    case RunStatus::ok:
        return exit_ok;
    case RunStatus::instability:
        return exit_instability;
    case RunStatus::correction_failure:
        return exit_correction_failure;
    }
    return exit_instability;
}

/// column layout of one trajectory CSV
struct CsvSchema {
    int m = 0;
    std::vector<int> orders;   // orders with trace/mineig/np groups
    int cluster_order = 0;     // cnorm_1..cnorm_cluster_order
    int compat_orders = 0;     // compat_1..compat_n
    int compare_orders = 0;    // D_1..D_n

    std::string header() const
    {
        std::ostringstream os;
        os << "time,imbalance,energy,steps";
        for (int o : orders)
            os << ",tr_" << o;
        for (int o : orders)
            os << ",mineig_" << o;
        os << ",ximin,ktrace";
        for (int o : orders)
            for (std::uint64_t k = 1; k <= fock_dimension(m, o); ++k)
                os << ",np_" << o << "_" << k;
        for (int o = 1; o <= cluster_order; ++o)
            os << ",cnorm_" << o;
        for (int o = 1; o <= compat_orders; ++o)
            os << ",compat_" << o;
        for (int o = 1; o <= compare_orders; ++o)
            os << ",D_" << o;
        return os.str();
    }
};

/// shared metric computation over a fixed-frame RDM family
struct RowMetrics {
    double imbalance = 0.0;
    double energy_value = std::nan("");
    std::vector<double> traces;
    std::vector<double> mineigs;
    double ximin = std::nan("");
    double ktrace = std::nan("");
    std::vector<std::vector<double>> nps; // per order, descending
    std::vector<double> cnorms;           // may be NaN when clusters fail
    std::vector<double> compats;
    std::vector<double> distances;
};

RowMetrics compute_metrics(const std::vector<BosonicOperator>& family, const ModelSpec& spec,
                           int cluster_order, bool with_compat,
                           const std::vector<BosonicOperator>* exact_family)
{
    RowMetrics row;
    const int m = spec.m;
    const auto& rho1 = family[0];
    row.imbalance = (rho1(0, 0) - rho1(rho1.dim() - 1, rho1.dim() - 1)).real();

    // energy from (rho1, rho2); at truncation order one fall back to the
    // closure for the two-body part
    try {
        if (family.size() >= 2)
            row.energy_value = energy(family[0], family[1], spec);
        else
            row.energy_value = energy(family[0], closure({family[0]}, 1e-5), spec);
    } catch (const Error&) {
    }

    for (const auto& rho : family) {
        row.traces.push_back(rho.trace());
        EigResult e = eigh(rho);
        row.mineigs.push_back(e.eigenvalues(0));
        std::vector<double> np(e.eigenvalues.data(), e.eigenvalues.data() + e.eigenvalues.size());
        std::reverse(np.begin(), np.end());
        row.nps.push_back(std::move(np));
    }

    try {
        const BosonicOperator& rho2 = family.size() >= 2 ? family[1] : closure({family[0]}, 1e-5);
        KMatrix k = k_matrix(family[0], rho2, spec.N);
        EigResult ek = eigh(k.elements);
        row.ximin = ek.eigenvalues(0);
        row.ktrace = k.elements.trace().real();
    } catch (const Error&) {
    }

    if (cluster_order > 0) {
        row.cnorms.assign(static_cast<std::size_t>(cluster_order), std::nan(""));
        try {
            std::vector<BosonicOperator> head(family.begin(),
                                              family.begin() + std::min<std::size_t>(
                                                                   family.size(),
                                                                   static_cast<std::size_t>(
                                                                       cluster_order)));
            ClusterSet set = compute_clusters(head, 1e-6);
            for (int o = 1; o <= set.max_order(); ++o)
                row.cnorms[static_cast<std::size_t>(o - 1)] = trace_norm(set.cluster(o));
        } catch (const Error&) {
        }
    }

    if (with_compat)
        for (std::size_t i = 0; i + 1 < family.size(); ++i) {
            BosonicOperator defect = partial_trace(family[i + 1], 1);
            defect -= family[i];
            row.compats.push_back(trace_norm(defect));
        }

    if (exact_family)
        for (std::size_t i = 0; i < family.size() && i < exact_family->size(); ++i)
            row.distances.push_back(trace_distance(family[i], (*exact_family)[i]));

    return row;
}

void write_row(std::ofstream& out, double t, long steps, const RowMetrics& row,
               const CsvSchema& schema)
{
    out << format_double(t) << ',' << format_double(row.imbalance) << ','
        << format_double(row.energy_value) << ',' << steps;
    for (double x : row.traces)
        out << ',' << format_double(x);
    for (double x : row.mineigs)
        out << ',' << format_double(x);
    out << ',' << format_double(row.ximin) << ',' << format_double(row.ktrace);
    for (const auto& np : row.nps)
        for (double x : np)
            out << ',' << format_double(x);
    for (double x : row.cnorms)
        out << ',' << format_double(x);
    for (int o = 0; o < schema.compat_orders; ++o)
        out << ',' << format_double(o < static_cast<int>(row.compats.size()) ? row.compats[o]
                                                                             : std::nan(""));
    for (int o = 0; o < schema.compare_orders; ++o)
        out << ','
            << format_double(o < static_cast<int>(row.distances.size()) ? row.distances[o]
                                                                        : std::nan(""));
    out << '\n';
}

json representability_json(const RepresentabilityReport& report, const ModelSpec& spec)
{
    json j;
    j["epsilon"] = report.epsilon;
    j["m"] = spec.m; // K spectra are only comparable at equal mode counts
    j["N"] = spec.N;
    json tneg = json::object();
    for (const auto& [o, t] : report.t_neg)
        tneg[std::to_string(o)] = t;
    j["t_neg"] = tneg;
    if (report.t_neg_k)
        j["t_neg_k"] = *report.t_neg_k;
    else
        j["t_neg_k"] = nullptr;
    j["final_min_eigenvalues"] = report.min_eigenvalue;
    j["final_xi_min"] = report.xi_min;
    return j;
}

json config_json(const KeyValueFile& kv)
{
    json j = json::object();
    for (const auto& [k, v] : kv.values)
        j[k] = v;
    return j;
}

void write_metadata(const RunConfig& cfg, RunStatus status, double t_reached, long steps,
                    double wall_seconds, const std::string& kind)
{
    json j;
    j["tool"] = "bbh";
    j["version"] = "0.1.0";
    j["kind"] = kind;
    j["config"] = config_json(cfg.raw);
    j["status"] = status_name(status);
    j["t_reached"] = t_reached;
    j["total_steps"] = steps;
    j["wall_seconds"] = wall_seconds;
    std::ofstream out(fs::path(cfg.output_dir) / "metadata.json");
    out << j.dump(2) << "\n";
}

Matrix frame_rotation(const ModelSpec& spec, double t)
{
    // with g = h the propagated matrices live in the rotating frame;
    // exp(+i h t) maps them back to the fixed basis
    Eigen::SelfAdjointEigenSolver<Matrix> es(spec.h);
    Eigen::VectorXcd phases =
        (Complex(0.0, 1.0) * t * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

CIState make_initial_ci(const RunConfig& cfg)
{
    switch (cfg.initial_kind) {
    case InitialStateKind::fock:
        return permanent_state(cfg.initial_occupation, cfg.model.N);
    case InitialStateKind::bec:
        return product_bec(cfg.model.m, cfg.model.N, cfg.initial_orbital);
    case InitialStateKind::noon:
        return noon_state(cfg.model.m, cfg.model.N, cfg.noon_theta);
    }
    throw Error("unreachable");
}

int cmd_run(const RunConfig& cfg)
{
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output_dir);
    const ModelSpec& spec = cfg.model;
    const int obar = cfg.truncation_order;

    CIState psi0 = make_initial_ci(cfg);
    HierarchyState initial = initial_hierarchy(psi0, obar);

    // co-run the oracle on the same grid when trace distances are wanted
    std::vector<CIState> exact_states;
    if (cfg.compare_to_exact) {
        ModelSpec fixed = spec;
        fixed.gauge = Gauge::zero;
        exact_propagate(fixed, psi0, cfg.t_final, cfg.integrator,
                        [&](const CISample& s) { exact_states.push_back(s.state); });
    }

    CsvSchema schema;
    schema.m = spec.m;
    for (int o = 1; o <= obar; ++o)
        schema.orders.push_back(o);
    schema.cluster_order = obar;
    schema.compat_orders = obar - 1;
    schema.compare_orders = cfg.compare_to_exact ? obar : 0;

    std::ofstream csv(fs::path(cfg.output_dir) / "trajectory.csv");
    csv << "# bbh-trajectory v1\n" << schema.header() << "\n";

    std::ofstream corr_csv(fs::path(cfg.output_dir) / "corrections.csv");
    corr_csv << "# bbh-corrections v1\ntime,mode,order,d,dprime,cnorm,residual,iterations,status\n";

    RepresentabilityReport report;
    report.epsilon = cfg.epsilon;

    PropagateOptions popts;
    popts.mode = cfg.mode;
    popts.epsilon = cfg.epsilon;
    popts.eta = cfg.eta;
    popts.max_iter = cfg.max_iter;
    popts.integrator = cfg.integrator;
    popts.correction_log = [&](const CorrectionLogEntry& e) {
        corr_csv << format_double(e.t) << ','
                 << (e.mode == CorrectionMode::purify ? "purify" : "eom") << ',' << e.order << ','
                 << e.d << ',' << e.dprime << ',' << format_double(e.cnorm) << ','
                 << format_double(e.residual) << ',' << e.iterations << ',' << e.status << '\n';
    };

    std::size_t sample_index = 0;
    std::vector<BosonicOperator> fixed_family;
    HierarchyState last_state;
    auto sink = [&](const HierarchySample& s) {
        fixed_family = s.state->rhos;
        if (spec.gauge == Gauge::one_body) {
            const Matrix u = frame_rotation(spec, s.t);
            for (auto& rho : fixed_family)
                rho = rotate_basis(rho, u);
        }
        const std::vector<BosonicOperator>* exact_family_ptr = nullptr;
        std::vector<BosonicOperator> exact_family;
        if (cfg.compare_to_exact && sample_index < exact_states.size()) {
            for (int o = 1; o <= obar; ++o)
                exact_family.push_back(extract_rdm(exact_states[sample_index], o));
            exact_family_ptr = &exact_family;
        }
        RowMetrics row =
            compute_metrics(fixed_family, spec, schema.cluster_order, true, exact_family_ptr);
        write_row(csv, s.t, s.steps, row, schema);
        report.check(fixed_family, spec.N, s.t);
        last_state = *s.state;
        last_state.time = s.t;
        ++sample_index;
    };

    PropagateResult result = propagate(spec, initial, cfg.t_final, popts, sink);

    std::ofstream rep(fs::path(cfg.output_dir) / "representability.json");
    rep << representability_json(report, spec).dump(2) << "\n";

    for (int o = 1; o <= obar && !last_state.rhos.empty(); ++o)
        save_operator(last_state.rho(o),
                      (fs::path(cfg.output_dir) / ("rho_" + std::to_string(o) + ".bop")).string());

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_metadata(cfg, result.status, result.t_reached, result.total_steps, wall, "run");
    if (result.status != RunStatus::ok)
        std::cerr << "run ended with status " << status_name(result.status) << " at t = "
                  << result.t_reached << "\n";
    return status_exit(result.status);
}

int cmd_exact(const RunConfig& cfg)
{
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output_dir);
    ModelSpec spec = cfg.model;
    spec.gauge = Gauge::zero; // the oracle propagates the plain Hamiltonian

    CIState psi0 = make_initial_ci(cfg);

    CsvSchema schema;
    schema.m = spec.m;
    for (int o = 1; o <= cfg.report_order; ++o)
        schema.orders.push_back(o);
    schema.cluster_order = cfg.cluster_order;
    schema.compat_orders = 0;
    schema.compare_orders = 0;

    std::ofstream csv(fs::path(cfg.output_dir) / "trajectory.csv");
    csv << "# bbh-trajectory v1\n" << schema.header() << "\n";

    CIState last = psi0;
    auto sink = [&](const CISample& s) {
        std::vector<BosonicOperator> family;
        for (int o = 1; o <= std::max(cfg.report_order, std::min(cfg.cluster_order, spec.N));
             ++o)
            family.push_back(extract_rdm(s.state, o));
        std::vector<BosonicOperator> head(family.begin(),
                                          family.begin() + cfg.report_order);
        RowMetrics row = compute_metrics(family, spec, 0, false, nullptr);
        // cluster norms from the full family
        row.cnorms.assign(static_cast<std::size_t>(cfg.cluster_order), std::nan(""));
        try {
            ClusterSet set = compute_clusters(
                std::vector<BosonicOperator>(family.begin(),
                                             family.begin() + std::min<int>(cfg.cluster_order,
                                                                            static_cast<int>(
                                                                                family.size()))),
                1e-6);
            for (int o = 1; o <= set.max_order(); ++o)
                row.cnorms[static_cast<std::size_t>(o - 1)] = trace_norm(set.cluster(o));
        } catch (const Error&) {
        }
        // restrict the per-order groups to the report orders
        row.traces.resize(static_cast<std::size_t>(cfg.report_order));
        row.mineigs.resize(static_cast<std::size_t>(cfg.report_order));
        row.nps.resize(static_cast<std::size_t>(cfg.report_order));
        write_row(csv, s.t, s.steps, row, schema);
        last = s.state;
    };

    IntegrateResult ir = exact_propagate(spec, psi0, cfg.t_final, cfg.integrator, sink);

    // amplitude checkpoint in the operator container (rank-one projector;
    // the global phase is not an observable)
    BosonicOperator proj(spec.m, spec.N);
    for (std::size_t r = 0; r < proj.dim(); ++r)
        for (std::size_t c = 0; c <= r; ++c)
            proj.set(r, c, last.amplitudes(static_cast<Eigen::Index>(r)) *
                               std::conj(last.amplitudes(static_cast<Eigen::Index>(c))));
    save_operator(proj, (fs::path(cfg.output_dir) / "psi_projector.bop").string());

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    const RunStatus status =
        ir.status == IntegrateStatus::ok ? RunStatus::ok : RunStatus::instability;
    write_metadata(cfg, status, ir.t_reached, ir.total_steps, wall, "exact");
    return status_exit(status);
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& param, const std::vector<std::string>& values,
              const std::string& out_dir, int jobs)
{
    fs::create_directories(out_dir);
    struct Item {
        std::string value;
        std::string dir;
        int exit_code = -1;
        std::string error;
    };
    std::vector<Item> items;
    for (const auto& v : values)
        items.push_back({v, (fs::path(out_dir) / (param + "=" + v)).string(), -1, ""});

    std::mutex queue_mutex;
    std::size_t next = 0;
    auto worker = [&]() {
        while (true) {
            std::size_t mine;
            {
                std::lock_guard<std::mutex> lock(queue_mutex);
                if (next >= items.size())
                    return;
                mine = next++;
            }
            Item& item = items[mine];
            try {
                std::vector<std::string> ov = overrides;
                ov.push_back(param + "=" + item.value);
                ov.push_back("output_dir=" + item.dir);
                RunConfig cfg = load_run_config(config_path, ov);
                item.exit_code = cmd_run(cfg);
            } catch (const std::exception& e) {
                item.exit_code = exit_config_error;
                item.error = e.what();
            }
        }
    };

    const int nworkers = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < nworkers; ++i)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();

    // merged comparison CSV keyed by the swept parameter
    std::ofstream merged(fs::path(out_dir) / "merged.csv");
    bool header_done = false;
    for (const auto& item : items) {
        std::ifstream in(fs::path(item.dir) / "trajectory.csv");
        if (!in)
            continue;
        std::string line;
        bool past_header = false;
        while (std::getline(in, line)) {
            if (line.rfind("#", 0) == 0)
                continue;
            if (!past_header) {
                if (!header_done) {
                    merged << param << ',' << line << '\n';
                    header_done = true;
                }
                past_header = true;
                continue;
            }
            merged << item.value << ',' << line << '\n';
        }
    }

    json summary;
    summary["param"] = param;
    json runs = json::array();
    bool any_failed = false;
    for (const auto& item : items) {
        json r;
        r["value"] = item.value;
        r["dir"] = item.dir;
        r["exit_code"] = item.exit_code;
        if (!item.error.empty())
            r["error"] = item.error;
        any_failed = any_failed || item.exit_code != exit_ok;
        runs.push_back(r);
    }
    summary["runs"] = runs;
    std::ofstream sj(fs::path(out_dir) / "campaign.json");
    sj << summary.dump(2) << "\n";
    // individual failures are recorded; the campaign itself succeeds
    (void)any_failed;
    return exit_ok;
}

int cmd_check(const std::string& rho2_path, const std::string& rho1_path, int N, double epsilon)
{
    BosonicOperator rho2 = load_operator(rho2_path);
    BosonicOperator rho1 =
        rho1_path.empty() ? partial_trace(rho2, 1) : load_operator(rho1_path);

    EigResult e1 = eigh(rho1);
    EigResult e2 = eigh(rho2);
    KMatrix k = k_matrix(rho1, rho2, N);
    EigResult ek = eigh(k.elements);

    BosonicOperator defect = partial_trace(rho2, 1);
    defect -= rho1;

    json j;
    j["m"] = rho1.modes();
    j["N"] = N;
    j["epsilon"] = epsilon;
    j["trace_rho1"] = rho1.trace();
    j["trace_rho2"] = rho2.trace();
    j["compatibility_defect"] = trace_norm(defect);
    j["rho1_eigenvalues"] = std::vector<double>(e1.eigenvalues.data(),
                                                e1.eigenvalues.data() + e1.eigenvalues.size());
    j["rho2_eigenvalues"] = std::vector<double>(e2.eigenvalues.data(),
                                                e2.eigenvalues.data() + e2.eigenvalues.size());
    j["k_eigenvalues"] = std::vector<double>(ek.eigenvalues.data(),
                                             ek.eigenvalues.data() + ek.eigenvalues.size());
    j["k_trace"] = k.elements.trace().real();
    const bool d_ok = e2.eigenvalues(0) >= epsilon;
    const bool k_ok = ek.eigenvalues(0) >= epsilon;
    j["d_condition"] = d_ok;
    j["k_condition"] = k_ok;
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

} // namespace bbh::tools
