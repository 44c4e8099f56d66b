#include "bbh/bbgky.hpp"

#include <cmath>

#include "bbh/correction.hpp"
#include "bbh/oracle.hpp"

namespace bbh {

void HierarchyState::validate(double trace_tol, double compat_tol) const
{
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        if (rhos[i].order() != static_cast<int>(i) + 1)
            throw Error("HierarchyState: rho family must be rho_1..rho_obar");
        if (std::abs(rhos[i].trace() - 1.0) > trace_tol)
            throw Error("HierarchyState: rho_" + std::to_string(i + 1) + " is not trace-one");
    }
    for (std::size_t i = 0; i + 1 < rhos.size(); ++i) {
        BosonicOperator defect = partial_trace(rhos[i + 1], 1);
        defect -= rhos[i];
        if (trace_norm(defect) > compat_tol)
            throw Error("HierarchyState: compatibility defect at order " + std::to_string(i + 1));
    }
}

BosonicOperator collision_integral(const BosonicOperator& rho_next, const ModelSpec& spec, int o)
{
    const int m = spec.m;
    if (rho_next.order() != o + 1)
        throw Error("collision_integral: argument must have order o+1");
    if (o + 1 > spec.N)
        throw Error("collision_integral: order exceeds the particle number");
    auto basis = FockBasis::make(m, o);
    const std::size_t d = basis->dim();
    const double pref = static_cast<double>(spec.N - o) / (o + 1);
    BosonicOperator out(m, o);
    if (spec.N == o)
        return out; // collision prefactor vanishes at the top of the full hierarchy

    OccupationVector u, w;
    for (std::size_t rn = 0; rn < d; ++rn) {
        const auto& n = basis->state(rn);
        for (std::size_t rm = 0; rm <= rn; ++rm) {
            const auto& mc = basis->state(rm);
            Complex acc(0.0, 0.0);
            // term 1: <n| a+_q a_p a_i rho a+_j |mc>
            for (int q = 0; q < m; ++q) {
                if (n[q] == 0)
                    continue;
                u = n;
                --u[q];
                for (int p = 0; p < m; ++p) {
                    ++u[p];
                    const double amp_qp = std::sqrt(static_cast<double>(n[q]) * u[p]);
                    const std::size_t ru = basis->rank(u);
                    for (int i = 0; i < m; ++i) {
                        const std::size_t row = basis->raised_ranks(ru)[static_cast<std::size_t>(i)];
                        const double amp_i = std::sqrt(u[i] + 1.0);
                        for (int j = 0; j < m; ++j) {
                            const Complex vv = spec.vel(q, j, p, i);
                            if (vv == Complex(0.0, 0.0))
                                continue;
                            const std::size_t col =
                                basis->raised_ranks(rm)[static_cast<std::size_t>(j)];
                            const double amp_j = std::sqrt(mc[j] + 1.0);
                            acc += vv * amp_qp * amp_i * amp_j * rho_next(row, col);
                        }
                    }
                    --u[p];
                }
            }
            // term 2: <n| a_i rho a+_j a+_q a_p |mc>
            for (int p = 0; p < m; ++p) {
                if (mc[p] == 0)
                    continue;
                w = mc;
                --w[p];
                for (int q = 0; q < m; ++q) {
                    ++w[q];
                    const double amp_pq = std::sqrt(static_cast<double>(mc[p]) * w[q]);
                    const std::size_t rw = basis->rank(w);
                    for (int j = 0; j < m; ++j) {
                        const std::size_t col = basis->raised_ranks(rw)[static_cast<std::size_t>(j)];
                        const double amp_j = std::sqrt(w[j] + 1.0);
                        for (int i = 0; i < m; ++i) {
                            const Complex vv = spec.vel(q, j, p, i);
                            if (vv == Complex(0.0, 0.0))
                                continue;
                            const std::size_t row =
                                basis->raised_ranks(rn)[static_cast<std::size_t>(i)];
                            const double amp_i = std::sqrt(n[i] + 1.0);
                            acc -= vv * amp_pq * amp_i * amp_j * rho_next(row, col);
                        }
                    }
                    --w[q];
                }
            }
            out.set(rn, rm, Complex(0.0, -1.0) * pref * acc); // hermitian -i I_o form
        }
    }
    return out;
}

std::vector<BosonicOperator> hierarchy_rhs(const std::vector<BosonicOperator>& rhos,
                                           const ModelSpec& spec,
                                           const std::vector<Matrix>& hams)
{
    const int obar = static_cast<int>(rhos.size());
    std::vector<BosonicOperator> derivs;
    derivs.reserve(rhos.size());

    BosonicOperator top_closure;
    if (obar < spec.N)
        top_closure = closure(rhos, 1e-6);

    for (int o = 1; o <= obar; ++o) {
        const BosonicOperator& rho = rhos[static_cast<std::size_t>(o - 1)];
        const Matrix rm = rho.to_matrix();
        const Matrix& h = hams[static_cast<std::size_t>(o - 1)];
        Matrix von = Complex(0.0, -1.0) * (h * rm - rm * h);
        BosonicOperator d = BosonicOperator::from_matrix(spec.m, o, von);
        if (o < spec.N) {
            const BosonicOperator& next =
                o < obar ? rhos[static_cast<std::size_t>(o)] : top_closure;
            d += collision_integral(next, spec, o);
        }
        derivs.push_back(std::move(d));
    }
    return derivs;
}

std::vector<NpRate> np_derivative(const BosonicOperator& rho_o, const BosonicOperator& coll)
{
    EigResult e = eigh(rho_o);
    const Matrix cm = coll.to_matrix();
    const Eigen::Index n = e.eigenvalues.size();
    std::vector<NpRate> rates(static_cast<std::size_t>(n));

    // degeneracy blocks on the ascending eigenvalues
    int block = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        if (r > 0 && e.eigenvalues(r) - e.eigenvalues(r - 1) > 1e-12)
            ++block;
        auto& entry = rates[static_cast<std::size_t>(r)];
        entry.lambda = e.eigenvalues(r);
        entry.block = block;
        const Eigen::VectorXcd phi = e.eigenvectors.col(r);
        entry.rate = (phi.adjoint() * cm * phi)(0, 0).real();
    }
    // sum rates within each degenerate block (intra-block splitting is
    // basis-dependent)
    for (std::size_t start = 0; start < rates.size();) {
        std::size_t end = start + 1;
        while (end < rates.size() && rates[end].block == rates[start].block)
            ++end;
        if (end - start > 1) {
            double sum = 0.0;
            for (std::size_t i = start; i < end; ++i)
                sum += rates[i].rate;
            for (std::size_t i = start; i < end; ++i) {
                rates[i].rate = sum;
                rates[i].degenerate = true;
            }
        }
        start = end;
    }
    return rates;
}

std::size_t packed_size(int m, const std::vector<int>& orders)
{
    std::size_t n = 0;
    for (int o : orders) {
        const std::size_t d = fock_dimension(m, o);
        n += d * d;
    }
    return n;
}

void pack_state(const std::vector<BosonicOperator>& rhos, Vector& y)
{
    std::size_t k = 0;
    for (const auto& rho : rhos) {
        const std::size_t d = rho.dim();
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < r; ++c) {
                const Complex x = rho(r, c);
                y(static_cast<Eigen::Index>(k++)) = x.real();
                y(static_cast<Eigen::Index>(k++)) = x.imag();
            }
            y(static_cast<Eigen::Index>(k++)) = rho(r, r).real();
        }
    }
}

void unpack_state(const Vector& y, std::vector<BosonicOperator>& rhos)
{
    std::size_t k = 0;
    for (auto& rho : rhos) {
        const std::size_t d = rho.dim();
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < r; ++c) {
                const double re = y(static_cast<Eigen::Index>(k++));
                const double im = y(static_cast<Eigen::Index>(k++));
                rho.set(r, c, Complex(re, im));
            }
            rho.set(r, r, y(static_cast<Eigen::Index>(k++)));
        }
    }
}

HierarchyState initial_hierarchy(const CIState& a, int obar)
{
    if (obar < 1 || obar > a.N)
        throw Error("initial_hierarchy: need 1 <= obar <= N");
    HierarchyState state;
    state.time = a.time;
    for (int o = 1; o <= obar; ++o)
        state.rhos.push_back(extract_rdm(a, o));
    return state;
}

PropagateResult propagate(const ModelSpec& spec, const HierarchyState& initial, double t_final,
                          const PropagateOptions& opts,
                          const std::function<void(const HierarchySample&)>& sink)
{
    const int obar = initial.truncation_order();
    const int m = spec.m;
    initial.validate();

    // with g = h the matrices live in the co-rotating single-particle
    // frame; the interaction tensor then carries the frame rotation
    const bool rotating = spec.gauge == Gauge::one_body;
    Eigen::SelfAdjointEigenSolver<Matrix> h_eig;
    if (rotating)
        h_eig.compute(spec.h);
    auto frame_spec = [&](double t) {
        Eigen::VectorXcd phases =
            (Complex(0.0, -1.0) * t * h_eig.eigenvalues().cast<Complex>()).array().exp();
        Matrix u = h_eig.eigenvectors() * phases.asDiagonal() * h_eig.eigenvectors().adjoint();
        ModelSpec st = spec.rotated(u);
        st.gauge = Gauge::one_body;
        return st;
    };

    std::vector<Matrix> hams;
    for (int o = 1; o <= obar; ++o)
        hams.push_back(sector_hamiltonian(spec, o).to_matrix());

    const bool co_integrate = opts.mode != CorrectionMode::none;

    // template family for the packed state vector
    std::vector<BosonicOperator> work;
    if (co_integrate) {
        work = initial.rhos;
    } else {
        work.push_back(initial.rhos.back());
    }
    std::vector<int> orders;
    for (const auto& rho : work)
        orders.push_back(rho.order());
    Vector y0(static_cast<Eigen::Index>(packed_size(m, orders)));
    pack_state(work, y0);

    EomCorrector corrector(opts.epsilon, opts.eta);
    bool correction_failed = false;

    std::vector<BosonicOperator> family = initial.rhos; // scratch

    auto expand = [&](const std::vector<BosonicOperator>& packed_ops,
                      std::vector<BosonicOperator>& out) {
        if (co_integrate) {
            out = packed_ops;
        } else {
            // lower orders by partial traces of the top order
            out.resize(static_cast<std::size_t>(obar));
            out[static_cast<std::size_t>(obar - 1)] = packed_ops[0];
            for (int o = obar - 1; o >= 1; --o)
                out[static_cast<std::size_t>(o - 1)] =
                    partial_trace(out[static_cast<std::size_t>(o)], 1);
        }
    };

    Rhs rhs = [&](double t, const Vector& y, Vector& dy) {
        unpack_state(y, work);
        try {
            expand(work, family);
            std::vector<BosonicOperator> derivs;
            if (rotating) {
                const ModelSpec st = frame_spec(t);
                std::vector<Matrix> hams_t;
                for (int o = 1; o <= obar; ++o)
                    hams_t.push_back(sector_hamiltonian(st, o).to_matrix());
                derivs = hierarchy_rhs(family, st, hams_t);
                if (opts.mode == CorrectionMode::eom) {
                    try {
                        corrector.apply(t, st, family, derivs);
                    } catch (const CorrectionSolveError& e) {
                        correction_failed = true;
                        throw RhsEvaluationError(e.what());
                    }
                }
            } else {
                derivs = hierarchy_rhs(family, spec, hams);
                if (opts.mode == CorrectionMode::eom) {
                    try {
                        corrector.apply(t, spec, family, derivs);
                    } catch (const CorrectionSolveError& e) {
                        correction_failed = true;
                        throw RhsEvaluationError(e.what());
                    }
                }
            }
            dy.resize(y.size());
            if (co_integrate) {
                pack_state(derivs, dy);
            } else {
                std::vector<BosonicOperator> top = {derivs.back()};
                pack_state(top, dy);
            }
        } catch (const RhsEvaluationError&) {
            throw;
        } catch (const Error& e) {
            // e.g. a trial state drifted outside the closure's
            // compatibility tolerance; retry with a smaller step
            throw RhsEvaluationError(e.what());
        }
    };

    HierarchyState snapshot = initial;
    bool purify_cap_seen = false;

    OutputHook hook = [&](double t, Vector& y, long steps) {
        unpack_state(y, work);
        expand(work, snapshot.rhos);
        snapshot.time = t;
        bool mutated = false;
        if (opts.mode == CorrectionMode::purify && t > initial.time) {
            const bool converged =
                purify_family(snapshot.rhos, rotating ? frame_spec(t) : spec, opts.epsilon,
                              opts.max_iter, t, opts.correction_log);
            purify_cap_seen = purify_cap_seen || !converged;
            pack_state(snapshot.rhos, y);
            mutated = true;
        }
        if (opts.mode == CorrectionMode::eom && opts.correction_log)
            opts.correction_log(corrector.drain_summary(t));
        if (sink) {
            HierarchySample s;
            s.t = t;
            s.state = &snapshot;
            s.steps = steps;
            sink(s);
        }
        return mutated;
    };

    IntegrateResult ir = integrate(rhs, y0, initial.time, t_final, opts.integrator, hook,
                                   opts.mode == CorrectionMode::purify);

    PropagateResult res;
    res.t_reached = ir.t_reached;
    res.total_steps = ir.total_steps;
    res.rejected_steps = ir.rejected_steps;
    switch (ir.status) {
    case IntegrateStatus::ok:
        res.status = RunStatus::ok;
        break;
    case IntegrateStatus::step_underflow:
        res.status = correction_failed ? RunStatus::correction_failure : RunStatus::instability;
        break;
    case IntegrateStatus::rhs_failure:
        res.status = correction_failed ? RunStatus::correction_failure : RunStatus::instability;
        break;
    }
    return res;
}

} // namespace bbh
