#include "bbh/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace bbh {

EigResult eigh(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success)
        throw Error("eigh: eigensolver did not converge");
    EigResult r;
    r.eigenvalues = es.eigenvalues();
    r.eigenvectors = es.eigenvectors();
    // fix each eigenvector's global phase: first significant component
    // becomes real positive
    const Eigen::Index n = r.eigenvectors.rows();
    for (Eigen::Index c = 0; c < r.eigenvectors.cols(); ++c) {
        double big = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            big = std::max(big, std::abs(r.eigenvectors(i, c)));
        const double thresh = 1e-8 * big;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Complex x = r.eigenvectors(i, c);
            if (std::abs(x) > thresh) {
                const Complex phase = std::abs(x) / x;
                r.eigenvectors.col(c) *= phase;
                break;
            }
        }
    }
    return r;
}

EigResult eigh(const BosonicOperator& b)
{
    return eigh(b.to_matrix());
}

Vector solve_dual(const Eigen::MatrixXd& aat, const Vector& b, double cutoff)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(aat);
    if (es.info() != Eigen::Success)
        throw Error("solve_dual: eigensolver did not converge");
    const Eigen::VectorXd& w = es.eigenvalues();
    const double wmax = w.size() ? std::max(0.0, w(w.size() - 1)) : 0.0;
    const double floor_ = cutoff * wmax;
    Eigen::VectorXd winv = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w(i) > floor_ && w(i) > 0.0)
            winv(i) = 1.0 / w(i);
    return es.eigenvectors() * (winv.asDiagonal() * (es.eigenvectors().transpose() * b));
}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights for the 4th-order continuous extension
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct DenseCoeffs {
    Vector r1, r2, r3, r4, r5;

    Vector eval(double theta) const
    {
        const double t1 = 1.0 - theta;
        return r1 + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * r5)));
    }
};

double error_norm(const Vector& y0, const Vector& y1, const Vector& err, double atol, double rtol)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y0.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double q = err(i) / sc;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(y0.size()));
}

bool finite(const Vector& v)
{
    return v.allFinite();
}

} // namespace

IntegrateResult integrate(const Rhs& f, Vector y, double t0, double t1,
                          const IntegratorOptions& opts, const OutputHook& on_output,
                          bool hook_mutates)
{
    IntegrateResult res;
    const double dt_out = opts.output_dt;
    if (dt_out <= 0.0)
        throw Error("integrate: output_dt must be positive");
    const Eigen::Index n = y.size();
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), yerr(n);

    double t = t0;
    long steps_since_output = 0;
    long next_output = 1;

    auto rhs_guarded = [&](double tt, const Vector& yy, Vector& out) -> bool {
        try {
            f(tt, yy, out);
        } catch (const RhsEvaluationError&) {
            return false;
        }
        return finite(out);
    };

    if (on_output) {
        Vector ycopy = y;
        on_output(t0, ycopy, 0); // initial sample; mutation at t0 is ignored
    }

    if (!rhs_guarded(t, y, k1)) {
        res.status = IntegrateStatus::rhs_failure;
        res.t_reached = t;
        return res;
    }

    // initial step size from the scaled state/derivative ratio
    double h = opts.h0;
    if (h <= 0.0) {
        const Vector zero = Vector::Zero(n);
        const double d0 = error_norm(y, y, y, opts.atol, opts.rtol);
        const double d1 = error_norm(y, y, k1, opts.atol, opts.rtol);
        h = (d0 > 1e-10 && d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6;
        h = std::min(h, dt_out);
        (void)zero;
    }

    const double expo1 = 0.2 - 0.04 * 0.75;
    double facold = 1e-4;
    bool have_k1 = true;
    bool last_reject_was_rhs = false;

    while (t < t1 - 1e-14 * std::max(1.0, std::abs(t1))) {
        double t_stop = t1;
        if (hook_mutates)
            t_stop = std::min(t1, t0 + static_cast<double>(next_output) * dt_out);
        if (t_stop - t < std::max(opts.h_min, 1e-12 * std::max(1.0, std::abs(t_stop)))) {
            // snap onto the boundary instead of forcing a microscopic step
            t = t_stop;
            if (hook_mutates) {
                bool mutated = false;
                if (on_output) {
                    mutated = on_output(t, y, steps_since_output);
                    steps_since_output = 0;
                }
                ++next_output;
                if (mutated)
                    have_k1 = false;
            }
            continue;
        }
        if (h > t_stop - t)
            h = t_stop - t;
        if (h < opts.h_min) {
            res.status = last_reject_was_rhs ? IntegrateStatus::rhs_failure
                                             : IntegrateStatus::step_underflow;
            res.t_reached = t;
            return res;
        }

        if (!have_k1) {
            if (!rhs_guarded(t, y, k1)) {
                h *= 0.5;
                ++res.rejected_steps;
                last_reject_was_rhs = true;
                continue;
            }
            have_k1 = true;
        }

        bool stage_ok = true;
        ytmp = y + h * (a21 * k1);
        stage_ok = stage_ok && rhs_guarded(t + c2 * h, ytmp, k2);
        if (stage_ok) {
            ytmp = y + h * (a31 * k1 + a32 * k2);
            stage_ok = rhs_guarded(t + c3 * h, ytmp, k3);
        }
        if (stage_ok) {
            ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            stage_ok = rhs_guarded(t + c4 * h, ytmp, k4);
        }
        if (stage_ok) {
            ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            stage_ok = rhs_guarded(t + c5 * h, ytmp, k5);
        }
        if (stage_ok) {
            ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            stage_ok = rhs_guarded(t + h, ytmp, k6);
        }
        if (stage_ok) {
            ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            stage_ok = rhs_guarded(t + h, ynew, k7);
        }
        if (!stage_ok) {
            h *= 0.5;
            ++res.rejected_steps;
            last_reject_was_rhs = true;
            continue;
        }
        last_reject_was_rhs = false;

        yerr = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = error_norm(y, ynew, yerr, opts.atol, opts.rtol);

        if (err > 1.0) {
            const double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= fac;
            ++res.rejected_steps;
            continue;
        }

        // accepted
        ++res.total_steps;
        ++steps_since_output;

        DenseCoeffs dense;
        const bool need_dense = !hook_mutates && on_output;
        if (need_dense) {
            dense.r1 = y;
            dense.r2 = ynew - y;
            dense.r3 = h * k1 - dense.r2;
            dense.r4 = dense.r2 - h * k7 - dense.r3;
            dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        }

        const double t_new = t + h;
        if (need_dense) {
            while (true) {
                const double t_out = t0 + static_cast<double>(next_output) * dt_out;
                const double slack = 1e-12 * std::max(1.0, std::abs(t_new));
                if (t_out > t_new + slack || t_out > t1 + slack)
                    break;
                Vector yout = dense.eval((t_out - t) / h);
                on_output(t_out, yout, steps_since_output);
                steps_since_output = 0;
                ++next_output;
            }
        }

        t = t_new;
        y = ynew;
        k1 = k7; // FSAL
        // PI controller
        const double fac11 = std::pow(std::max(err, 1e-10), expo1);
        double fac = fac11 / std::pow(facold, 0.04);
        fac = std::clamp(fac / 0.9, 0.1, 5.0);
        h = h / fac;
        facold = std::max(err, 1e-4);

        if (hook_mutates) {
            const double t_out = t0 + static_cast<double>(next_output) * dt_out;
            if (std::abs(t - std::min(t_out, t1)) <= 1e-12 * std::max(1.0, std::abs(t))) {
                bool mutated = false;
                if (on_output) {
                    mutated = on_output(t, y, steps_since_output);
                    steps_since_output = 0;
                }
                if (t_out <= t1 + 1e-12)
                    ++next_output;
                if (mutated)
                    have_k1 = false; // state changed: refresh FSAL derivative
            }
        }
    }

    res.status = IntegrateStatus::ok;
    res.t_reached = t;
    return res;
}

} // namespace bbh
