#include "adaptikh/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace adaptikh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double now_ms() {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

/// Per-iteration quadrature rules; only the members a rule needs are built.
struct RuleBundle {
    QuadratureRule gauss_aat;
    QuadratureRule radau_aat;
    QuadratureRule gauss_ata;
    QuadratureRule radau_ata;
    bool has_aat_gauss = false;
    bool has_aat_radau = false;
    bool has_ata_gauss = false;
    bool has_ata_radau = false;
};

RuleBundle build_rules(const BidiagFactorization& f, RuleKind rule, double mass_aat,
                       double mass_ata) {
    RuleBundle rb;
    const Index k = f.k();
    const bool want_hat = (rule == RuleKind::QO || rule == RuleKind::Reginska) && k >= 2;
    if (rule == RuleKind::DP || rule == RuleKind::Reginska) {
        rb.gauss_aat = gauss_rule(f.B(k), mass_aat, MeasureTag::AAT_b);
        rb.has_aat_gauss = true;
    }
    if (rule == RuleKind::DP || rule == RuleKind::GCV || rule == RuleKind::Reginska) {
        rb.radau_aat = radau_rule_from_bbar(f.Bbar(k), mass_aat, MeasureTag::AAT_b);
        rb.has_aat_radau = true;
    }
    if (want_hat) {
        const LowerBidiagonal bhat = bidiag_qr(f.Bbar(k));
        rb.gauss_ata = gauss_rule_hat(bhat, mass_ata);
        rb.radau_ata = radau_rule_hat(bhat, mass_ata);
        rb.has_ata_gauss = true;
        rb.has_ata_radau = true;
    }
    return rb;
}

PhiEval eval_objective(RuleKind rule, const RuleBundle& rb, double alpha) {
    switch (rule) {
        case RuleKind::GCV: return gcv_objective(rb.radau_aat, alpha);
        case RuleKind::QO: return qo_objective(rb.radau_ata, alpha);
        case RuleKind::Reginska: return reginska_objective(rb.radau_aat, rb.radau_ata, alpha);
        default: throw InvalidArgument("eval_objective: DP has no minimization objective");
    }
}

double eval_lower(RuleKind rule, const RuleBundle& rb, double alpha) {
    switch (rule) {
        case RuleKind::QO: return qo_lower(rb.gauss_ata, alpha);
        case RuleKind::Reginska: return reginska_lower(rb.gauss_aat, rb.gauss_ata, alpha);
        default: return kNaN;
    }
}

/// Incrementally maintained pieces needed for O(k) RRE evaluation:
/// RRE^2 = (||x||^2 - 2 y . (V^T x) + ||y||^2) / ||x||^2.
struct RreTracker {
    bool active = false;
    Vector coeffs;  // V^T x_exact
    double xnorm2 = 0.0;

    void sync(const BidiagFactorization& f, const Vector& x_exact) {
        if (!active) return;
        const Index k = f.k();
        const Index old = coeffs.size();
        if (old < k) {
            coeffs.conservativeResize(k);
            for (Index j = old; j < k; ++j) coeffs[j] = f.V().col(j).dot(x_exact);
        }
    }

    double eval(const Vector& y) const {
        const double r2 =
            xnorm2 - 2.0 * y.dot(coeffs.head(y.size())) + y.squaredNorm();
        return std::sqrt(std::max(r2, 0.0) / xnorm2);
    }
};

Vector final_solution(const BidiagFactorization& f, double alpha) {
    if (f.k() == 0) return Vector::Zero(f.op().cols());
    const auto sol = projected_tikhonov_solve(f.Bbar(f.k()), f.bnorm(), alpha);
    return f.V() * sol.y;
}

}  // namespace

double rre(const Vector& x, const Vector& x_exact) {
    const double xn = x_exact.norm();
    if (!(xn > 0.0)) throw InvalidArgument("rre: zero exact solution");
    return (x - x_exact).norm() / xn;
}

SolveReport adaptive_solve(const TestProblem& problem, const SolveOptions& opts) {
    if (!valid_pairing(opts.rule, opts.stop))
        throw InvalidArgument("adaptive_solve: invalid rule/stop pairing");
    if (!(opts.init_param > 0.0))
        throw InvalidArgument("adaptive_solve: initial parameter must be > 0");
    if (opts.rule == RuleKind::DP && !(problem.epsilon > 0.0))
        throw InvalidArgument(
            "adaptive_solve: the discrepancy principle needs epsilon > 0 (noisy data)");

    const Index m = problem.op->rows(), n = problem.op->cols();
    const int k_star = opts.k_star > 0 ? opts.k_star : default_k_star(opts.rule, m, n);
    if (opts.maxit < k_star + 1)
        throw InvalidArgument("adaptive_solve: maxit must be at least k_star + 1");

    auto fact = std::make_shared<BidiagFactorization>(problem.op, problem.b_noisy,
                                                      opts.reorthogonalize);
    const double bnorm = fact->bnorm();
    const double mass_aat = bnorm * bnorm;
    const double mass_ata = problem.op->apply_adjoint(problem.b_noisy).squaredNorm();
    const double eps2 = problem.epsilon * problem.epsilon;

    RuleState state;
    state.kind = opts.rule;
    state.param = opts.init_param;
    state.param_prev = opts.init_param;
    state.k_star = k_star;
    state.epsilon = problem.epsilon;
    state.tau = opts.tau;

    RreTracker rt;
    rt.active = opts.track_rre && problem.x_exact.size() == n && problem.x_exact.norm() > 0.0;
    if (rt.active) rt.xnorm2 = problem.x_exact.squaredNorm();

    SolveReport rep;
    rep.epsilon = problem.epsilon;
    rep.bnorm = bnorm;
    rep.stopped_by = StopRuleId::MaxIter;

    const auto to_alpha = [&](double p) { return opts.rule == RuleKind::DP ? 1.0 / p : p; };

    bool done = false;
    for (int iter = 1; iter <= opts.maxit && !done; ++iter) {
        const double t0 = now_ms();
        if (!fact->breakdown()) {
            if (!fact->step()) {
                rep.breakdown = true;
                rep.breakdown_index = fact->breakdown_index();
                if (fact->k() == 0 || iter < k_star) {
                    rep.stopped_by = StopRuleId::Breakdown;
                    break;
                }
            }
        }
        if (rt.active) rt.sync(*fact, problem.x_exact);
        const Index kf = fact->k();

        // Post-breakdown QO/Reginska with a one-dimensional space cannot form
        // their Radau-hat objective; nothing further can be computed.
        if ((opts.rule == RuleKind::QO || opts.rule == RuleKind::Reginska) && kf < 2 &&
            iter >= k_star) {
            rep.stopped_by = StopRuleId::Breakdown;
            break;
        }

        const RuleBundle rb = build_rules(*fact, opts.rule, mass_aat, mass_ata);

        TraceEntry te;
        te.k = iter;
        te.p_value = te.dp_value = te.bound_lower = te.bound_upper = kNaN;
        te.stop_metric = te.rre = kNaN;

        if (opts.rule == RuleKind::DP) {
            dp_newton_step(state, rb.gauss_aat, problem.epsilon);
            te.newton_applied = true;

            const PhiEval g_new = eval_form(rb.gauss_aat, PhiId::DP_beta, state.param);
            te.p_value = g_new.value - eps2;
            te.dp_value = g_new.d1;
            te.bound_lower = te.p_value;
            te.bound_upper = eval_form(rb.radau_aat, PhiId::DP_beta, state.param).value - eps2;

            const StopCheck sc = dp_stop_check(state, rb.gauss_aat, rb.radau_aat, opts.stop);
            te.stop_metric = sc.metric;
            if (sc.stop) {
                rep.stopped_by = opts.stop;
                done = true;
            }
        } else if (kf >= 2 || opts.rule == RuleKind::GCV) {
            if (iter >= k_star) {
                const PhiEval obj = eval_objective(opts.rule, rb, state.param);
                generic_newton_step(state, obj);
                te.newton_applied = true;
                te.fallback = state.step_was_fallback;
            } else {
                state.param_prev = state.param;
            }

            const PhiEval p_new = eval_objective(opts.rule, rb, state.param);
            te.p_value = p_new.value;
            te.dp_value = p_new.d1;
            te.bound_lower = eval_lower(opts.rule, rb, state.param);
            if (opts.rule != RuleKind::GCV) te.bound_upper = p_new.value;

            if (te.newton_applied && iter >= k_star + 1) {
                const StopCheck sc = (opts.stop == StopRuleId::SC1)
                                         ? stop_sc1(state, p_new.value, p_new.d1)
                                         : stop_sc2(state, p_new.value, p_new.d1, te.bound_lower);
                te.stop_metric = sc.metric;
                if (sc.stop) {
                    rep.stopped_by = opts.stop;
                    done = true;
                }
            }
        }

        te.alpha = to_alpha(state.param);
        if (rt.active && kf >= 1) {
            const auto sol = projected_tikhonov_solve(fact->Bbar(kf), bnorm, te.alpha);
            te.rre = rt.eval(sol.y);
        }
        te.wall_ms = now_ms() - t0;
        rep.trace.push_back(te);
    }

    rep.alpha_final = to_alpha(state.param);
    rep.k_final = static_cast<int>(fact->k());
    rep.x = final_solution(*fact, rep.alpha_final);
    if (opts.keep_factorization) rep.factorization = fact;
    return rep;
}

namespace {

/// Largest eigenvalue estimate of Bbar^T Bbar by power iteration.
double projected_gram_norm(const LowerBidiagonal& bbar) {
    const Index k = bbar.cols();
    Vector d(k), e(k > 1 ? k - 1 : 0);
    for (Index i = 0; i < k; ++i)
        d[i] = bbar.diag[i] * bbar.diag[i] + bbar.sub[i] * bbar.sub[i];
    for (Index i = 0; i + 1 < k; ++i) e[i] = bbar.sub[i] * bbar.diag[i + 1];

    Vector x = Vector::Constant(k, 1.0 / std::sqrt(static_cast<double>(k)));
    double lam = 0.0;
    for (int it = 0; it < 30; ++it) {
        Vector y(k);
        for (Index i = 0; i < k; ++i) {
            double v = d[i] * x[i];
            if (i > 0) v += e[i - 1] * x[i - 1];
            if (i + 1 < k) v += e[i] * x[i + 1];
            y[i] = v;
        }
        lam = y.norm();
        if (lam == 0.0) break;
        x = y / lam;
    }
    return lam;
}

/// Root of the projected discrepancy R(beta) = eval(radau, DP_beta) - eps^2,
/// Newton from the left on the convex decreasing function. Returns false when
/// the residual floor (the weight of the origin node) stays above eps^2.
bool dp_projected_root(const QuadratureRule& radau, double epsilon, double& beta_out) {
    const double eps2 = epsilon * epsilon;
    if (radau.weights[0] >= eps2) return false;  // lim_{beta->inf} R >= 0
    double beta = 0.0;
    for (int it = 0; it < 500; ++it) {
        const PhiEval r = eval_form(radau, PhiId::DP_beta, beta);
        const double f = r.value - eps2;
        if (f <= 1e-13 * eps2) break;
        if (!(r.d1 < 0.0)) return false;
        const double beta_new = beta - f / r.d1;
        if (!(beta_new > beta)) break;
        const bool small = (beta_new - beta) <= 1e-12 * beta_new;
        beta = beta_new;
        if (small) break;
    }
    beta_out = beta;
    return beta > 0.0;
}

/// Newton refinement of a local minimum of fn starting from the multi-start
/// winner a0, confined to the search window [lo, hi] (the projected
/// functionals decay artificially outside the spectrum of the projected
/// problem). Never returns a point with a larger objective value than a0.
template <typename F>
double refine_minimum(F&& fn, double a0, double lo, double hi, int cap) {
    double a = a0;
    for (int it = 0; it < cap; ++it) {
        const PhiEval p = fn(a);
        if (!std::isfinite(p.value) || !std::isfinite(p.d1) || !std::isfinite(p.d2)) {
            a = a0;
            break;
        }
        if (p.d1 == 0.0) break;
        double a_new;
        if (p.d2 > 0.0) {
            a_new = a - p.d1 / p.d2;
            if (!(a_new > 0.0) || !std::isfinite(a_new) || std::abs(a_new - a) > 10.0 * a)
                a_new = p.d1 > 0.0 ? a / 1.122 : a * 1.122;
        } else {
            a_new = p.d1 > 0.0 ? a / 1.122 : a * 1.122;
        }
        a_new = std::clamp(a_new, lo, hi);
        const bool converged = std::abs(a_new - a) <= 1e-8 * std::abs(a_new);
        a = a_new;
        if (converged) break;
    }
    if (!(fn(a).value <= fn(a0).value)) a = a0;
    return a;
}

}  // namespace

SolveReport hybrid_solve(const TestProblem& problem, const HybridOptions& opts) {
    if (opts.rule == RuleKind::DP && !(problem.epsilon > 0.0))
        throw InvalidArgument("hybrid_solve: the discrepancy principle needs epsilon > 0");
    if (opts.grid_count < 2) throw InvalidArgument("hybrid_solve: grid_count must be >= 2");

    auto fact = std::make_shared<BidiagFactorization>(problem.op, problem.b_noisy,
                                                      opts.reorthogonalize);
    const double bnorm = fact->bnorm();
    const double mass_aat = bnorm * bnorm;
    const double mass_ata = problem.op->apply_adjoint(problem.b_noisy).squaredNorm();
    const double eps2 = problem.epsilon * problem.epsilon;

    RreTracker rt;
    rt.active = opts.track_rre && problem.x_exact.size() == problem.op->cols() &&
                problem.x_exact.norm() > 0.0;
    if (rt.active) rt.xnorm2 = problem.x_exact.squaredNorm();

    SolveReport rep;
    rep.epsilon = problem.epsilon;
    rep.bnorm = bnorm;
    rep.stopped_by = StopRuleId::MaxIter;

    double alpha_prev = kNaN;
    bool prev_selected = false;
    int stable_count = 0;
    bool done = false;

    for (int iter = 1; iter <= opts.maxit && !done; ++iter) {
        const double t0 = now_ms();
        if (!fact->breakdown()) {
            if (!fact->step()) {
                rep.breakdown = true;
                rep.breakdown_index = fact->breakdown_index();
                if (fact->k() == 0) {
                    rep.stopped_by = StopRuleId::Breakdown;
                    break;
                }
            }
        }
        if (rt.active) rt.sync(*fact, problem.x_exact);
        const Index kf = fact->k();

        const bool can_select =
            opts.rule == RuleKind::DP || opts.rule == RuleKind::GCV || kf >= 2;
        TraceEntry te;
        te.k = iter;
        te.p_value = te.dp_value = te.bound_lower = te.bound_upper = kNaN;
        te.stop_metric = te.rre = kNaN;

        double alpha_k = alpha_prev;
        bool selected = false;

        if (can_select) {
            const RuleBundle rb = build_rules(*fact, opts.rule, mass_aat, mass_ata);
            if (opts.rule == RuleKind::DP) {
                double beta = 0.0;
                if (dp_projected_root(rb.radau_aat, problem.epsilon, beta)) {
                    alpha_k = 1.0 / beta;
                    selected = true;
                    te.p_value = eval_form(rb.radau_aat, PhiId::DP_beta, beta).value - eps2;
                } else {
                    // Discrepancy not yet reachable in this subspace: park at
                    // maximal regularization until the space is rich enough.
                    alpha_k = std::isfinite(alpha_prev) ? alpha_prev : 1e10;
                }
            } else {
                const auto fn = [&](double a) { return eval_objective(opts.rule, rb, a); };
                const double hi =
                    std::max(projected_gram_norm(fact->Bbar(kf)), opts.grid_min * 10.0);
                const double ratio = std::pow(hi / opts.grid_min,
                                              1.0 / static_cast<double>(opts.grid_count - 1));
                double best_a = kNaN, best_v = std::numeric_limits<double>::infinity();
                double a = opts.grid_min;
                for (int i = 0; i < opts.grid_count; ++i, a *= ratio) {
                    const double v = fn(a).value;
                    if (v < best_v) {
                        best_v = v;
                        best_a = a;
                    }
                }
                if (prev_selected && std::isfinite(alpha_prev) && alpha_prev >= opts.grid_min &&
                    alpha_prev <= hi && fn(alpha_prev).value < best_v)
                    best_a = alpha_prev;  // warm start from the previous selection
                alpha_k = refine_minimum(fn, best_a, opts.grid_min, hi, opts.refine_cap);
                const PhiEval sel = fn(alpha_k);
                te.p_value = sel.value;
                te.dp_value = sel.d1;
                te.fallback = alpha_k <= opts.grid_min * 1.0001 || alpha_k >= hi * 0.9999;
                selected = true;
            }
        }

        te.alpha = alpha_k;
        if (rt.active && kf >= 1 && std::isfinite(alpha_k)) {
            const auto sol = projected_tikhonov_solve(fact->Bbar(kf), bnorm, alpha_k);
            te.rre = rt.eval(sol.y);
        }
        te.wall_ms = now_ms() - t0;
        rep.trace.push_back(te);

        if (selected && prev_selected && std::isfinite(alpha_prev)) {
            const double rel =
                std::abs(alpha_k - alpha_prev) / (0.5 * std::abs(alpha_k + alpha_prev));
            stable_count = rel <= opts.tau_outer ? stable_count + 1 : 0;
            if (stable_count >= 3) {
                rep.stopped_by = StopRuleId::Stabilized;
                done = true;
            }
        }
        alpha_prev = alpha_k;
        prev_selected = selected;
    }

    if (!std::isfinite(alpha_prev))
        throw NumericalError("hybrid_solve: no parameter could be selected");
    rep.alpha_final = alpha_prev;
    rep.k_final = static_cast<int>(fact->k());
    rep.x = final_solution(*fact, rep.alpha_final);
    if (opts.keep_factorization) rep.factorization = fact;
    return rep;
}

}  // namespace adaptikh
