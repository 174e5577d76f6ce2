#include "adaptikh/rules.hpp"

#include <cmath>
#include <limits>

namespace adaptikh {

namespace {
constexpr double kDivisionGuard = 1e-30;
}

const char* to_string(RuleKind k) {
    switch (k) {
        case RuleKind::DP: return "dp";
        case RuleKind::GCV: return "gcv";
        case RuleKind::QO: return "qo";
        case RuleKind::Reginska: return "reginska";
    }
    return "?";
}

const char* to_string(StopRuleId s) {
    switch (s) {
        case StopRuleId::DPResidual: return "dp-residual";
        case StopRuleId::DPAveraged: return "dp-averaged";
        case StopRuleId::DPCombined: return "dp-combined";
        case StopRuleId::SC1: return "sc1";
        case StopRuleId::SC2: return "sc2";
        case StopRuleId::MaxIter: return "maxiter";
        case StopRuleId::Breakdown: return "breakdown";
        case StopRuleId::Stabilized: return "stabilized";
    }
    return "?";
}

bool valid_pairing(RuleKind rule, StopRuleId stop) {
    switch (rule) {
        case RuleKind::DP:
            return stop == StopRuleId::DPResidual || stop == StopRuleId::DPAveraged ||
                   stop == StopRuleId::DPCombined;
        case RuleKind::GCV:
            return stop == StopRuleId::SC1;
        case RuleKind::QO:
        case RuleKind::Reginska:
            return stop == StopRuleId::SC1 || stop == StopRuleId::SC2;
    }
    return false;
}

int default_k_star(RuleKind rule, Index m, Index n) {
    switch (rule) {
        case RuleKind::DP: return 1;
        case RuleKind::GCV:
            return static_cast<int>(std::ceil(3.0 * std::log(static_cast<double>(std::min(m, n)))));
        case RuleKind::QO:
        case RuleKind::Reginska: return 2;
    }
    return 1;
}

NewtonInfo dp_newton_step(RuleState& state, const QuadratureRule& gauss_k, double epsilon) {
    if (state.kind != RuleKind::DP) throw InvalidArgument("dp_newton_step: state is not DP");
    const double eps2 = epsilon * epsilon;
    if (eps2 >= gauss_k.mass)
        throw InvalidArgument(
            "dp_newton_step: epsilon^2 >= ||b||^2; the noise estimate exceeds the data norm");

    const PhiEval g = eval_form(gauss_k, PhiId::DP_beta, state.param);
    NewtonInfo info;
    info.value = g.value - eps2;
    info.d1 = g.d1;
    info.d2 = g.d2;

    if (state.steps_taken == 0 && info.value < 0.0)
        throw InvalidArgument(
            "dp_newton_step: G_1(beta_1) < 0; restart with a smaller initial beta");
    if (!(info.d1 < 0.0))
        throw NumericalError("dp_newton_step: nonnegative derivative of the Gauss bound");

    const double beta_new = state.param - info.value / info.d1;
    state.param_prev = state.param;
    state.step_was_clamped = beta_new < state.param;
    if (!state.step_was_clamped) state.param = beta_new;
    ++state.steps_taken;
    return info;
}

StopCheck dp_stop_check(const RuleState& state, const QuadratureRule& gauss_k,
                        const QuadratureRule& radau_k1, StopRuleId which) {
    const double eps2 = state.epsilon * state.epsilon;
    const double r = eval_form(radau_k1, PhiId::DP_beta, state.param).value - eps2;
    const double g = eval_form(gauss_k, PhiId::DP_beta, state.param).value - eps2;

    StopCheck out;
    switch (which) {
        case StopRuleId::DPResidual:
            out.metric = r;
            out.stop = r <= state.tau * eps2;
            return out;
        case StopRuleId::DPAveraged:
            out.metric = 0.5 * (r + g);
            out.stop = out.metric <= state.tau * eps2;
            return out;
        case StopRuleId::DPCombined: {
            const double avg = 0.5 * (r + g);
            const double gap = 0.5 * (r - g);
            double first = 0.0;
            if (gap != 0.0) {
                if (std::abs(avg) < kDivisionGuard) {
                    out.guard_tripped = true;
                    out.metric = std::numeric_limits<double>::infinity();
                    return out;
                }
                first = gap / avg;
            }
            out.metric = first + g / eps2;
            out.stop = out.metric <= state.tau;
            return out;
        }
        default:
            throw InvalidArgument("dp_stop_check: not a discrepancy stopping rule");
    }
}

PhiEval gcv_objective(const QuadratureRule& radau_k1, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("gcv_objective: alpha must be > 0");
    const PhiEval num = eval_form(radau_k1, PhiId::GCV1, alpha);
    const PhiEval den = gcv_trace_from_nodes(radau_k1.nodes, alpha);

    const double d = den.value;
    const double d2 = d * d;
    PhiEval out;
    out.value = num.value / d2;
    out.d1 = num.d1 / d2 - 2.0 * num.value * den.d1 / (d2 * d);
    out.d2 = num.d2 / d2 - 4.0 * num.d1 * den.d1 / (d2 * d) -
             2.0 * num.value * den.d2 / (d2 * d) +
             6.0 * num.value * den.d1 * den.d1 / (d2 * d2);
    return out;
}

PhiEval qo_objective(const QuadratureRule& radau_hat, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("qo_objective: alpha must be > 0");
    return eval_form(radau_hat, PhiId::QO, alpha);
}

double qo_lower(const QuadratureRule& gauss_hat, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("qo_lower: alpha must be > 0");
    return eval_form(gauss_hat, PhiId::QO, alpha).value;
}

namespace {

/// P = sqrt(f1 f2) with derivatives via logarithmic differentiation.
PhiEval sqrt_product(const PhiEval& f1, const PhiEval& f2) {
    if (f1.value < 0.0 || f2.value < 0.0)
        throw NumericalError("reginska: negative radicand in bound product");
    PhiEval out;
    out.value = std::sqrt(f1.value) * std::sqrt(f2.value);
    if (f1.value == 0.0 || f2.value == 0.0) return out;  // derivative treated as 0
    const double g1 = f1.d1 / f1.value, g2 = f2.d1 / f2.value;
    const double g = 0.5 * (g1 + g2);
    const double gp = 0.5 * (f1.d2 / f1.value - g1 * g1 + f2.d2 / f2.value - g2 * g2);
    out.d1 = out.value * g;
    out.d2 = out.value * (g * g + gp);
    return out;
}

}  // namespace

PhiEval reginska_objective(const QuadratureRule& radau_k1, const QuadratureRule& radau_hat,
                           double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("reginska_objective: alpha must be > 0");
    return sqrt_product(eval_form(radau_k1, PhiId::R, alpha),
                        eval_form(radau_hat, PhiId::R, alpha));
}

double reginska_lower(const QuadratureRule& gauss_k, const QuadratureRule& gauss_hat,
                      double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("reginska_lower: alpha must be > 0");
    return sqrt_product(eval_form(gauss_k, PhiId::R, alpha),
                        eval_form(gauss_hat, PhiId::R, alpha))
        .value;
}

void generic_newton_step(RuleState& state, const PhiEval& objective) {
    if (!std::isfinite(objective.value) || !std::isfinite(objective.d1) ||
        !std::isfinite(objective.d2))
        throw NumericalError("generic_newton_step: non-finite objective values");

    const double alpha = state.param;
    state.param_prev = alpha;
    state.step_was_fallback = false;
    ++state.steps_taken;

    if (objective.d1 == 0.0) return;  // stationary point

    if (objective.d2 > 0.0) {
        const double raw = alpha - objective.d1 / objective.d2;
        if (raw > 0.0 && std::isfinite(raw) && std::abs(raw - alpha) <= 10.0 * alpha) {
            state.param = raw;
            return;
        }
    }
    // Half-decade geometric move downhill in P_k.
    state.step_was_fallback = true;
    const double factor = std::pow(10.0, 0.5);
    state.param = objective.d1 > 0.0 ? alpha / factor : alpha * factor;
}

StopCheck stop_sc1(const RuleState& state, double p_new, double dp_new) {
    StopCheck out;
    const double avg = 0.5 * std::abs(state.param + state.param_prev);
    if (avg < kDivisionGuard || std::abs(p_new) < kDivisionGuard) {
        out.guard_tripped = true;
        out.metric = std::numeric_limits<double>::infinity();
        return out;
    }
    out.metric = std::abs(state.param - state.param_prev) / avg + std::abs(dp_new) / std::abs(p_new);
    out.stop = out.metric < state.tau;
    return out;
}

StopCheck stop_sc2(const RuleState& state, double p_new, double dp_new, double p_lower_new) {
    StopCheck out;
    const double pbar = 0.5 * (p_new + p_lower_new);
    if (std::abs(pbar) < kDivisionGuard || std::abs(p_new) < kDivisionGuard) {
        out.guard_tripped = true;
        out.metric = std::numeric_limits<double>::infinity();
        return out;
    }
    out.metric = std::abs(p_new - pbar) / std::abs(pbar) + std::abs(dp_new) / std::abs(p_new);
    out.stop = out.metric < state.tau;
    return out;
}

}  // namespace adaptikh
