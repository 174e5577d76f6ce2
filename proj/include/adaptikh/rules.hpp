#pragma once

#include <vector>

#include "adaptikh/quadrature.hpp"

namespace adaptikh {

enum class RuleKind { DP, GCV, QO, Reginska };
enum class StopRuleId { DPResidual, DPAveraged, DPCombined, SC1, SC2, MaxIter, Breakdown, Stabilized };

const char* to_string(RuleKind k);
const char* to_string(StopRuleId s);

/// True when the stopping criterion may be paired with the rule:
/// DP takes the three discrepancy variants; GCV only SC1 (no lower-bound
/// family exists for it); QO and Reginska take SC1 or SC2.
bool valid_pairing(RuleKind rule, StopRuleId stop);

/// Default first Newton iteration: 1 for DP, ceil(3 ln(min(m,n))) for GCV,
/// 2 for QO and Reginska.
int default_k_star(RuleKind rule, Index m, Index n);

/// State of one parameter iteration. param is beta for DP and alpha
/// otherwise; it stays strictly positive once a Newton step has run.
struct RuleState {
    RuleKind kind = RuleKind::DP;
    double param = 0.0;
    double param_prev = 0.0;  // iterate before the latest step
    int k_star = 1;
    double epsilon = 0.0;     // DP only
    double tau = 1e-2;
    int steps_taken = 0;
    bool step_was_clamped = false;   // DP: last update would have decreased beta
    bool step_was_fallback = false;  // non-DP: last update used the damped fallback
};

struct NewtonInfo {
    double value = 0.0;  // objective (DP: G_k at the old beta)
    double d1 = 0.0;
    double d2 = 0.0;
};

/// One modified-Newton step for the discrepancy principle:
///     beta <- beta - G_k(beta) / G_k'(beta),
/// G_k(beta) = eval_form(gauss_k, DP_beta, beta) - epsilon^2. The first call
/// checks the convergence hypotheses G_1(beta_1) >= 0 and epsilon^2 < ||b||^2.
/// A step that would decrease beta (floating-point artifact) is rejected and
/// flagged; the iterate never moves left.
NewtonInfo dp_newton_step(RuleState& state, const QuadratureRule& gauss_k, double epsilon);

struct StopCheck {
    bool stop = false;
    double metric = 0.0;
    bool guard_tripped = false;  // a division guard voided the criterion
};

/// Discrepancy stopping tests at the current beta:
///   DPResidual:  R_{k+1}(beta) <= tau eps^2
///   DPAveraged:  (R_{k+1}(beta) + G_k(beta)) / 2 <= tau eps^2
///   DPCombined:  [(R-G)/2] / [(R+G)/2] + G / eps^2 <= tau
/// The returned metric is the literal left-hand side.
StopCheck dp_stop_check(const RuleState& state, const QuadratureRule& gauss_k,
                        const QuadratureRule& radau_k1, StopRuleId which);

/// GCV objective P_k(alpha) = R_{k+1}(GCV1) / trace(GCV2)^2 with analytic
/// derivatives; the trace runs over the Radau rule's nodes, which are the
/// eigenvalues of Bbar_k Bbar_k^T.
PhiEval gcv_objective(const QuadratureRule& radau_k1, double alpha);

/// Quasi-optimality upper bound (objective) and Gauss lower bound.
PhiEval qo_objective(const QuadratureRule& radau_hat, double alpha);
double qo_lower(const QuadratureRule& gauss_hat, double alpha);

/// Reginska upper bound sqrt(R_{k+1}(phi_R, AA^T)) sqrt(R_k(phi_R, A^TA))
/// with derivatives, and the matching Gauss lower bound.
PhiEval reginska_objective(const QuadratureRule& radau_k1, const QuadratureRule& radau_hat,
                           double alpha);
double reginska_lower(const QuadratureRule& gauss_k, const QuadratureRule& gauss_hat,
                      double alpha);

/// One damped modified-Newton step on dP_k = 0 for the non-DP rules. The raw
/// step alpha - d1/d2 is taken when d2 > 0, the step stays in (0, inf) and
/// |step| <= 10 alpha; otherwise alpha moves half a decade downhill in P.
void generic_newton_step(RuleState& state, const PhiEval& objective);

/// SC1: relative parameter change plus relative gradient residual, both at
/// the new iterate.
StopCheck stop_sc1(const RuleState& state, double p_new, double dp_new);

/// SC2: relative gap to the averaged bound plus relative gradient residual.
StopCheck stop_sc2(const RuleState& state, double p_new, double dp_new, double p_lower_new);

}  // namespace adaptikh
