#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "adaptikh/gkb.hpp"
#include "adaptikh/problems.hpp"
#include "adaptikh/rules.hpp"

namespace adaptikh {

struct SolveOptions {
    RuleKind rule = RuleKind::DP;
    StopRuleId stop = StopRuleId::DPResidual;
    double tau = 1e-2;
    int maxit = 200;
    double init_param = 1e-10;  // beta_1 for DP, alpha_1 otherwise
    int k_star = 0;             // 0: rule default
    bool reorthogonalize = true;
    bool keep_factorization = false;
    bool track_rre = true;  // requires x_exact
};

struct TraceEntry {
    int k = 0;
    double alpha = 0.0;        // parameter after this iteration, always in alpha
    double p_value = 0.0;      // rule functional at the new parameter
    double dp_value = 0.0;     // its derivative (NaN when not defined yet)
    double bound_lower = 0.0;  // NaN when the rule has no lower-bound family
    double bound_upper = 0.0;
    double stop_metric = 0.0;  // NaN before stop checks begin
    double rre = 0.0;          // NaN when not tracked
    double wall_ms = 0.0;
    bool newton_applied = false;
    bool fallback = false;
};

struct SolveReport {
    Vector x;
    double alpha_final = 0.0;
    int k_final = 0;
    StopRuleId stopped_by = StopRuleId::MaxIter;
    bool breakdown = false;
    Index breakdown_index = 0;
    std::vector<TraceEntry> trace;
    std::shared_ptr<BidiagFactorization> factorization;  // when requested
    double epsilon = 0.0;
    double bnorm = 0.0;
};

/// RRE(x) = ||x - x_exact|| / ||x_exact||.
double rre(const Vector& x, const Vector& x_exact);

/// The adaptive interlaced solver: one GKB step and one modified-Newton step
/// per iteration, stopping by the selected criterion. For DP the parameter
/// is iterated as beta and reported as alpha = 1/beta.
SolveReport adaptive_solve(const TestProblem& problem, const SolveOptions& opts);

struct HybridOptions {
    RuleKind rule = RuleKind::DP;
    double tau_outer = 1e-2;
    int maxit = 200;
    int grid_count = 50;
    double grid_min = 1e-10;
    int refine_cap = 100;
    bool reorthogonalize = true;
    bool keep_factorization = false;
    bool track_rre = true;
};

/// Baseline hybrid method: at every iteration the projected parameter
/// problem is solved to convergence (log-grid multi-start plus Newton
/// refinement; for DP, the root of the projected discrepancy). Outer stop:
/// the selected parameter changes by at most tau_outer relatively over three
/// consecutive iterations.
SolveReport hybrid_solve(const TestProblem& problem, const HybridOptions& opts);

}  // namespace adaptikh
