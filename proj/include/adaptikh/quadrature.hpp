#pragma once

#include "adaptikh/types.hpp"

namespace adaptikh {

enum class RuleFlavor { Gauss, GaussRadauZero };
enum class MeasureTag { AAT_b, ATA_ATb };

/// Quadrature rule for a quadratic form u^T phi(C) u: nodes are Ritz values,
/// weights are mass * (first eigenvector components)^2, so they sum to mass.
struct QuadratureRule {
    Vector nodes;    // ascending, >= 0
    Vector weights;  // > 0 (a structurally zero node may carry ~0 weight)
    double mass = 0.0;
    RuleFlavor flavor = RuleFlavor::Gauss;
    MeasureTag measure = MeasureTag::AAT_b;

    Index points() const { return nodes.size(); }
};

/// Integrand families phi(t, s) used by the parameter choice rules. Each is
/// rational in (t, s); additive constants (such as -epsbar^2 in the
/// discrepancy functional) are applied by callers.
enum class PhiId {
    DP_beta,   // (s t + 1)^-2          , s = beta >= 0
    DP_alpha,  // s^2 (s + t)^-2        , s = alpha > 0
    GCV1,      // s^2 (s + t)^-2
    GCV2,      // s   (s + t)^-1
    QO,        // s^2 (s + t)^-4
    R,         // s   (s + t)^-2
};

struct PhiEval {
    double value = 0.0;
    double d1 = 0.0;  // d/ds
    double d2 = 0.0;  // d^2/ds^2
};

/// Closed-form value and s-derivatives of one integrand at (t, s).
PhiEval phi_eval(PhiId id, double t, double s);

/// Eigenvalues of a symmetric tridiagonal matrix together with the first
/// component of each normalized eigenvector, by the implicit-shift QL
/// method with rotations accumulated against e_1 only. Results ascending.
/// d: diagonal, e: subdiagonal (size d.size()-1). Iteration cap 30 * n.
void tridiag_eigen_first_row(Vector d, Vector e, Vector& eigenvalues, Vector& first_components);

/// k-point Gauss rule from a square lower bidiagonal factor B:
/// nodes are the eigenvalues of B B^T.
QuadratureRule gauss_rule(const LowerBidiagonal& b, double mass,
                          MeasureTag measure = MeasureTag::AAT_b);

/// (q+1)-point Gauss-Radau rule with one node fixed at the origin, from a
/// tall (q+1) x q lower bidiagonal factor: nodes are the eigenvalues of the
/// rank-q matrix Bbar Bbar^T.
QuadratureRule radau_rule_from_bbar(const LowerBidiagonal& bbar, double mass,
                                    MeasureTag measure = MeasureTag::AAT_b);

/// Cholesky-factor transfer between the two measure pairs: given the tall
/// factor Bbar_k, returns the square lower bidiagonal Bhat_k with
/// Bhat_k Bhat_k^T = Bbar_k^T Bbar_k, computed by a chain of plane rotations
/// in O(k). The diagonal of the result is strictly positive.
LowerBidiagonal bidiag_qr(const LowerBidiagonal& bbar);

/// gauss_rule on Bhat_k with mass ||A^T b||^2.
QuadratureRule gauss_rule_hat(const LowerBidiagonal& bhat, double mass);

/// radau_rule on the leading k-1 columns of Bhat_k (k >= 2).
QuadratureRule radau_rule_hat(const LowerBidiagonal& bhat, double mass);

/// Sum_j w_j phi(theta_j, s) with analytic first and second s-derivatives.
/// Requires s > 0, except PhiId::DP_beta which allows s >= 0.
PhiEval eval_form(const QuadratureRule& rule, PhiId phi, double s);

/// trace(phi_GCV2(Bbar_k Bbar_k^T, alpha)) over all k+1 eigenvalues, with
/// analytic alpha-derivatives. This is the deliberately under-estimated GCV
/// denominator (no (m-k) term). Requires alpha > 0.
PhiEval gcv_trace_denominator(const LowerBidiagonal& bbar, double alpha);

/// Same trace evaluated from precomputed eigenvalues (e.g. a Radau rule's
/// nodes, which are exactly the eigenvalues of Bbar_k Bbar_k^T).
PhiEval gcv_trace_from_nodes(const Vector& nodes, double alpha);

struct ProjectedSolution {
    Vector y;                    // in R^k
    double residual_norm = 0.0;  // ||Bbar y - bnorm e_1||
};

/// Solves the projected Tikhonov problem
///     min ||Bbar_k y - bnorm e_1||^2 + alpha ||y||^2
/// through the tridiagonal normal equations
///     (Bbar_k^T Bbar_k + alpha I) y = bnorm rho_1 e_1
/// in O(k). alpha = 0 requires Bbar_k of full column rank.
ProjectedSolution projected_tikhonov_solve(const LowerBidiagonal& bbar, double bnorm,
                                           double alpha);

}  // namespace adaptikh
