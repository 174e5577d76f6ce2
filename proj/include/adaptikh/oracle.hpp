#pragma once

#include "adaptikh/problems.hpp"
#include "adaptikh/quadrature.hpp"

namespace adaptikh {

/// Closed-form evaluators for the full-dimensional functionals, built from a
/// dense SVD of the operator. Only available below a configurable dense cap.
class OracleBundle {
public:
    OracleBundle(const TestProblem& problem, Index dense_cap = 4096);

    const Vector& singular_values() const { return sv_; }
    Index m() const { return m_; }
    Index n() const { return n_; }

    /// b^T phi(A A^T, s) b, including the contribution of the component of b
    /// orthogonal to the range of A (an atom at t = 0).
    double quad_form_aat(PhiId phi, double s) const;
    /// (A^T b)^T phi(A^T A, s) (A^T b).
    double quad_form_ata(PhiId phi, double s) const;

    /// ||b - A x(alpha)||^2 for the full Tikhonov solution.
    double discrepancy2(double alpha) const;
    /// fhat_DP(beta) = b^T (beta A A^T + I)^{-2} b - epsilon^2.
    double fdp_beta(double beta) const;
    /// Dense GCV with the exact trace (including the m - min(m,n) term).
    double gcv(double alpha) const;
    /// Dense quasi-optimality functional.
    double qo(double alpha) const;
    /// Dense Reginska functional ||b - A x(alpha)|| ||x(alpha)||.
    double reginska(double alpha) const;
    /// Relative restoration error of the full Tikhonov solution x(alpha).
    double rre(double alpha) const;

    /// Root beta* of fdp_beta, bisection bracket + Newton polish, relative
    /// accuracy 1e-12. Requires 0 < epsilon^2 < ||b||^2.
    double beta_star() const;

    double epsilon() const { return epsilon_; }
    double bnorm() const { return bnorm_; }

private:
    Index m_ = 0, n_ = 0;
    Vector sv_;        // singular values, descending
    Vector ub_;        // U^T b (thin)
    double bperp2_ = 0.0;  // ||b - U U^T b||^2
    Vector vx_;        // V^T x_exact (thin)
    double xnorm_ = 0.0;
    double epsilon_ = 0.0;
    double bnorm_ = 0.0;
};

}  // namespace adaptikh
