#pragma once

#include "adaptikh/operators.hpp"

namespace adaptikh {

/// Incremental Golub-Kahan bidiagonalization of the pair (A, b).
///
/// After k breakdown-free steps the stored data satisfy
///     A V_k   = U_{k+1} Bbar_k,      A^T U_k = V_k B_k^T,
/// with u_1 = b / ||b||, B_k lower bidiagonal (diagonal rho_1..rho_k,
/// subdiagonal sigma_2..sigma_k) and Bbar_k carrying the extra row
/// sigma_{k+1} e_k^T.
///
/// A factorization is single-owner mutable state; step() calls are
/// sequential. Snapshots taken through B()/Bbar() are plain values and may
/// be shared across threads.
class BidiagFactorization {
public:
    /// Requires ||b|| > 0. Performs no bidiagonalization step yet (k = 0).
    BidiagFactorization(OperatorPtr op, const Vector& b, bool reorthogonalize = true);

    /// One GKB step. Returns false on breakdown: the Krylov space is
    /// exhausted (an invariant subspace was found); the factorization built
    /// so far stays valid, and further calls keep returning false.
    bool step();

    Index k() const { return k_; }
    double bnorm() const { return bnorm_; }
    bool reorthogonalize() const { return reorth_; }
    double opnorm_estimate() const { return opnorm_; }

    bool breakdown() const { return breakdown_; }
    /// Step index at which breakdown was detected (0 if none).
    Index breakdown_index() const { return breakdown_index_; }

    /// rho_1..rho_k.
    const Vector& rho() const { return rho_; }
    /// sigma_2..sigma_{k+1}; entry i holds sigma_{i+2}. After a
    /// sigma-breakdown the trailing entry is exactly zero.
    const Vector& sigma() const { return sigma_; }

    /// B_j, j <= k: square j x j lower bidiagonal.
    LowerBidiagonal B(Index j) const;
    /// Bbar_j, j <= k: tall (j+1) x j lower bidiagonal.
    LowerBidiagonal Bbar(Index j) const;

    /// Orthonormal basis of K_k(A A^T, b): m x (k+1) (k+1 columns only when
    /// u_{k+1} was produced, i.e. no sigma-breakdown at step k).
    Eigen::Ref<const Matrix> U() const { return u_.leftCols(n_u_); }
    /// Orthonormal basis of K_k(A^T A, A^T b): n x k.
    Eigen::Ref<const Matrix> V() const { return v_.leftCols(k_); }

    const LinearOperator& op() const { return *op_; }

private:
    void grow(Matrix& m, Index needed_cols);

    OperatorPtr op_;
    bool reorth_;
    double bnorm_ = 0.0;
    double opnorm_ = 0.0;
    double tol_breakdown_ = 0.0;

    Index k_ = 0;
    Index n_u_ = 0;
    Matrix u_, v_;   // allocated with spare column capacity
    Vector rho_, sigma_;

    bool breakdown_ = false;
    Index breakdown_index_ = 0;
};

/// Residuals and orthogonality defects of a factorization, for invariant
/// checks. Costs 2k operator applications.
struct FactorizationDiagnostics {
    double recurrence_forward = 0.0;   // ||A V_k - U_{k+1} Bbar_k||_F
    double recurrence_adjoint = 0.0;   // ||A^T U_k - V_k B_k^T||_F
    double ortho_u = 0.0;              // max |U^T U - I|
    double ortho_v = 0.0;              // max |V^T V - I|
};

FactorizationDiagnostics check_factorization(const BidiagFactorization& f);

}  // namespace adaptikh
