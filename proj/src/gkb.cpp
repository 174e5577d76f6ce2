#include "adaptikh/gkb.hpp"

namespace adaptikh {

BidiagFactorization::BidiagFactorization(OperatorPtr op, const Vector& b, bool reorthogonalize)
    : op_(std::move(op)), reorth_(reorthogonalize) {
    if (!op_) throw InvalidArgument("BidiagFactorization: null operator");
    if (b.size() != op_->rows()) throw InvalidArgument("BidiagFactorization: b size mismatch");
    bnorm_ = b.norm();
    if (!(bnorm_ > 0.0)) throw InvalidArgument("BidiagFactorization: zero right-hand side");

    opnorm_ = estimate_operator_norm(*op_);
    tol_breakdown_ = 1e-12 * opnorm_;

    u_.resize(op_->rows(), 8);
    v_.resize(op_->cols(), 8);
    u_.col(0) = b / bnorm_;
    n_u_ = 1;
}

void BidiagFactorization::grow(Matrix& m, Index needed_cols) {
    if (m.cols() < needed_cols) m.conservativeResize(Eigen::NoChange, 2 * m.cols());
}

bool BidiagFactorization::step() {
    if (breakdown_) return false;
    const Index p = std::min(op_->rows(), op_->cols());
    if (k_ >= p) {
        breakdown_ = true;
        breakdown_index_ = k_;
        return false;
    }

    const Index k = k_;  // completing step k+1 (1-based index k+1)

    // w = A^T u_{k+1} - sigma_{k+1} v_k
    Vector w = op_->apply_adjoint(u_.col(k));
    if (k > 0) w -= sigma_[k - 1] * v_.col(k - 1);
    if (reorth_ && k > 0) {
        auto vk = v_.leftCols(k);
        w -= vk * (vk.transpose() * w);
    }
    const double rho = w.norm();
    if (rho <= tol_breakdown_) {
        breakdown_ = true;
        breakdown_index_ = k_ + 1;
        return false;  // v would be unusable; factorization stays at k steps
    }
    grow(v_, k + 1);
    v_.col(k) = w / rho;

    Vector q = op_->apply(v_.col(k)) - rho * u_.col(k);
    if (reorth_) {
        auto uk = u_.leftCols(k + 1);
        q -= uk * (uk.transpose() * q);
    }
    const double sigma = q.norm();

    rho_.conservativeResize(k + 1);
    rho_[k] = rho;
    sigma_.conservativeResize(k + 1);
    k_ = k + 1;

    if (sigma <= tol_breakdown_) {
        sigma_[k] = 0.0;
        breakdown_ = true;
        breakdown_index_ = k_;
        return false;  // B_k complete; Bbar_k has an exactly zero last row
    }
    sigma_[k] = sigma;
    grow(u_, k + 2);
    u_.col(k + 1) = q / sigma;
    n_u_ = k + 2;
    return true;
}

LowerBidiagonal BidiagFactorization::B(Index j) const {
    if (j < 1 || j > k_) throw InvalidArgument("BidiagFactorization::B: index out of range");
    LowerBidiagonal b;
    b.diag = rho_.head(j);
    b.sub = sigma_.head(j - 1);
    return b;
}

LowerBidiagonal BidiagFactorization::Bbar(Index j) const {
    if (j < 1 || j > k_) throw InvalidArgument("BidiagFactorization::Bbar: index out of range");
    LowerBidiagonal b;
    b.diag = rho_.head(j);
    b.sub = sigma_.head(j);
    return b;
}

FactorizationDiagnostics check_factorization(const BidiagFactorization& f) {
    FactorizationDiagnostics d;
    const Index k = f.k();
    if (k == 0) return d;

    const auto u = f.U();
    const auto v = f.V();
    const Matrix bbar = f.Bbar(k).dense().topRows(u.cols());
    const Matrix bt = f.B(k).dense().transpose();

    Matrix av(u.rows(), k), atu(v.rows(), k);
    for (Index j = 0; j < k; ++j) av.col(j) = f.op().apply(v.col(j));
    for (Index j = 0; j < k; ++j) atu.col(j) = f.op().apply_adjoint(u.col(j));

    d.recurrence_forward = (av - u * bbar).norm();
    d.recurrence_adjoint = (atu - v * bt).norm();
    d.ortho_u = (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
    d.ortho_v = (v.transpose() * v - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
    return d;
}

}  // namespace adaptikh
