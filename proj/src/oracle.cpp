#include "adaptikh/oracle.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace adaptikh {

OracleBundle::OracleBundle(const TestProblem& problem, Index dense_cap) {
    m_ = problem.op->rows();
    n_ = problem.op->cols();
    if (std::min(m_, n_) > dense_cap)
        throw InvalidArgument("OracleBundle: problem exceeds the dense cap");

    const Matrix a = problem.op->dense();
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sv_ = svd.singularValues();
    ub_ = svd.matrixU().transpose() * problem.b_noisy;
    bperp2_ = problem.b_noisy.squaredNorm() - ub_.squaredNorm();
    if (bperp2_ < 0.0) bperp2_ = 0.0;
    if (problem.x_exact.size() > 0) {
        vx_ = svd.matrixV().transpose() * problem.x_exact;
        xnorm_ = problem.x_exact.norm();
    }
    epsilon_ = problem.epsilon;
    bnorm_ = problem.b_noisy.norm();
}

double OracleBundle::quad_form_aat(PhiId phi, double s) const {
    double acc = 0.0;
    for (Index i = 0; i < sv_.size(); ++i)
        acc += ub_[i] * ub_[i] * phi_eval(phi, sv_[i] * sv_[i], s).value;
    if (bperp2_ > 0.0) acc += bperp2_ * phi_eval(phi, 0.0, s).value;
    return acc;
}

double OracleBundle::quad_form_ata(PhiId phi, double s) const {
    double acc = 0.0;
    for (Index i = 0; i < sv_.size(); ++i) {
        const double c = sv_[i] * ub_[i];
        acc += c * c * phi_eval(phi, sv_[i] * sv_[i], s).value;
    }
    return acc;
}

double OracleBundle::discrepancy2(double alpha) const {
    double acc = bperp2_;
    for (Index i = 0; i < sv_.size(); ++i) {
        const double r = alpha / (sv_[i] * sv_[i] + alpha);
        acc += r * r * ub_[i] * ub_[i];
    }
    return acc;
}

double OracleBundle::fdp_beta(double beta) const {
    double acc = bperp2_;
    for (Index i = 0; i < sv_.size(); ++i) {
        const double w = beta * sv_[i] * sv_[i] + 1.0;
        acc += ub_[i] * ub_[i] / (w * w);
    }
    return acc - epsilon_ * epsilon_;
}

double OracleBundle::gcv(double alpha) const {
    double tr = static_cast<double>(m_ - sv_.size());
    for (Index i = 0; i < sv_.size(); ++i) tr += alpha / (sv_[i] * sv_[i] + alpha);
    return discrepancy2(alpha) / (tr * tr);
}

double OracleBundle::qo(double alpha) const { return quad_form_ata(PhiId::QO, alpha); }

double OracleBundle::reginska(double alpha) const {
    double x2 = 0.0;
    for (Index i = 0; i < sv_.size(); ++i) {
        const double c = sv_[i] * ub_[i] / (sv_[i] * sv_[i] + alpha);
        x2 += c * c;
    }
    return std::sqrt(discrepancy2(alpha)) * std::sqrt(x2);
}

double OracleBundle::rre(double alpha) const {
    if (!(xnorm_ > 0.0)) throw InvalidArgument("OracleBundle::rre: exact solution missing");
    // || x(alpha) - x_exact ||^2 with both expanded in the right singular basis;
    // x_exact may have a component outside span(V) only if n > rank, which the
    // thin SVD keeps (vx_ has min(m,n) entries; remainder handled below).
    double acc = xnorm_ * xnorm_;
    for (Index i = 0; i < sv_.size(); ++i) {
        const double xi = sv_[i] * ub_[i] / (sv_[i] * sv_[i] + alpha);
        acc += xi * xi - 2.0 * xi * vx_[i];
    }
    return std::sqrt(std::max(acc, 0.0)) / xnorm_;
}

double OracleBundle::beta_star() const {
    const double eps2 = epsilon_ * epsilon_;
    if (!(eps2 > 0.0) || !(eps2 < bnorm_ * bnorm_))
        throw InvalidArgument("OracleBundle::beta_star: requires 0 < epsilon^2 < ||b||^2");
    if (fdp_beta(0.0) <= 0.0) return 0.0;

    double lo = 0.0, hi = 1.0;
    while (fdp_beta(hi) > 0.0) {
        hi *= 4.0;
        if (hi > 1e300) throw NumericalError("OracleBundle::beta_star: no root found");
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fdp_beta(mid) > 0.0 ? lo : hi) = mid;
    }
    // Newton polish on the smooth convex function.
    double beta = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        double f = bperp2_, df = 0.0;
        for (Index i = 0; i < sv_.size(); ++i) {
            const double t = sv_[i] * sv_[i];
            const double w = beta * t + 1.0;
            f += ub_[i] * ub_[i] / (w * w);
            df += ub_[i] * ub_[i] * (-2.0 * t) / (w * w * w);
        }
        f -= eps2;
        if (df == 0.0) break;
        const double step = f / df;
        beta -= step;
        if (std::abs(step) <= 1e-12 * beta) break;
    }
    return beta;
}

}  // namespace adaptikh
