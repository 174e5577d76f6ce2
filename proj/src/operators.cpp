#include "adaptikh/operators.hpp"

#include <cmath>
#include <random>

namespace adaptikh {

Matrix LinearOperator::dense() const {
    Matrix a(rows(), cols());
    Vector ej = Vector::Zero(cols());
    for (Index j = 0; j < cols(); ++j) {
        ej[j] = 1.0;
        a.col(j) = apply(ej);
        ej[j] = 0.0;
    }
    return a;
}

Vector DenseOperator::apply(const Vector& x) const {
    if (x.size() != a_.cols()) throw InvalidArgument("DenseOperator::apply: size mismatch");
    return a_ * x;
}

Vector DenseOperator::apply_adjoint(const Vector& y) const {
    if (y.size() != a_.rows()) throw InvalidArgument("DenseOperator::apply_adjoint: size mismatch");
    return a_.transpose() * y;
}

GaussianBlurOperator::GaussianBlurOperator(Index img_size, double psf_sigma, Index band)
    : img_(img_size) {
    if (img_size < 8) throw InvalidArgument("GaussianBlurOperator: img_size must be >= 8");
    if (!(psf_sigma > 0.0)) throw InvalidArgument("GaussianBlurOperator: psf_sigma must be > 0");
    if (band < 0 || band > img_size) throw InvalidArgument("GaussianBlurOperator: band out of range");

    // Normalization uses the full (untruncated) kernel sum, so truncated rows
    // sum to at most one and the operator never amplifies intensity.
    double s = 1.0;
    for (Index d = 1;; ++d) {
        const double w = std::exp(-0.5 * static_cast<double>(d) * static_cast<double>(d) /
                                  (psf_sigma * psf_sigma));
        if (w < 1e-300) break;
        s += 2.0 * w;
        if (d > 64 * img_size) break;
    }

    a1_ = Matrix::Zero(img_, img_);
    for (Index i = 0; i < img_; ++i) {
        const Index j_lo = std::max<Index>(0, i - band);
        const Index j_hi = std::min<Index>(img_ - 1, i + band);
        for (Index j = j_lo; j <= j_hi; ++j) {
            const double d = static_cast<double>(i - j);
            a1_(i, j) = std::exp(-0.5 * d * d / (psf_sigma * psf_sigma)) / s;
        }
    }
}

Vector GaussianBlurOperator::apply(const Vector& x) const {
    if (x.size() != img_ * img_) throw InvalidArgument("GaussianBlurOperator::apply: size mismatch");
    using RowImage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowImage> img(x.data(), img_, img_);
    RowImage out = a1_ * img * a1_.transpose();
    return Eigen::Map<const Vector>(out.data(), img_ * img_);
}

Vector GaussianBlurOperator::apply_adjoint(const Vector& y) const {
    if (y.size() != img_ * img_)
        throw InvalidArgument("GaussianBlurOperator::apply_adjoint: size mismatch");
    using RowImage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowImage> img(y.data(), img_, img_);
    RowImage out = a1_.transpose() * img * a1_;
    return Eigen::Map<const Vector>(out.data(), img_ * img_);
}

Matrix GaussianBlurOperator::dense() const {
    // Row-major vectorization: entry ((i1,i2),(j1,j2)) = A1(i1,j1) A1(i2,j2).
    const Index n = img_ * img_;
    Matrix a(n, n);
    for (Index i1 = 0; i1 < img_; ++i1)
        for (Index i2 = 0; i2 < img_; ++i2)
            for (Index j1 = 0; j1 < img_; ++j1)
                for (Index j2 = 0; j2 < img_; ++j2)
                    a(i1 * img_ + i2, j1 * img_ + j2) = a1_(i1, j1) * a1_(i2, j2);
    return a;
}

double estimate_operator_norm(const LinearOperator& op, int iters, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Vector x(op.cols());
    for (Index i = 0; i < x.size(); ++i)
        x[i] = static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53 - 0.5;
    double nrm = x.norm();
    if (nrm == 0.0) return 0.0;
    x /= nrm;
    double est = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector ax = op.apply(x);
        est = ax.norm();
        if (est == 0.0) return 0.0;
        Vector z = op.apply_adjoint(ax);
        const double zn = z.norm();
        if (zn == 0.0) return est;
        x = z / zn;
    }
    return est;
}

}  // namespace adaptikh
