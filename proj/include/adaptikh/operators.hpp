#pragma once

#include <memory>

#include "adaptikh/types.hpp"

namespace adaptikh {

/// Matrix-free linear operator A : R^n -> R^m.
///
/// Implementations must be immutable after construction; apply() and
/// apply_adjoint() may be called concurrently from multiple threads.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual Index rows() const = 0;
    virtual Index cols() const = 0;

    /// y = A x, x in R^n.
    virtual Vector apply(const Vector& x) const = 0;

    /// y = A^T x, x in R^m.
    virtual Vector apply_adjoint(const Vector& x) const = 0;

    /// Dense assembly, used by the SVD oracle and small-problem tests.
    /// Default applies the operator to every canonical basis vector.
    virtual Matrix dense() const;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

/// Operator backed by an explicitly stored matrix.
class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(Matrix a) : a_(std::move(a)) {}

    Index rows() const override { return a_.rows(); }
    Index cols() const override { return a_.cols(); }
    Vector apply(const Vector& x) const override;
    Vector apply_adjoint(const Vector& y) const override;
    Matrix dense() const override { return a_; }

    const Matrix& matrix() const { return a_; }

private:
    Matrix a_;
};

/// Separable Gaussian blur A = A1 (x) A1 acting on square images, applied
/// matrix-free as A1 * X * A1^T on the image reshaped row-major to
/// img_size x img_size. A1 is banded symmetric Toeplitz with zero boundary
/// conditions; entries exp(-(i-j)^2 / (2 sigma^2)) / S for |i-j| <= band,
/// where S is the sum of the full untruncated 1-D kernel.
class GaussianBlurOperator final : public LinearOperator {
public:
    GaussianBlurOperator(Index img_size, double psf_sigma, Index band);

    Index rows() const override { return img_ * img_; }
    Index cols() const override { return img_ * img_; }
    Vector apply(const Vector& x) const override;
    Vector apply_adjoint(const Vector& y) const override;
    Matrix dense() const override;

    Index img_size() const { return img_; }
    const Matrix& kernel_1d() const { return a1_; }

private:
    Index img_;
    Matrix a1_;
};

/// Largest-singular-value estimate by power iteration on A^T A.
/// Seeded so repeated calls give identical results.
double estimate_operator_norm(const LinearOperator& op, int iters = 10,
                              std::uint64_t seed = 0x9E3779B97F4A7C15ull);

}  // namespace adaptikh
