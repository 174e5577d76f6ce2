#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace adaptikh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Precondition or configuration violation (bad sizes, invalid pairings, ...).
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure that the caller cannot fix by changing inputs
/// (eigensolver stagnation, non-finite objective values, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Lower bidiagonal matrix stored as its diagonal and subdiagonal.
///
/// Two shapes occur:
///   - square k x k      : sub has k-1 entries (the matrix B_k),
///   - tall (k+1) x k    : sub has k entries, the extra row holds only
///                         the trailing subdiagonal element (the matrix B_k-bar).
struct LowerBidiagonal {
    Vector diag;
    Vector sub;

    Index cols() const { return diag.size(); }
    Index rows() const { return diag.size() + (sub.size() == diag.size() ? 1 : 0); }
    bool is_tall() const { return sub.size() == diag.size(); }

    Matrix dense() const {
        Matrix b = Matrix::Zero(rows(), cols());
        for (Index i = 0; i < diag.size(); ++i) b(i, i) = diag[i];
        for (Index i = 0; i < sub.size(); ++i) b(i + 1, i) = sub[i];
        return b;
    }
};

}  // namespace adaptikh
