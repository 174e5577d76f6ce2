#pragma once

#include <functional>

#include "adaptikh/driver.hpp"

namespace adaptikh {

/// count logarithmically equispaced values from lo to hi inclusive.
Vector log_spaced(double lo, double hi, int count);

enum class SurfaceKind { Error, DP, GCV, QO, Reginska };
const char* to_string(SurfaceKind k);

struct SurfaceData {
    SurfaceKind kind = SurfaceKind::Error;
    Vector alphas;
    int kmax = 0;          // rows actually computed (may shrink on breakdown)
    Matrix z;              // kmax x alphas.size(); NaN where undefined
    Vector optimal_alpha;  // per k, argmin over the grid (Error kind only)
    Vector optimal_z;
};

/// Shares one GKB factorization of a problem across every surface kind and
/// all (alpha, k) grid points; grid evaluation parallelizes over alpha.
class SurfaceEngine {
public:
    SurfaceEngine(const TestProblem& problem, int kmax, bool reorthogonalize = true);

    SurfaceData compute(SurfaceKind kind, const Vector& alphas, int threads = 1) const;

    int kmax() const { return kmax_; }
    const BidiagFactorization& factorization() const { return fact_; }

    /// RRE of the projected Tikhonov solution x_k(alpha), O(k).
    double rre_at(int k, double alpha) const;
    /// Squared projected discrepancy ||b - A x_k(alpha)||^2 via the Radau form.
    double discrepancy2_at(int k, double alpha) const;

private:
    const TestProblem* problem_;
    BidiagFactorization fact_;
    int kmax_ = 0;
    Vector xc_;  // V^T x_exact
    double xnorm2_ = 0.0;
    double mass_ata_ = 0.0;
};

/// Run fn(i) for i in [0, n) on up to `threads` std::threads.
void parallel_for(Index n, int threads, const std::function<void(Index)>& fn);

/// Thread-count default: ADAPTIKH_THREADS when set, hardware concurrency
/// otherwise, at least 1.
int default_thread_count();

}  // namespace adaptikh
