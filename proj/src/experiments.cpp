#include "adaptikh/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>

namespace adaptikh {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Vector log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("log_spaced: need 0 < lo < hi");
    if (count < 2) throw InvalidArgument("log_spaced: need count >= 2");
    Vector v(count);
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < count; ++i)
        v[i] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(i) /
                                  static_cast<double>(count - 1));
    return v;
}

const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::Error: return "error";
        case SurfaceKind::DP: return "dp";
        case SurfaceKind::GCV: return "gcv";
        case SurfaceKind::QO: return "qo";
        case SurfaceKind::Reginska: return "reginska";
    }
    return "?";
}

int default_thread_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* env = std::getenv("ADAPTIKH_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
    }
    return n;
}

void parallel_for(Index n, int threads, const std::function<void(Index)>& fn) {
    if (threads <= 1 || n < 2) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    const int nt = static_cast<int>(std::min<Index>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&, t]() {
            for (Index i = t; i < n; i += nt) fn(i);
        });
    for (auto& th : pool) th.join();
}

SurfaceEngine::SurfaceEngine(const TestProblem& problem, int kmax, bool reorthogonalize)
    : problem_(&problem), fact_(problem.op, problem.b_noisy, reorthogonalize) {
    if (kmax < 1) throw InvalidArgument("SurfaceEngine: kmax must be >= 1");
    for (int k = 0; k < kmax; ++k)
        if (!fact_.step()) break;
    kmax_ = static_cast<int>(fact_.k());
    if (kmax_ == 0) throw NumericalError("SurfaceEngine: immediate GKB breakdown");

    if (problem.x_exact.size() == problem.op->cols() && problem.x_exact.norm() > 0.0) {
        xnorm2_ = problem.x_exact.squaredNorm();
        xc_.resize(kmax_);
        for (Index j = 0; j < kmax_; ++j) xc_[j] = fact_.V().col(j).dot(problem.x_exact);
    }
    mass_ata_ = problem.op->apply_adjoint(problem.b_noisy).squaredNorm();
}

double SurfaceEngine::rre_at(int k, double alpha) const {
    if (xnorm2_ <= 0.0) throw InvalidArgument("SurfaceEngine::rre_at: exact solution missing");
    if (k < 1 || k > kmax_) throw InvalidArgument("SurfaceEngine::rre_at: k out of range");
    const auto sol = projected_tikhonov_solve(fact_.Bbar(k), fact_.bnorm(), alpha);
    const double r2 = xnorm2_ - 2.0 * sol.y.dot(xc_.head(k)) + sol.y.squaredNorm();
    return std::sqrt(std::max(r2, 0.0) / xnorm2_);
}

double SurfaceEngine::discrepancy2_at(int k, double alpha) const {
    if (k < 1 || k > kmax_) throw InvalidArgument("SurfaceEngine::discrepancy2_at: k out of range");
    const double mass = fact_.bnorm() * fact_.bnorm();
    const QuadratureRule rule = radau_rule_from_bbar(fact_.Bbar(k), mass, MeasureTag::AAT_b);
    return eval_form(rule, PhiId::DP_beta, 1.0 / alpha).value;
}

SurfaceData SurfaceEngine::compute(SurfaceKind kind, const Vector& alphas, int threads) const {
    if (kind == SurfaceKind::Error && xnorm2_ <= 0.0)
        throw InvalidArgument("SurfaceEngine: error surface needs the exact solution");

    SurfaceData out;
    out.kind = kind;
    out.alphas = alphas;
    out.kmax = kmax_;
    out.z = Matrix::Constant(kmax_, alphas.size(), kNaN);

    const double mass_aat = fact_.bnorm() * fact_.bnorm();

    for (int k = 1; k <= kmax_; ++k) {
        // Per-k small objects are built once and shared read-only by the
        // alpha-parallel loop.
        QuadratureRule radau_aat, radau_ata;
        switch (kind) {
            case SurfaceKind::Error:
                break;
            case SurfaceKind::DP:
            case SurfaceKind::GCV:
                radau_aat = radau_rule_from_bbar(fact_.Bbar(k), mass_aat, MeasureTag::AAT_b);
                break;
            case SurfaceKind::QO:
            case SurfaceKind::Reginska: {
                if (k < 2) continue;
                const LowerBidiagonal bhat = bidiag_qr(fact_.Bbar(k));
                radau_ata = radau_rule_hat(bhat, mass_ata_);
                if (kind == SurfaceKind::Reginska)
                    radau_aat = radau_rule_from_bbar(fact_.Bbar(k), mass_aat, MeasureTag::AAT_b);
                break;
            }
        }
        const LowerBidiagonal bbar = fact_.Bbar(k);

        auto row = out.z.row(k - 1);
        parallel_for(alphas.size(), threads, [&](Index j) {
            const double a = alphas[j];
            switch (kind) {
                case SurfaceKind::Error: {
                    const auto sol = projected_tikhonov_solve(bbar, fact_.bnorm(), a);
                    const double r2 =
                        xnorm2_ - 2.0 * sol.y.dot(xc_.head(k)) + sol.y.squaredNorm();
                    row[j] = std::sqrt(std::max(r2, 0.0) / xnorm2_);
                    break;
                }
                case SurfaceKind::DP:
                    row[j] = eval_form(radau_aat, PhiId::DP_beta, 1.0 / a).value;
                    break;
                case SurfaceKind::GCV:
                    row[j] = gcv_objective(radau_aat, a).value;
                    break;
                case SurfaceKind::QO:
                    row[j] = qo_objective(radau_ata, a).value;
                    break;
                case SurfaceKind::Reginska:
                    row[j] = reginska_objective(radau_aat, radau_ata, a).value;
                    break;
            }
        });
    }

    if (kind == SurfaceKind::Error) {
        out.optimal_alpha.resize(kmax_);
        out.optimal_z.resize(kmax_);
        for (int k = 0; k < kmax_; ++k) {
            Index jmin = 0;
            out.z.row(k).minCoeff(&jmin);
            out.optimal_alpha[k] = alphas[jmin];
            out.optimal_z[k] = out.z(k, jmin);
        }
    }
    return out;
}

}  // namespace adaptikh
