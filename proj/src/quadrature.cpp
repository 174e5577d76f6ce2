#include "adaptikh/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace adaptikh {

PhiEval phi_eval(PhiId id, double t, double s) {
    PhiEval r;
    switch (id) {
        case PhiId::DP_beta: {
            const double w = s * t + 1.0;
            const double w2 = w * w;
            r.value = 1.0 / w2;
            r.d1 = -2.0 * t / (w2 * w);
            r.d2 = 6.0 * t * t / (w2 * w2);
            return r;
        }
        case PhiId::DP_alpha:
        case PhiId::GCV1: {
            const double w = s + t;
            const double w2 = w * w;
            r.value = s * s / w2;
            r.d1 = 2.0 * s * t / (w2 * w);
            r.d2 = 2.0 * t * (t - 2.0 * s) / (w2 * w2);
            return r;
        }
        case PhiId::GCV2: {
            const double w = s + t;
            r.value = s / w;
            r.d1 = t / (w * w);
            r.d2 = -2.0 * t / (w * w * w);
            return r;
        }
        case PhiId::QO: {
            const double w = s + t;
            const double w2 = w * w;
            const double w4 = w2 * w2;
            r.value = s * s / w4;
            r.d1 = 2.0 * s * (t - s) / (w4 * w);
            r.d2 = 2.0 * (t * t - 6.0 * s * t + 3.0 * s * s) / (w4 * w2);
            return r;
        }
        case PhiId::R: {
            const double w = s + t;
            const double w2 = w * w;
            r.value = s / w2;
            r.d1 = (t - s) / (w2 * w);
            r.d2 = 2.0 * (s - 2.0 * t) / (w2 * w2);
            return r;
        }
    }
    throw InvalidArgument("phi_eval: unknown PhiId");
}

void tridiag_eigen_first_row(Vector d, Vector e, Vector& eigenvalues, Vector& first_components) {
    const Index n = d.size();
    if (n == 0) throw InvalidArgument("tridiag_eigen_first_row: empty matrix");
    if (n > 1 && e.size() != n - 1)
        throw InvalidArgument("tridiag_eigen_first_row: subdiagonal size mismatch");

    Vector z = Vector::Zero(n);
    z[0] = 1.0;

    if (n > 1) {
        // Implicit-shift QL sweeps; z accumulates the first row of the
        // eigenvector matrix.
        Vector ework(n);
        ework.head(n - 1) = e;
        ework[n - 1] = 0.0;

        const int iter_cap = 30 * static_cast<int>(n);
        int iters = 0;
        const double eps = std::numeric_limits<double>::epsilon();

        for (Index l = 0; l < n; ++l) {
            for (;;) {
                Index m = l;
                for (; m < n - 1; ++m) {
                    const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                    if (std::abs(ework[m]) <= eps * dd) break;
                }
                if (m == l) break;
                if (++iters > iter_cap)
                    throw NumericalError("tridiag_eigen_first_row: QL iteration cap exceeded");

                double g = (d[l + 1] - d[l]) / (2.0 * ework[l]);
                double rr = std::hypot(g, 1.0);
                g = d[m] - d[l] + ework[l] / (g + std::copysign(rr, g));
                double s = 1.0, c = 1.0, p = 0.0;
                Index i = m - 1;
                bool underflow = false;
                for (;; --i) {
                    double f = s * ework[i];
                    const double b = c * ework[i];
                    rr = std::hypot(f, g);
                    ework[i + 1] = rr;
                    if (rr == 0.0) {
                        d[i + 1] -= p;
                        ework[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / rr;
                    c = g / rr;
                    g = d[i + 1] - p;
                    rr = (d[i] - g) * s + 2.0 * c * b;
                    p = s * rr;
                    d[i + 1] = g + p;
                    g = c * rr - b;

                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;

                    if (i == l) break;
                }
                if (underflow) continue;
                d[l] -= p;
                ework[l] = g;
                ework[m] = 0.0;
            }
        }
    }

    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return d[a] < d[b]; });
    eigenvalues.resize(n);
    first_components.resize(n);
    for (Index j = 0; j < n; ++j) {
        eigenvalues[j] = d[order[j]];
        first_components[j] = z[order[j]];
    }
}

namespace {

// Tridiagonal entries of B B^T for a lower bidiagonal factor B (square or
// tall). Output has min(rows, diag-size+1) ... for a square k x k factor the
// result is k x k, for a tall (q+1) x q factor it is (q+1) x (q+1).
void bbt_tridiag(const LowerBidiagonal& b, Vector& d, Vector& e) {
    const Index rows = b.rows();
    d.resize(rows);
    e.resize(rows - 1);
    for (Index i = 0; i < rows; ++i) {
        double v = 0.0;
        if (i < b.diag.size()) v += b.diag[i] * b.diag[i];
        if (i > 0) v += b.sub[i - 1] * b.sub[i - 1];
        d[i] = v;
    }
    for (Index i = 0; i + 1 < rows; ++i) e[i] = b.diag[i] * b.sub[i];
}

QuadratureRule rule_from_factor(const LowerBidiagonal& b, double mass, MeasureTag measure,
                                RuleFlavor flavor) {
    Vector d, e, nodes, fc;
    bbt_tridiag(b, d, e);
    tridiag_eigen_first_row(std::move(d), std::move(e), nodes, fc);

    const double scale = nodes.cwiseAbs().maxCoeff();
    if (flavor == RuleFlavor::GaussRadauZero) {
        if (std::abs(nodes[0]) > 1e-10 * scale)
            throw NumericalError("radau rule: prescribed origin node missing");
        nodes[0] = 0.0;
    }
    for (Index j = 0; j < nodes.size(); ++j) {
        if (nodes[j] < 0.0) {
            if (nodes[j] < -1e-10 * scale)
                throw NumericalError("quadrature rule: significantly negative Ritz value");
            nodes[j] = 0.0;
        }
    }

    QuadratureRule rule;
    rule.nodes = std::move(nodes);
    rule.weights = (mass * fc.array().square()).matrix();
    rule.mass = mass;
    rule.flavor = flavor;
    rule.measure = measure;
    return rule;
}

}  // namespace

QuadratureRule gauss_rule(const LowerBidiagonal& b, double mass, MeasureTag measure) {
    if (b.is_tall()) throw InvalidArgument("gauss_rule: expected a square bidiagonal factor");
    return rule_from_factor(b, mass, measure, RuleFlavor::Gauss);
}

QuadratureRule radau_rule_from_bbar(const LowerBidiagonal& bbar, double mass,
                                    MeasureTag measure) {
    if (!bbar.is_tall())
        throw InvalidArgument("radau_rule_from_bbar: expected a tall bidiagonal factor");
    return rule_from_factor(bbar, mass, measure, RuleFlavor::GaussRadauZero);
}

LowerBidiagonal bidiag_qr(const LowerBidiagonal& bbar) {
    if (!bbar.is_tall()) throw InvalidArgument("bidiag_qr: expected a tall bidiagonal factor");
    const Index k = bbar.cols();
    LowerBidiagonal bhat;
    bhat.diag.resize(k);
    bhat.sub.resize(k - 1);

    // Chase the subdiagonal with row rotations; R^T is lower bidiagonal with
    // positive diagonal since rho_i > 0.
    double a = bbar.diag[0];
    for (Index i = 0; i < k; ++i) {
        const double s = bbar.sub[i];
        const double r = std::hypot(a, s);
        bhat.diag[i] = r;
        if (i + 1 < k) {
            const double ct = a / r, st = s / r;
            bhat.sub[i] = st * bbar.diag[i + 1];
            a = ct * bbar.diag[i + 1];
        }
    }
    return bhat;
}

QuadratureRule gauss_rule_hat(const LowerBidiagonal& bhat, double mass) {
    return gauss_rule(bhat, mass, MeasureTag::ATA_ATb);
}

QuadratureRule radau_rule_hat(const LowerBidiagonal& bhat, double mass) {
    const Index k = bhat.cols();
    if (k < 2) throw InvalidArgument("radau_rule_hat: needs k >= 2");
    LowerBidiagonal lead;  // first k-1 columns of Bhat_k: k x (k-1), tall
    lead.diag = bhat.diag.head(k - 1);
    lead.sub = bhat.sub.head(k - 1);
    return radau_rule_from_bbar(lead, mass, MeasureTag::ATA_ATb);
}

PhiEval eval_form(const QuadratureRule& rule, PhiId phi, double s) {
    const bool s_ok = (s > 0.0) || (phi == PhiId::DP_beta && s >= 0.0);
    if (!s_ok) throw InvalidArgument("eval_form: spectral parameter out of domain");
    PhiEval acc;
    for (Index j = 0; j < rule.points(); ++j) {
        const PhiEval p = phi_eval(phi, rule.nodes[j], s);
        acc.value += rule.weights[j] * p.value;
        acc.d1 += rule.weights[j] * p.d1;
        acc.d2 += rule.weights[j] * p.d2;
    }
    return acc;
}

PhiEval gcv_trace_from_nodes(const Vector& nodes, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("gcv_trace: alpha must be > 0");
    PhiEval acc;
    for (Index j = 0; j < nodes.size(); ++j) {
        const PhiEval p = phi_eval(PhiId::GCV2, nodes[j], alpha);
        acc.value += p.value;
        acc.d1 += p.d1;
        acc.d2 += p.d2;
    }
    return acc;
}

PhiEval gcv_trace_denominator(const LowerBidiagonal& bbar, double alpha) {
    if (!bbar.is_tall())
        throw InvalidArgument("gcv_trace_denominator: expected a tall bidiagonal factor");
    Vector d, e, nodes, fc;
    bbt_tridiag(bbar, d, e);
    tridiag_eigen_first_row(std::move(d), std::move(e), nodes, fc);
    for (Index j = 0; j < nodes.size(); ++j) nodes[j] = std::max(nodes[j], 0.0);
    return gcv_trace_from_nodes(nodes, alpha);
}

ProjectedSolution projected_tikhonov_solve(const LowerBidiagonal& bbar, double bnorm,
                                           double alpha) {
    if (!bbar.is_tall())
        throw InvalidArgument("projected_tikhonov_solve: expected a tall bidiagonal factor");
    if (alpha < 0.0) throw InvalidArgument("projected_tikhonov_solve: alpha must be >= 0");
    const Index k = bbar.cols();

    // Tridiagonal normal equations T y = bnorm rho_1 e_1, T = Bbar^T Bbar + alpha I.
    Vector d(k), e(k > 1 ? k - 1 : 0);
    for (Index i = 0; i < k; ++i)
        d[i] = bbar.diag[i] * bbar.diag[i] + bbar.sub[i] * bbar.sub[i] + alpha;
    for (Index i = 0; i + 1 < k; ++i) e[i] = bbar.sub[i] * bbar.diag[i + 1];

    // Symmetric tridiagonal LDL^T solve (no pivoting: T is SPD pre-breakdown).
    Vector y = Vector::Zero(k);
    y[0] = bnorm * bbar.diag[0];
    Vector piv(k), l(k > 1 ? k - 1 : 0);
    piv[0] = d[0];
    if (!(piv[0] > 0.0)) throw NumericalError("projected_tikhonov_solve: singular system");
    for (Index i = 1; i < k; ++i) {
        l[i - 1] = e[i - 1] / piv[i - 1];
        piv[i] = d[i] - l[i - 1] * e[i - 1];
        if (!(piv[i] > 0.0)) throw NumericalError("projected_tikhonov_solve: singular system");
        y[i] = y[i - 1] * (-l[i - 1]);
    }
    y[k - 1] /= piv[k - 1];
    for (Index i = k - 2; i >= 0; --i) y[i] = y[i] / piv[i] - l[i] * y[i + 1];

    ProjectedSolution sol;
    sol.y = std::move(y);
    double r2 = 0.0;
    {
        double r = bbar.diag[0] * sol.y[0] - bnorm;
        r2 += r * r;
        for (Index i = 1; i < k; ++i) {
            r = bbar.sub[i - 1] * sol.y[i - 1] + bbar.diag[i] * sol.y[i];
            r2 += r * r;
        }
        r = bbar.sub[k - 1] * sol.y[k - 1];
        r2 += r * r;
    }
    sol.residual_norm = std::sqrt(r2);
    return sol;
}

}  // namespace adaptikh
