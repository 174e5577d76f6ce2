// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code = number of
// failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../tools/cli_app.hpp"
#include "adaptikh/driver.hpp"
#include "adaptikh/experiments.hpp"
#include "adaptikh/oracle.hpp"
#include "test_helpers.hpp"

using namespace adaptikh;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    bool pass = true;
    std::string detail;
    int checks = 0;
    int failures = 0;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (!ok) {
            ++failures;
            pass = false;
            if (!detail.empty()) detail += "; ";
            if (failures <= 4) detail += what;
        }
    }
};

class Timer {
public:
    Timer() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

const PhiId kAllPhi[] = {PhiId::DP_beta, PhiId::DP_alpha, PhiId::GCV1,
                         PhiId::GCV2,    PhiId::QO,       PhiId::R};

// ---------------------------------------------------------------------------
// 1. Bound bracketing and nesting on the random dense suite.
// ---------------------------------------------------------------------------
Criterion criterion1() {
    Criterion c;
    Timer timer;
    std::mt19937_64 shape_gen(0xC1);
    for (int inst = 0; inst < 100; ++inst) {
        const Index m = 8 + static_cast<Index>(shape_gen() % 23);
        const Index n = 8 + static_cast<Index>(shape_gen() % 23);
        const auto p = testutil::random_ill_posed(m, n, 1000 + inst);
        const Index rank = std::min(m, n);
        const int kmax = static_cast<int>(std::min<Index>(7, rank));
        const OracleBundle oracle(p);

        BidiagFactorization f(p.op, p.b_noisy);
        bool complete = true;
        for (int i = 0; i < kmax && complete; ++i) complete = f.step();
        if (f.k() < 4) continue;
        const double mass_aat = p.b_noisy.squaredNorm();
        const double mass_ata = p.op->apply_adjoint(p.b_noisy).squaredNorm();

        const Vector betas = log_spaced(1e-2, 1e3, 20);
        const Vector alphas = log_spaced(1e-5, 1e2, 20);
        const int kmid_max = static_cast<int>(std::min<Index>(5, f.k() - 2));

        for (int k = 2; k <= kmid_max; ++k) {
            const auto g_k = gauss_rule(f.B(k), mass_aat);
            const auto g_k1 = gauss_rule(f.B(k + 1), mass_aat);
            const auto r_k1 = radau_rule_from_bbar(f.Bbar(k), mass_aat);
            const auto r_k2 = radau_rule_from_bbar(f.Bbar(k + 1), mass_aat);
            for (Index j = 0; j < betas.size(); ++j) {
                const double beta = betas[j];
                const double dense = oracle.quad_form_aat(PhiId::DP_beta, beta);
                const double slack = 1e-10 * std::abs(dense);
                const double gk = eval_form(g_k, PhiId::DP_beta, beta).value;
                const double gk1 = eval_form(g_k1, PhiId::DP_beta, beta).value;
                const double rk1 = eval_form(r_k1, PhiId::DP_beta, beta).value;
                const double rk2 = eval_form(r_k2, PhiId::DP_beta, beta).value;
                c.expect(gk <= gk1 + slack && gk1 <= dense + slack && dense <= rk2 + slack &&
                             rk2 <= rk1 + slack,
                         "dp chain violated at inst " + std::to_string(inst));
            }

            const auto bh_k = bidiag_qr(f.Bbar(k));
            const auto bh_k1 = bidiag_qr(f.Bbar(k + 1));
            const auto gh_k = gauss_rule_hat(bh_k, mass_ata);
            const auto gh_k1 = gauss_rule_hat(bh_k1, mass_ata);
            const auto rh_k1 = radau_rule_hat(bh_k1, mass_ata);
            const auto rh_k2 = radau_rule_hat(bidiag_qr(f.Bbar(k + 2)), mass_ata);
            const auto g_aat_k = gauss_rule(f.B(k), mass_aat);
            const auto g_aat_k1 = gauss_rule(f.B(k + 1), mass_aat);
            const auto r_aat_k1 = radau_rule_from_bbar(f.Bbar(k), mass_aat);
            const auto r_aat_k2 = radau_rule_from_bbar(f.Bbar(k + 1), mass_aat);
            for (Index j = 0; j < alphas.size(); ++j) {
                const double alpha = alphas[j];
                {
                    const double dense = oracle.qo(alpha);
                    const double slack = 1e-10 * std::abs(dense);
                    const double gk = qo_lower(gh_k, alpha);
                    const double gk1 = qo_lower(gh_k1, alpha);
                    const double rk1 = qo_objective(rh_k1, alpha).value;
                    const double rk2 = qo_objective(rh_k2, alpha).value;
                    c.expect(gk <= gk1 + slack && gk1 <= dense + slack &&
                                 dense <= rk2 + slack && rk2 <= rk1 + slack,
                             "qo chain violated at inst " + std::to_string(inst));
                }
                {
                    const double dense = oracle.reginska(alpha);
                    const double slack = 1e-10 * std::abs(dense);
                    const double gk = reginska_lower(g_aat_k, gh_k, alpha);
                    const double gk1 = reginska_lower(g_aat_k1, gh_k1, alpha);
                    const double rk1 = reginska_objective(r_aat_k1, rh_k1, alpha).value;
                    const double rk2 = reginska_objective(r_aat_k2, rh_k2, alpha).value;
                    c.expect(gk <= gk1 + slack && gk1 <= dense + slack &&
                                 dense <= rk2 + slack && rk2 <= rk1 + slack,
                             "reginska chain violated at inst " + std::to_string(inst));
                }
            }
        }
    }
    const double secs = timer.seconds();
    c.expect(secs < 30.0, "runtime " + num(secs) + "s exceeds 30s");
    c.detail = std::to_string(c.checks) + " checks, " + num(secs) + "s" +
               (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

// ---------------------------------------------------------------------------
// 2. Modified Newton convergence for the discrepancy principle.
// ---------------------------------------------------------------------------
Criterion criterion2() {
    Criterion c;
    Timer timer;
    const double tau = 1e-2;

    for (int inst = 0; inst < 100; ++inst) {
        std::mt19937_64 shape_gen(0xC2 + inst);
        const Index m = 8 + static_cast<Index>(shape_gen() % 23);
        const Index n = 8 + static_cast<Index>(shape_gen() % 23);
        const auto p = testutil::random_ill_posed(m, n, 2000 + inst);
        const OracleBundle oracle(p);
        const double beta_star = oracle.beta_star();
        const double eps2 = p.epsilon * p.epsilon;

        SolveOptions opts;
        opts.rule = RuleKind::DP;
        opts.stop = StopRuleId::DPResidual;
        opts.tau = tau;
        opts.maxit = static_cast<int>(std::min(m, n)) + 50;
        const auto rep = adaptive_solve(p, opts);

        double prev_beta = 0.0;
        bool monotone = true, bounded = true;
        for (const auto& te : rep.trace) {
            const double beta = 1.0 / te.alpha;
            if (beta < prev_beta * (1.0 - 1e-14)) monotone = false;
            if (beta > beta_star * (1.0 + 1e-10)) bounded = false;
            prev_beta = beta;
        }
        c.expect(monotone, "beta iterates not nondecreasing at inst " + std::to_string(inst));
        c.expect(bounded, "beta iterates exceed beta* at inst " + std::to_string(inst));
        const double fdp_final = oracle.fdp_beta(1.0 / rep.alpha_final);
        c.expect(std::abs(fdp_final) <= tau * eps2,
                 "residual functional " + num(fdp_final) + " above tol at inst " +
                     std::to_string(inst));
    }

    // Scalar closed-form case A = [1], b = [2], eps^2 = 1, root beta* = 1.
    {
        TestProblem scalar;
        scalar.op = std::make_shared<DenseOperator>(Matrix::Identity(1, 1));
        scalar.x_exact = Vector::Constant(1, 2.0);
        scalar.b_exact = Vector::Constant(1, 2.0);
        scalar.b_noisy = scalar.b_exact;
        scalar.e = Vector::Zero(1);
        scalar.epsilon = 1.0;
        SolveOptions opts;
        opts.rule = RuleKind::DP;
        opts.stop = StopRuleId::DPResidual;
        opts.tau = 1e-14;  // drive to the root itself
        opts.maxit = 30;
        opts.track_rre = false;
        const auto rep = adaptive_solve(scalar, opts);
        const double beta_final = 1.0 / rep.alpha_final;
        c.expect(std::abs(beta_final - 1.0) <= 1e-6,
                 "scalar case beta " + num(beta_final) + " not within 1e-6 of 1 in 30 steps");
        double prev = 0.0;
        for (const auto& te : rep.trace) {
            const double beta = 1.0 / te.alpha;
            c.expect(beta >= prev && beta <= 1.0 + 1e-12, "scalar case not monotone in [0,1]");
            prev = beta;
        }
    }
    c.detail = std::to_string(c.checks) + " checks, " + num(timer.seconds()) + "s" +
               (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

// ---------------------------------------------------------------------------
// 3. Quadrature exactness at full depth.
// ---------------------------------------------------------------------------
Criterion criterion3() {
    Criterion c;
    Timer timer;
    const Vector params = log_spaced(1e-4, 1e2, 10);
    std::mt19937_64 shape_gen(0xC3);
    for (int inst = 0; inst < 30; ++inst) {
        const bool square = inst < 20;
        const Index n = 8 + static_cast<Index>(shape_gen() % 23);
        const Index m = square ? n : n + 1 + static_cast<Index>(shape_gen() % 10);
        const auto p = testutil::random_ill_posed(m, n, 3000 + inst, 1e-2, 1e-4);
        const OracleBundle oracle(p);

        BidiagFactorization f(p.op, p.b_noisy);
        while (f.step()) {
        }
        if (f.k() < std::min(m, n)) continue;  // premature breakdown: skip instance
        const Index kp = f.k();
        const double mass_ata = p.op->apply_adjoint(p.b_noisy).squaredNorm();
        const auto g_ata = gauss_rule_hat(bidiag_qr(f.Bbar(kp)), mass_ata);
        const auto g_aat = gauss_rule(f.B(kp), p.b_noisy.squaredNorm());

        for (PhiId phi : kAllPhi) {
            for (Index j = 0; j < params.size(); ++j) {
                const double s = params[j];
                c.expect(testutil::rel_err(eval_form(g_ata, phi, s).value,
                                           oracle.quad_form_ata(phi, s)) <= 1e-8,
                         "ATA exactness violated at inst " + std::to_string(inst));
                if (square)
                    c.expect(testutil::rel_err(eval_form(g_aat, phi, s).value,
                                               oracle.quad_form_aat(phi, s)) <= 1e-8,
                             "AAT exactness violated at inst " + std::to_string(inst));
            }
        }
    }
    c.detail = std::to_string(c.checks) + " checks, " + num(timer.seconds()) + "s" +
               (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

// ---------------------------------------------------------------------------
// 4. Analytic derivatives match central finite differences.
// ---------------------------------------------------------------------------
Criterion criterion4() {
    Criterion c;
    Timer timer;
    std::mt19937_64 gen(0xC4);
    std::uniform_real_distribution<double> logs(-3.0, 2.0);
    int cases = 0;
    while (cases < 200) {
        const Index m = 10 + static_cast<Index>(gen() % 15);
        const Index n = 10 + static_cast<Index>(gen() % 15);
        const auto p = testutil::random_ill_posed(m, n, 4000 + cases);
        BidiagFactorization f(p.op, p.b_noisy);
        const int kmax = 3 + static_cast<int>(gen() % 5);
        bool ok = true;
        for (int i = 0; i < kmax && ok; ++i) ok = f.step();
        if (!ok) continue;
        const Index k = f.k();
        const double mass_aat = p.b_noisy.squaredNorm();
        const double mass_ata = p.op->apply_adjoint(p.b_noisy).squaredNorm();
        const auto r_aat = radau_rule_from_bbar(f.Bbar(k), mass_aat);
        const auto bhat = bidiag_qr(f.Bbar(k));
        const auto r_ata = radau_rule_hat(bhat, mass_ata);
        const auto g_aat = gauss_rule(f.B(k), mass_aat);

        const double s = std::pow(10.0, logs(gen));
        for (PhiId phi : kAllPhi) {
            const auto e = eval_form(g_aat, phi, s);
            const auto fv = [&](double t) { return eval_form(g_aat, phi, t).value; };
            const auto f1 = [&](double t) { return eval_form(g_aat, phi, t).d1; };
            c.expect(testutil::rel_err(e.d1, testutil::fd1(fv, s)) <= 1e-5, "eval_form d1");
            c.expect(testutil::rel_err(e.d2, testutil::fd1(f1, s)) <= 1e-5, "eval_form d2");
        }
        {
            const auto e = gcv_objective(r_aat, s);
            const auto fv = [&](double t) { return gcv_objective(r_aat, t).value; };
            const auto f1 = [&](double t) { return gcv_objective(r_aat, t).d1; };
            c.expect(testutil::rel_err(e.d1, testutil::fd1(fv, s)) <= 1e-5, "gcv d1");
            c.expect(testutil::rel_err(e.d2, testutil::fd1(f1, s)) <= 1e-5, "gcv d2");
        }
        {
            const auto e = qo_objective(r_ata, s);
            const auto fv = [&](double t) { return qo_objective(r_ata, t).value; };
            const auto f1 = [&](double t) { return qo_objective(r_ata, t).d1; };
            c.expect(testutil::rel_err(e.d1, testutil::fd1(fv, s)) <= 1e-5, "qo d1");
            c.expect(testutil::rel_err(e.d2, testutil::fd1(f1, s)) <= 1e-5, "qo d2");
        }
        {
            const auto e = reginska_objective(r_aat, r_ata, s);
            const auto fv = [&](double t) { return reginska_objective(r_aat, r_ata, t).value; };
            const auto f1 = [&](double t) { return reginska_objective(r_aat, r_ata, t).d1; };
            c.expect(testutil::rel_err(e.d1, testutil::fd1(fv, s)) <= 1e-5, "reginska d1");
            c.expect(testutil::rel_err(e.d2, testutil::fd1(f1, s)) <= 1e-5, "reginska d2");
        }
        ++cases;
    }
    c.detail = std::to_string(c.checks) + " checks, " + num(timer.seconds()) + "s" +
               (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

// Shared state for criteria 5-8.
struct BlurRuns {
    TestProblem problem;
    SolveReport adaptive[4];
    SolveReport hybrid[4];
    double hybrid_alpha_at_stop[4] = {};
    double hybrid_rre_at_stop[4] = {};
    double surface_optimal_rre = 0.0;
    double runtime_all_rules = 0.0;
};

const RuleKind kRules[4] = {RuleKind::DP, RuleKind::GCV, RuleKind::QO, RuleKind::Reginska};

BlurRuns run_blur_suite() {
    BlurRuns r;
    r.problem = add_noise(make_blur_problem(64, 4.0, 12), 1e-2, 7);
    Timer t;
    for (int i = 0; i < 4; ++i) {
        SolveOptions so;
        so.rule = kRules[i];
        so.stop = kRules[i] == RuleKind::DP ? StopRuleId::DPResidual : StopRuleId::SC1;
        so.tau = 1e-2;
        so.maxit = 200;
        so.init_param = 1e-10;
        so.keep_factorization = true;
        r.adaptive[i] = adaptive_solve(r.problem, so);

        HybridOptions ho;
        ho.rule = kRules[i];
        ho.maxit = std::max(r.adaptive[i].k_final, 10);
        ho.tau_outer = 1e-12;  // run the full trace for the comparison
        r.hybrid[i] = hybrid_solve(r.problem, ho);
        const int ks = r.adaptive[i].k_final;
        const auto& tr = r.hybrid[i].trace;
        const auto& at = tr[std::min<size_t>(ks, tr.size()) - 1];
        r.hybrid_alpha_at_stop[i] = at.alpha;
        r.hybrid_rre_at_stop[i] = at.rre;
    }
    r.runtime_all_rules = t.seconds();

    SurfaceEngine engine(r.problem, 150);
    const auto err = engine.compute(SurfaceKind::Error, log_spaced(1e-10, 1.0, 50), 4);
    r.surface_optimal_rre = err.optimal_z.minCoeff();
    return r;
}

// ---------------------------------------------------------------------------
// 5. End-to-end discrepancy principle at desk scale.
// ---------------------------------------------------------------------------
Criterion criterion5(const BlurRuns& runs) {
    Criterion c;
    Timer timer;
    const auto& rep = runs.adaptive[0];
    const auto& p = runs.problem;

    c.expect(rep.stopped_by == StopRuleId::DPResidual && rep.k_final <= 150,
             "did not stop within 150 iterations");
    const double disc = (p.b_noisy - p.op->apply(rep.x)).norm() / p.epsilon;
    c.expect(disc >= 0.99 && disc <= 1.01, "relative discrepancy " + num(disc) + " outside [0.99, 1.01]");

    const auto& f = *rep.factorization;
    const auto lsqr = projected_tikhonov_solve(f.Bbar(f.k()), f.bnorm(), 0.0);
    const double rre_lsqr = rre(Vector(f.V() * lsqr.y), p.x_exact);
    const double rre_dp = rre(rep.x, p.x_exact);
    c.expect(rre_dp < rre_lsqr, "rre " + num(rre_dp) + " not below same-k LSQR rre " +
                                    num(rre_lsqr) + " at k=" + std::to_string(rep.k_final));

    const double secs = timer.seconds();
    c.expect(secs < 20.0, "runtime over 20s");
    c.detail = "k=" + std::to_string(rep.k_final) + " disc/eps=" + num(disc) + " rre=" +
               num(rre_dp) + " lsqr=" + num(rre_lsqr) +
               (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

// ---------------------------------------------------------------------------
// 6. Adaptive-vs-hybrid agreement at the adaptive stopping iteration.
// ---------------------------------------------------------------------------
Criterion criterion6(const BlurRuns& runs) {
    Criterion c;
    for (int i = 0; i < 4; ++i) {
        const double tol_dlog = kRules[i] == RuleKind::DP ? 0.3 : 1.0;
        const double dlog = std::abs(std::log10(runs.adaptive[i].alpha_final) -
                                     std::log10(runs.hybrid_alpha_at_stop[i]));
        c.expect(dlog <= tol_dlog, std::string(to_string(kRules[i])) + " dlog " + num(dlog) +
                                       " above " + num(tol_dlog));
        const double rre_a = rre(runs.adaptive[i].x, runs.problem.x_exact);
        c.expect(rre_a <= 1.2 * runs.hybrid_rre_at_stop[i],
                 std::string(to_string(kRules[i])) + " rre " + num(rre_a) + " above 1.2x hybrid " +
                     num(runs.hybrid_rre_at_stop[i]));
        c.detail += std::string(i ? " " : "") + to_string(kRules[i]) + ":dlog=" + num(dlog);
    }
    c.expect(runs.runtime_all_rules < 120.0,
             "runtime " + num(runs.runtime_all_rules) + "s over 2min");
    return c;
}

// ---------------------------------------------------------------------------
// 7. Near-optimality against the error surface.
// ---------------------------------------------------------------------------
Criterion criterion7(const BlurRuns& runs) {
    Criterion c;
    for (int i = 0; i < 4; ++i) {
        const double rre_a = rre(runs.adaptive[i].x, runs.problem.x_exact);
        c.expect(rre_a <= 1.5 * runs.surface_optimal_rre,
                 std::string(to_string(kRules[i])) + " rre " + num(rre_a) + " above 1.5x optimal");
        c.detail += std::string(i ? " " : "") + to_string(kRules[i]) + ":" +
                    num(rre_a / runs.surface_optimal_rre) + "x";
    }
    c.detail += " (optimal rre " + num(runs.surface_optimal_rre) + ")";
    return c;
}

// ---------------------------------------------------------------------------
// 8. GKB integrity on the acceptance runs plus identity breakdown.
// ---------------------------------------------------------------------------
Criterion criterion8(const BlurRuns& runs) {
    Criterion c;
    Timer timer;
    for (int i = 0; i < 4; ++i) {
        const auto& f = *runs.adaptive[i].factorization;
        const auto d = check_factorization(f);
        const double scale = f.opnorm_estimate() * std::sqrt(static_cast<double>(f.k()));
        c.expect(d.recurrence_forward <= 1e-10 * scale, "forward recurrence residual");
        c.expect(d.recurrence_adjoint <= 1e-10 * scale, "adjoint recurrence residual");
        c.expect(d.ortho_u <= 1e-10, "U orthogonality defect");
        c.expect(d.ortho_v <= 1e-10, "V orthogonality defect");
        c.expect(f.rho().minCoeff() > 0.0, "nonpositive rho");
        c.expect(f.sigma().head(f.k() - 1).minCoeff() > 0.0, "nonpositive sigma");
    }
    {
        Vector b(5);
        b << 3, 1, 4, 1, 5;
        BidiagFactorization f(std::make_shared<DenseOperator>(Matrix::Identity(5, 5)), b);
        const bool advanced = f.step();
        c.expect(!advanced && f.breakdown() && f.breakdown_index() == 1,
                 "identity operator did not break down at k=1");
    }
    c.detail = std::to_string(c.checks) + " checks, " + num(timer.seconds()) + "s" +
               (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

// ---------------------------------------------------------------------------
// 9. Byte-identical CSV outputs for identical config and seed.
// ---------------------------------------------------------------------------
Criterion criterion9() {
    Criterion c;
    Timer timer;
    const fs::path base = fs::temp_directory_path() / "adaptikh_acceptance9";
    fs::remove_all(base);
    const auto run = [&](const std::string& sub) {
        const fs::path dir = base / sub;
        const int rc = run_cli({"solve", "--problem", "blur", "--size", "64", "--noise", "1e-2",
                                "--seed", "7", "--rule", "dp", "--stop", "dp-residual", "--tau",
                                "1e-2", "--out", dir.string()});
        return rc == 0;
    };
    c.expect(run("a") && run("b"), "cmd_solve failed");
    for (const char* name : {"trace.csv", "solution.csv"}) {
        std::ifstream f1(base / "a" / name, std::ios::binary);
        std::ifstream f2(base / "b" / name, std::ios::binary);
        std::stringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        c.expect(!s1.str().empty() && s1.str() == s2.str(),
                 std::string(name) + " differs between runs");
    }
    c.detail = num(timer.seconds()) + "s" + (c.detail.empty() ? "" : "; " + c.detail);
    return c;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        Criterion result;
    };
    std::vector<Entry> results;

    results.push_back({"1 bound bracketing and nesting", criterion1()});
    results.push_back({"2 modified Newton convergence", criterion2()});
    results.push_back({"3 quadrature exactness", criterion3()});
    results.push_back({"4 derivative correctness", criterion4()});

    const BlurRuns runs = run_blur_suite();
    results.push_back({"5 end-to-end discrepancy principle", criterion5(runs)});
    results.push_back({"6 adaptive-vs-hybrid agreement", criterion6(runs)});
    results.push_back({"7 near-optimality", criterion7(runs)});
    results.push_back({"8 GKB integrity", criterion8(runs)});
    results.push_back({"9 determinism", criterion9()});

    int failed = 0;
    for (const auto& e : results) {
        std::printf("[%s] criterion %s: %s\n", e.result.pass ? "PASS" : "FAIL", e.name,
                    e.result.detail.c_str());
        if (!e.result.pass) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed,
                results.size());
    return failed;
}
