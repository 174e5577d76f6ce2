#include <doctest.h>

#include "adaptikh/gkb.hpp"
#include "adaptikh/oracle.hpp"
#include "adaptikh/quadrature.hpp"
#include "test_helpers.hpp"

using namespace adaptikh;

namespace {

const PhiId kAllPhi[] = {PhiId::DP_beta, PhiId::DP_alpha, PhiId::GCV1,
                         PhiId::GCV2,    PhiId::QO,       PhiId::R};

LowerBidiagonal random_square_bidiag(Index k, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> ud(0.1, 2.0);
    LowerBidiagonal b;
    b.diag.resize(k);
    b.sub.resize(k - 1);
    for (auto& v : b.diag) v = ud(gen);
    for (auto& v : b.sub) v = ud(gen);
    return b;
}

LowerBidiagonal random_tall_bidiag(Index k, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> ud(0.1, 2.0);
    LowerBidiagonal b;
    b.diag.resize(k);
    b.sub.resize(k);
    for (auto& v : b.diag) v = ud(gen);
    for (auto& v : b.sub) v = ud(gen);
    return b;
}

}  // namespace

TEST_CASE("gauss rule with k=1 is the single Ritz pair") {
    LowerBidiagonal b;
    b.diag = Vector::Constant(1, 1.5);
    b.sub = Vector(0);
    const auto rule = gauss_rule(b, 4.0);
    CHECK(rule.points() == 1);
    CHECK(rule.nodes[0] == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(rule.weights[0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("gauss rule on diag(2,1) reproduces the dense spectrum") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 1.0;
    Vector b = Vector::Ones(2);
    BidiagFactorization f(std::make_shared<DenseOperator>(a), b);
    f.step();
    f.step();
    const auto rule = gauss_rule(f.B(2), b.squaredNorm());
    REQUIRE(rule.points() == 2);
    CHECK(rule.nodes[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rule.nodes[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rule.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rule.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weights sum to the mass for random factors") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = random_square_bidiag(1 + trial % 9, gen);
        const auto rule = gauss_rule(b, 3.7);
        CHECK(testutil::rel_err(rule.weights.sum(), 3.7) <= 1e-10);
    }
}

TEST_CASE("radau rule prescribes a node at the origin") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = random_tall_bidiag(1 + trial % 9, gen);
        const auto rule = radau_rule_from_bbar(b, 1.0);
        CHECK(rule.flavor == RuleFlavor::GaussRadauZero);
        CHECK(rule.nodes[0] == 0.0);
        CHECK(testutil::rel_err(rule.weights.sum(), 1.0) <= 1e-10);
    }
}

TEST_CASE("radau rule with k=2 has the closed-form nonzero node") {
    LowerBidiagonal b;  // Bbar_1 = [rho; sigma]
    b.diag = Vector::Constant(1, 1.25);
    b.sub = Vector::Constant(1, 0.75);
    const auto rule = radau_rule_from_bbar(b, 2.0);
    REQUIRE(rule.points() == 2);
    CHECK(rule.nodes[0] == 0.0);
    CHECK(rule.nodes[1] == doctest::Approx(1.25 * 1.25 + 0.75 * 0.75).epsilon(1e-14));
    CHECK(testutil::rel_err(rule.weights.sum(), 2.0) <= 1e-12);
}

TEST_CASE("radau rule integrates t exactly (degree of exactness)") {
    const auto p = testutil::random_ill_posed(12, 10, 77, 1e-2, 1e-3);
    BidiagFactorization f(p.op, p.b_noisy);
    for (int i = 0; i < 4; ++i) REQUIRE(f.step());
    const auto rule = radau_rule_from_bbar(f.Bbar(4), p.b_noisy.squaredNorm());
    const double got = rule.nodes.dot(rule.weights);
    const Matrix a = p.op->dense();
    const double want = (a.transpose() * p.b_noisy).squaredNorm();  // b^T A A^T b
    CHECK(testutil::rel_err(got, want) <= 1e-10);
}

TEST_CASE("bidiag_qr satisfies its defining identity") {
    LowerBidiagonal b1;
    b1.diag = Vector::Constant(1, 3.0);
    b1.sub = Vector::Constant(1, 4.0);
    const auto bh1 = bidiag_qr(b1);
    CHECK(bh1.diag[0] == doctest::Approx(5.0).epsilon(1e-15));

    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 25; ++trial) {
        const auto bb = random_tall_bidiag(2 + trial % 8, gen);
        const auto bh = bidiag_qr(bb);
        const Matrix lhs = bh.dense() * bh.dense().transpose();
        const Matrix rhs = bb.dense().transpose() * bb.dense();
        const double scale = rhs.cwiseAbs().maxCoeff();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale);
        CHECK(bh.diag.minCoeff() > 0.0);
    }
}

TEST_CASE("gauss rule at full depth matches the dense quadratic forms") {
    for (std::uint64_t seed : {101u, 102u, 103u}) {
        const auto p = testutil::random_ill_posed(10, 10, seed, 1e-2, 1e-4);
        const OracleBundle oracle(p);
        BidiagFactorization f(p.op, p.b_noisy);
        while (f.step()) {
        }
        const Index kp = f.k();
        REQUIRE(kp == 10);
        const auto g_aat = gauss_rule(f.B(kp), p.b_noisy.squaredNorm());
        const double mass_ata = p.op->apply_adjoint(p.b_noisy).squaredNorm();
        const auto g_ata = gauss_rule_hat(bidiag_qr(f.Bbar(kp)), mass_ata);
        for (PhiId phi : kAllPhi) {
            for (double s : {1e-4, 1e-2, 0.5, 3.0}) {
                CHECK(testutil::rel_err(eval_form(g_aat, phi, s).value,
                                        oracle.quad_form_aat(phi, s)) <= 1e-8);
                CHECK(testutil::rel_err(eval_form(g_ata, phi, s).value,
                                        oracle.quad_form_ata(phi, s)) <= 1e-8);
            }
        }
    }
}

TEST_CASE("radau-hat rule has a node at the origin") {
    const auto p = testutil::random_ill_posed(14, 11, 88);
    BidiagFactorization f(p.op, p.b_noisy);
    for (int i = 0; i < 5; ++i) REQUIRE(f.step());
    const double mass_ata = p.op->apply_adjoint(p.b_noisy).squaredNorm();
    const auto r = radau_rule_hat(bidiag_qr(f.Bbar(5)), mass_ata);
    CHECK(r.points() == 5);
    CHECK(r.nodes[0] == 0.0);
    CHECK(r.measure == MeasureTag::ATA_ATb);
}

TEST_CASE("eval_form limits for the DP integrand") {
    std::mt19937_64 gen(41);
    const auto b = random_square_bidiag(6, gen);
    const auto rule = gauss_rule(b, 2.5);
    CHECK(eval_form(rule, PhiId::DP_beta, 0.0).value == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(eval_form(rule, PhiId::DP_beta, 1e14).value <= 1e-20);
}

TEST_CASE("eval_form hand example on the {4,1} rule") {
    QuadratureRule rule;
    rule.nodes = Vector(2);
    rule.nodes << 1.0, 4.0;
    rule.weights = Vector::Ones(2);
    rule.mass = 2.0;
    const auto e = eval_form(rule, PhiId::DP_beta, 1.0);
    CHECK(e.value == doctest::Approx(1.0 / 25.0 + 1.0 / 4.0).epsilon(1e-15));
    CHECK(e.d1 == doctest::Approx(-2.0 * (4.0 / 125.0 + 1.0 / 8.0)).epsilon(1e-15));
}

TEST_CASE("eval_form rejects out-of-domain parameters") {
    std::mt19937_64 gen(43);
    const auto rule = gauss_rule(random_square_bidiag(3, gen), 1.0);
    CHECK_THROWS_AS(eval_form(rule, PhiId::QO, 0.0), InvalidArgument);
    CHECK_THROWS_AS(eval_form(rule, PhiId::R, -1.0), InvalidArgument);
    CHECK_NOTHROW(eval_form(rule, PhiId::DP_beta, 0.0));
}

TEST_CASE("gcv trace denominator closed forms") {
    LowerBidiagonal b;  // rho_1 = sigma_2 = 1
    b.diag = Vector::Constant(1, 1.0);
    b.sub = Vector::Constant(1, 1.0);
    for (double alpha : {0.3, 1.0, 7.5}) {
        const auto t = gcv_trace_denominator(b, alpha);
        CHECK(t.value == doctest::Approx(1.0 + alpha / (alpha + 2.0)).epsilon(1e-12));
    }
    // alpha -> infinity: trace -> k+1
    CHECK(gcv_trace_denominator(b, 1e14).value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("projected Tikhonov solve closed forms and properties") {
    LowerBidiagonal b1;
    b1.diag = Vector::Constant(1, 1.5);
    b1.sub = Vector::Constant(1, 0.5);
    const double alpha = 0.7, bnorm = 2.0;
    const auto s1 = projected_tikhonov_solve(b1, bnorm, alpha);
    CHECK(s1.y[0] ==
          doctest::Approx(bnorm * 1.5 / (1.5 * 1.5 + 0.5 * 0.5 + alpha)).epsilon(1e-14));

    std::mt19937_64 gen(53);
    const auto bb = random_tall_bidiag(7, gen);
    const auto shuge = projected_tikhonov_solve(bb, 3.0, 1e12);
    CHECK(shuge.y.norm() <= 1e-11);
    CHECK(shuge.residual_norm == doctest::Approx(3.0).epsilon(1e-10));

    for (int trial = 0; trial < 20; ++trial) {
        const auto b = random_tall_bidiag(2 + trial % 9, gen);
        const double a = std::pow(10.0, -6.0 + 0.5 * trial);
        const auto sol = projected_tikhonov_solve(b, 2.5, a);
        const Matrix bd = b.dense();
        const Matrix normal = bd.transpose() * bd + a * Matrix::Identity(b.cols(), b.cols());
        Vector rhs = Vector::Zero(b.cols());
        rhs[0] = 2.5 * b.diag[0];
        const double resid = (normal * sol.y - rhs).norm();
        CHECK(resid <= 1e-10 * 2.5 * std::max(1.0, bd.squaredNorm()));
        CHECK(sol.residual_norm ==
              doctest::Approx((bd * sol.y - 2.5 * Vector::Unit(b.rows(), 0)).norm())
                  .epsilon(1e-10));
    }
}

TEST_CASE("analytic derivatives match finite differences") {
    std::mt19937_64 gen(61);
    std::uniform_real_distribution<double> us(-2.0, 2.0);
    for (int trial = 0; trial < 40; ++trial) {
        const auto rule = (trial % 2 == 0)
                              ? gauss_rule(random_square_bidiag(2 + trial % 7, gen), 1.3)
                              : radau_rule_from_bbar(random_tall_bidiag(2 + trial % 7, gen), 1.3);
        const double s = std::pow(10.0, us(gen));
        for (PhiId phi : kAllPhi) {
            const auto e = eval_form(rule, phi, s);
            const auto f = [&](double t) { return eval_form(rule, phi, t).value; };
            const auto f1 = [&](double t) { return eval_form(rule, phi, t).d1; };
            CHECK(testutil::rel_err(e.d1, testutil::fd1(f, s)) <= 1e-5);
            CHECK(testutil::rel_err(e.d2, testutil::fd1(f1, s)) <= 1e-5);
        }
    }
}

TEST_CASE("bound directions and nesting against the dense oracle") {
    // Lighter version of the acceptance sweep: Gauss from below, Radau from
    // above, both monotone in k.
    for (std::uint64_t seed : {7u, 8u, 9u, 10u}) {
        const auto p = testutil::random_ill_posed(16, 13, seed);
        const OracleBundle oracle(p);
        BidiagFactorization f(p.op, p.b_noisy);
        for (int i = 0; i < 7; ++i) REQUIRE(f.step());
        const double mass_aat = p.b_noisy.squaredNorm();
        const double mass_ata = p.op->apply_adjoint(p.b_noisy).squaredNorm();

        for (double beta : {0.1, 1.0, 10.0, 100.0}) {
            const double dense = oracle.quad_form_aat(PhiId::DP_beta, beta);
            double prev_g = -std::numeric_limits<double>::infinity();
            for (int k = 2; k <= 5; ++k) {
                const double g =
                    eval_form(gauss_rule(f.B(k), mass_aat), PhiId::DP_beta, beta).value;
                const double r =
                    eval_form(radau_rule_from_bbar(f.Bbar(k), mass_aat), PhiId::DP_beta, beta)
                        .value;
                CHECK(g >= prev_g - 1e-10 * std::abs(dense));
                CHECK(g <= dense + 1e-10 * std::abs(dense));
                CHECK(r >= dense - 1e-10 * std::abs(dense));
                prev_g = g;
            }
        }
        for (double alpha : {1e-4, 1e-2, 1.0}) {
            const double dense = oracle.quad_form_ata(PhiId::QO, alpha);
            for (int k = 3; k <= 5; ++k) {
                const auto bhat = bidiag_qr(f.Bbar(k));
                const double g = eval_form(gauss_rule_hat(bhat, mass_ata), PhiId::QO, alpha).value;
                const double r = eval_form(radau_rule_hat(bhat, mass_ata), PhiId::QO, alpha).value;
                CHECK(g <= dense + 1e-10 * std::abs(dense));
                CHECK(r >= dense - 1e-10 * std::abs(dense));
            }
        }
    }
}
