#include "adaptikh/problems.hpp"

#include <cmath>
#include <numbers>

namespace adaptikh {

double NormalSampler::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01();  // in (0,1], log is safe
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

Vector NormalSampler::normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
}

TestProblem make_problem(OperatorPtr op, Vector x_exact) {
    if (!op) throw InvalidArgument("make_problem: null operator");
    if (x_exact.size() != op->cols()) throw InvalidArgument("make_problem: x_exact size mismatch");
    TestProblem p;
    p.op = std::move(op);
    p.b_exact = p.op->apply(x_exact);
    p.x_exact = std::move(x_exact);
    p.b_noisy = p.b_exact;
    p.e = Vector::Zero(p.b_exact.size());
    return p;
}

TestProblem make_gravity_problem(Index n, double depth) {
    if (n < 2) throw InvalidArgument("make_gravity_problem: n must be >= 2");
    if (!(depth > 0.0)) throw InvalidArgument("make_gravity_problem: depth must be > 0");

    const double h = 1.0 / static_cast<double>(n);
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i) {
        const double s = (static_cast<double>(i) + 0.5) * h;
        for (Index j = 0; j < n; ++j) {
            const double t = (static_cast<double>(j) + 0.5) * h;
            const double d2 = depth * depth + (s - t) * (s - t);
            a(i, j) = h * depth / (d2 * std::sqrt(d2));
        }
    }

    Vector x(n);
    for (Index j = 0; j < n; ++j) {
        const double t = (static_cast<double>(j) + 0.5) * h;
        x[j] = std::sin(std::numbers::pi * t) + 0.5 * std::sin(2.0 * std::numbers::pi * t);
    }
    return make_problem(std::make_shared<DenseOperator>(std::move(a)), std::move(x));
}

namespace {

Vector geometric_image(Index n) {
    Vector x = Vector::Zero(n * n);
    const double nn = static_cast<double>(n);
    const Index r0 = static_cast<Index>(0.15 * nn), r1 = static_cast<Index>(0.55 * nn);
    const Index c0 = static_cast<Index>(0.10 * nn), c1 = static_cast<Index>(0.45 * nn);
    for (Index i = r0; i < r1; ++i)
        for (Index j = c0; j < c1; ++j) x[i * n + j] = 0.75;
    const double ci = 0.62 * nn, cj = 0.60 * nn, rad = 0.22 * nn;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const double di = static_cast<double>(i) - ci, dj = static_cast<double>(j) - cj;
            if (di * di + dj * dj <= rad * rad) x[i * n + j] = 1.0;
        }
    return x;
}

}  // namespace

TestProblem make_blur_problem(Index img_size, double psf_sigma, Index band) {
    auto op = std::make_shared<GaussianBlurOperator>(img_size, psf_sigma, band);
    TestProblem p = make_problem(op, geometric_image(img_size));
    p.img_size = img_size;
    return p;
}

TestProblem add_noise(const TestProblem& problem, double level, std::uint64_t seed,
                      double safety) {
    if (level < 0.0) throw InvalidArgument("add_noise: level must be >= 0");
    if (safety < 1.0) throw InvalidArgument("add_noise: safety factor must be >= 1");
    TestProblem out = problem;
    if (level == 0.0) {
        out.e = Vector::Zero(problem.b_exact.size());
        out.b_noisy = problem.b_exact;
        out.noise_level = 0.0;
        out.epsilon = 0.0;
        return out;
    }
    NormalSampler rng(seed);
    Vector w = rng.normal_vector(problem.b_exact.size());
    // Rescaled so that ||e|| / ||b_exact|| hits the requested level exactly.
    out.e = (level * problem.b_exact.norm() / w.norm()) * w;
    out.b_noisy = problem.b_exact + out.e;
    out.noise_level = level;
    out.epsilon = safety * out.e.norm();
    return out;
}

}  // namespace adaptikh
