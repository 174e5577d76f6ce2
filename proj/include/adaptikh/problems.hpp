#pragma once

#include <cstdint>
#include <random>

#include "adaptikh/operators.hpp"

namespace adaptikh {

/// Deterministic standard-normal sampler: mt19937_64 bits mapped to (0,1]
/// doubles, paired through the Box-Muller transform. Avoids
/// std::normal_distribution, whose output is implementation-defined.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

    double uniform01() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    double normal();
    Vector normal_vector(Index n);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// A generated inverse problem: operator, ground truth, clean and noisy data.
struct TestProblem {
    OperatorPtr op;
    Vector x_exact;
    Vector b_exact;
    Vector b_noisy;        // b_exact + e
    Vector e;              // noise realization
    double noise_level = 0.0;  // ||e|| / ||b_exact||
    double epsilon = 0.0;      // safety * ||e||
    Index img_size = 0;        // > 0 when the unknown is a square image
};

/// Wrap an operator and exact solution into a noise-free TestProblem.
TestProblem make_problem(OperatorPtr op, Vector x_exact);

/// 1-D Fredholm test problem: midpoint discretization of the kernel
/// K(s,t) = depth * (depth^2 + (s-t)^2)^(-3/2) on [0,1]x[0,1],
/// x_exact(t) = sin(pi t) + 0.5 sin(2 pi t).
TestProblem make_gravity_problem(Index n, double depth);

/// 2-D separable Gaussian deblurring problem with a synthetic geometric
/// image (bright rectangle plus disc on a dark background, values in [0,1]).
TestProblem make_blur_problem(Index img_size, double psf_sigma, Index band);

/// Returns a copy of the problem with seeded Gaussian noise rescaled so that
/// ||e|| / ||b_exact|| equals level exactly, and epsilon = safety * ||e||.
TestProblem add_noise(const TestProblem& problem, double level, std::uint64_t seed,
                      double safety = 1.01);

}  // namespace adaptikh
