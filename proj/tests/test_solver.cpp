#include <doctest.h>

#include <logroot/solver.hpp>

#include <cmath>
#include <random>

using logroot::Complex;
using logroot::ComplexPoly;
using logroot::Orientation;
using logroot::Problem;
using logroot::SolveReport;

namespace {

const double kLn2 = std::log(2.0);

Problem example1() { return Problem(ComplexPoly{1.0}, ComplexPoly{2.0 * kLn2, -2.0 * kLn2}); }
Problem example2() { return Problem(ComplexPoly{1.0, 8.0}, ComplexPoly{6.0 * kLn2}); }

Problem example4(double a = 0.015) {
    ComplexPoly p{1.0, 1.0};
    ComplexPoly q = (ComplexPoly{1.0 + a, -a} * ComplexPoly{-1.0, 1.0}).scaled(-3.0 * kLn2);
    return Problem(p, q);
}

double min_dist(const SolveReport& rep, Complex target) {
    double best = 1e18;
    for (const auto& s : rep.solutions) best = std::min(best, std::abs(s.z - target));
    return best;
}

/// Winding by plain argument tracking over a fixed dense sampling.
int winding_oracle(const Problem& prob, Complex center, double radius) {
    const int n = 10000;
    double total = 0.0;
    Complex prev = prob.eval_g(center + radius) - prob.w();
    for (int k = 1; k <= n; ++k) {
        Complex z = center + radius * std::polar(1.0, 2.0 * M_PI * k / n);
        Complex s = prob.eval_g(z) - prob.w();
        total += std::arg(s / prev);
        prev = s;
    }
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

ComplexPoly random_poly(std::mt19937_64& rng, int degree) {
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    std::vector<Complex> c(static_cast<size_t>(degree) + 1);
    for (Complex& x : c) x = Complex(box(rng), box(rng));
    if (std::abs(c.back()) < 0.1) c.back() += Complex(0.5, 0.5);
    return ComplexPoly(std::move(c));
}

}  // namespace

TEST_CASE("refine_newton lands on the nearby solutions") {
    Problem e1 = example1();

    logroot::Solution s1 = logroot::refine_newton(e1, Complex(0.9), 1e-12);
    CHECK(std::abs(s1.z - Complex(1.0)) < 1e-10);
    CHECK(s1.residual < 1e-12);
    CHECK(s1.orientation == Orientation::Positive);

    logroot::Solution s2 = logroot::refine_newton(e1, Complex(-0.2), 1e-12);
    CHECK(std::abs(s2.z - Complex(-0.191666)) < 1e-5);

    Problem e2 = example2();
    logroot::Solution s3 = logroot::refine_newton(e2, Complex(-1.4), 1e-12);
    CHECK(std::abs(s3.z - Complex(-1.471293)) < 1e-5);
}

TEST_CASE("refine_newton reports failures") {
    Problem e2 = example2();
    CHECK_THROWS_AS(logroot::refine_newton(e2, Complex(-0.125), 1e-12), logroot::AtSingularityError);
}

TEST_CASE("winding numbers around known solutions") {
    Problem e1 = example1();
    CHECK(logroot::winding_number(e1, logroot::circle_contour(Complex(0.0), 10.0)) == 1);
    CHECK(logroot::winding_number(e1, logroot::circle_contour(Complex(1.0), 0.05)) == 1);
    CHECK(logroot::winding_number(e1, logroot::circle_contour(Complex(0.5), 0.05)) == -1);

    CHECK(winding_oracle(e1, Complex(0.0), 10.0) == 1);
    CHECK(winding_oracle(e1, Complex(1.0), 0.05) == 1);
    CHECK(winding_oracle(e1, Complex(0.5), 0.05) == -1);
}

TEST_CASE("winding on the two-contour system equals the degree") {
    Problem e2 = example2();
    int outer = logroot::winding_number(e2, logroot::circle_contour(Complex(0.0), 10.0));
    int pole = logroot::winding_number(e2, logroot::circle_contour(Complex(-0.125), 0.01));
    CHECK(outer == 0);
    CHECK(pole == -1);
    CHECK(outer - pole == e2.d());
    CHECK(winding_oracle(e2, Complex(0.0), 10.0) == 0);
    CHECK(winding_oracle(e2, Complex(-0.125), 0.01) == -1);
}

TEST_CASE("winding refuses contours through zeros") {
    Problem e1 = example1();
    // the circle around 0.75 of radius 0.25 passes through the solutions 0.5 and 1
    CHECK_THROWS_AS(logroot::winding_number(e1, logroot::circle_contour(Complex(0.75), 0.25)),
                    std::runtime_error);
}

TEST_CASE("solve: first example") {
    SolveReport rep = logroot::solve(example1());
    CHECK(rep.status == "ok");
    CHECK(rep.consistent);
    CHECK(rep.N == 3);
    CHECK(rep.N_plus == 2);
    CHECK(rep.N_minus == 1);
    CHECK(rep.N_degenerate == 0);
    CHECK(rep.degree_winding == 1);
    CHECK(min_dist(rep, Complex(1.0)) < 1e-9);
    CHECK(min_dist(rep, Complex(0.5)) < 1e-9);
    CHECK(min_dist(rep, Complex(-0.191666)) < 1e-5);
    CHECK(rep.bounds_ok.lower);
    CHECK(rep.bounds_ok.upper);
    CHECK(rep.certificate_count >= rep.d);
    REQUIRE(rep.dynamics.has_value());
    CHECK(rep.dynamics->fatou_ok);
    CHECK(rep.dynamics->bound_ok);
}

TEST_CASE("solve: Moebius example") {
    SolveReport rep = logroot::solve(example2());
    CHECK(rep.status == "ok");
    CHECK(rep.N == 5);
    CHECK(rep.N_plus - rep.N_minus == 1);
    CHECK(min_dist(rep, Complex(0.25)) < 1e-10);
    CHECK(min_dist(rep, Complex(0.125)) < 1e-10);
    CHECK(min_dist(rep, Complex(0.0625)) < 1e-10);
    CHECK(min_dist(rep, Complex(-1.471293)) < 1e-5);
    CHECK(min_dist(rep, Complex(-0.0106199)) < 1e-5);
}

TEST_CASE("solve: n = 2 rotation family") {
    // log|z| + (2 log2 / 2)(1 - z^2) = 0 has the six solutions
    // w, w/sqrt(2), w sqrt(|xi|) e^{i pi/2} for w = +-1
    Problem base = example1();
    SolveReport base_rep = logroot::solve(base);
    double xi = 0.0;
    for (const auto& s : base_rep.solutions)
        if (s.z.real() < 0.0) xi = std::abs(s.z);

    ComplexPoly q{kLn2, 0.0, -kLn2};
    SolveReport rep = logroot::solve(Problem(ComplexPoly{1.0}, q));
    CHECK(rep.status == "ok");
    CHECK(rep.N == 6);
    double r = std::sqrt(0.5), s = std::sqrt(xi);
    for (Complex target : {Complex(1.0), Complex(-1.0), Complex(r), Complex(-r), Complex(0.0, s), Complex(0.0, -s)})
        CHECK(min_dist(rep, target) < 1e-7);
}

TEST_CASE("solve: omega constant") {
    // log x + x = 0 has its root near 0.567143, checked by bisection
    double lo = 0.1, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        (std::log(mid) + mid < 0.0 ? lo : hi) = mid;
    }
    SolveReport rep = logroot::solve(Problem(ComplexPoly{1.0}, ComplexPoly{0.0, 1.0}));
    CHECK(rep.status == "ok");
    CHECK(rep.N == 1);
    CHECK(std::abs(rep.solutions[0].z - Complex(lo)) < 1e-9);
    CHECK(rep.solutions[0].orientation == Orientation::Positive);
}

TEST_CASE("solve: junction example with the conjugate pair") {
    SolveReport rep = logroot::solve(example4());
    CHECK(rep.status == "ok");
    CHECK(rep.N == 8);
    CHECK(rep.N_plus - rep.N_minus == 2);
    CHECK(min_dist(rep, Complex(-5.705306, 10.732819)) < 1e-4);
    CHECK(min_dist(rep, Complex(-5.705306, -10.732819)) < 1e-4);
    CHECK(min_dist(rep, Complex(1.0)) < 1e-9);
}

TEST_CASE("solve is deterministic across thread counts") {
    logroot::SolveParams p1;
    p1.threads = 1;
    logroot::SolveParams p4;
    p4.threads = 4;
    SolveReport r1 = logroot::solve(example4(), p1);
    SolveReport r4 = logroot::solve(example4(), p4);
    REQUIRE(r1.N == r4.N);
    for (int i = 0; i < r1.N; ++i) {
        CHECK(r1.solutions[static_cast<size_t>(i)].z.real() == r4.solutions[static_cast<size_t>(i)].z.real());
        CHECK(r1.solutions[static_cast<size_t>(i)].z.imag() == r4.solutions[static_cast<size_t>(i)].z.imag());
    }
    CHECK(r1.degree_winding == r4.degree_winding);
}

TEST_CASE("solve is stable under seed jitter") {
    logroot::SolveParams jittered;
    jittered.seed_jitter_rel = 1e-3;
    jittered.jitter_seed = 99;
    SolveReport base = logroot::solve(example2());
    SolveReport moved = logroot::solve(example2(), jittered);
    REQUIRE(base.N == moved.N);
    for (const auto& s : base.solutions) {
        double best = 1e18;
        for (const auto& t : moved.solutions) best = std::min(best, std::abs(s.z - t.z));
        CHECK(best < 1e-6);
    }
}

TEST_CASE("solve flags crippled runs as inconsistent") {
    logroot::SolveParams params;
    params.trace.max_steps = 3;
    params.escalation_cap = 0;
    params.enable_grid_fallback = false;
    params.run_dynamics = false;
    SolveReport rep = logroot::solve(example2(), params);
    CHECK(rep.status == "inconsistent");
    CHECK_FALSE(rep.consistent);
}

TEST_CASE("degree identity on random problems") {
    std::mt19937_64 rng(20240911);
    std::uniform_int_distribution<int> deg(0, 3);
    logroot::SolveParams params;
    params.run_dynamics = false;
    int done = 0;
    while (done < 20) {
        int m = deg(rng), n = deg(rng);
        if (m == 0 && n == 0) continue;
        Problem prob = [&] {
            for (;;) {
                try {
                    return Problem(random_poly(rng, m), random_poly(rng, n));
                } catch (const std::runtime_error&) {
                }
            }
        }();
        SolveReport rep = logroot::solve(prob, params);
        CHECK(rep.N == rep.N_plus + rep.N_minus + rep.N_degenerate);
        if (rep.N_degenerate > 0) continue;  // 0 must be a regular value for the identity
        CHECK(rep.status == "ok");
        CHECK(rep.N_plus - rep.N_minus == prob.d());
        CHECK(rep.degree_winding == prob.d());
        CHECK(rep.N >= prob.d());
        CHECK(rep.N <= 3 * prob.d() + 2 * prob.m());
        for (const auto& s : rep.solutions) CHECK(s.residual < params.solve_tol);
        ++done;
    }
}

TEST_CASE("solve handles repeated poles and high-order branch points") {
    // double pole of F at z = 1: (z-1)^2 log|z| + 2 ln2 = 0
    SolveReport dp = logroot::solve(Problem(ComplexPoly{1.0, -2.0, 1.0}, ComplexPoly{2.0 * kLn2}));
    CHECK(dp.status == "ok");
    CHECK(dp.N_plus - dp.N_minus == 2);
    CHECK(min_dist(dp, Complex(0.148070659)) < 1e-8);
    CHECK(min_dist(dp, Complex(-0.569715733)) < 1e-8);

    // the level set branches with multiplicity 3 at the origin (F = z^3)
    SolveReport cn = logroot::solve(Problem(ComplexPoly{1.0}, ComplexPoly{0.0, 0.0, 0.0, 1.0}));
    CHECK(cn.status == "ok");
    CHECK(cn.N == 3);
    // log x + x^3 = 0 near 0.7047, checked by bisection
    double lo = 0.5, hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        (std::log(mid) + mid * mid * mid < 0.0 ? lo : hi) = mid;
    }
    CHECK(min_dist(cn, Complex(lo)) < 1e-9);

    // double pole sitting exactly at the origin
    SolveReport pz = logroot::solve(Problem(ComplexPoly{0.0, 0.0, 1.0}, ComplexPoly{1.0}));
    CHECK(pz.status == "ok");
    CHECK(pz.N_plus - pz.N_minus == 2);
}

TEST_CASE("solve handles a complex target value") {
    Problem shifted = example2().with_w(Complex(0.1, 0.05));
    logroot::SolveParams params;
    params.run_dynamics = false;
    SolveReport rep = logroot::solve(shifted, params);
    CHECK(rep.status == "ok");
    CHECK(rep.completeness == "heuristic-complete");
    CHECK(rep.N_plus - rep.N_minus == shifted.d());
    for (const auto& s : rep.solutions) {
        CHECK(s.residual < params.solve_tol);
        CHECK(std::abs(shifted.eval_g(s.z) - Complex(0.1, 0.05)) < 1e-9);
    }
}

TEST_CASE("a genuine fold is reported as one degenerate solution") {
    // log|z| + (1 - z) = 0: the two positive roots have merged at z = 1,
    // where 1 + z f'(z) = -1 lies on the unit circle
    Problem fold(ComplexPoly{1.0}, ComplexPoly{1.0, -1.0});
    CHECK(fold.orientation(Complex(1.0)) == Orientation::Degenerate);

    logroot::SolveParams params;
    params.run_dynamics = false;
    SolveReport rep = logroot::solve(fold, params);
    CHECK(rep.status == "ok");
    CHECK(rep.N == 2);
    CHECK(rep.N_degenerate == 1);
    CHECK(min_dist(rep, Complex(1.0)) < 1e-4);  // quadratically flat: position only good to sqrt(tol)
    REQUIRE(rep.perturbed.has_value());
    // the rerun below escalates the shift until the fold splits cleanly
    CHECK(rep.perturbed->N_degenerate == 0);
    CHECK(rep.perturbed->N == 3);
    CHECK(rep.perturbed->N_plus - rep.perturbed->N_minus == 1);
}

TEST_CASE("degenerate classifications trigger the perturbed rerun") {
    logroot::SolveParams params;
    params.run_dynamics = false;
    params.degenerate_tol = 1e6;  // forces every solution into the degenerate bucket
    SolveReport rep = logroot::solve(example2(), params);
    CHECK(rep.N_degenerate == rep.N);
    REQUIRE(rep.perturbed.has_value());
    CHECK(rep.perturbed->N == rep.N);
    CHECK(std::abs(rep.perturbed->w.imag()) > 0.0);
}

TEST_CASE("conjugation closure for real coefficients") {
    SolveReport rep = logroot::solve(example4());
    for (const auto& s : rep.solutions) {
        double best = 1e18;
        for (const auto& t : rep.solutions) best = std::min(best, std::abs(std::conj(s.z) - t.z));
        CHECK(best <= 1e-6 * (1.0 + std::abs(s.z)));
    }
}
