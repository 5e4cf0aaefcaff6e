#pragma once

#include <logroot/solver.hpp>

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace logroot {

struct BadParamsError : std::runtime_error {
    explicit BadParamsError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a candidate extremal problem fails the value-avoidance
/// hypothesis; carries the offending sample point.
struct HypothesisFailedError : std::runtime_error {
    explicit HypothesisFailedError(Complex where)
        : std::runtime_error("F takes a (nearly) real value on the closed unit disk"), z(where) {}
    Complex z;
};

/// A member of the regression corpus: family id, parameters, and the
/// expected solution data for the base member of the family.
struct ExampleSpec {
    std::string id;  ///< ex1 | ex2 | ex3 | ex3-explicit | ex4 | ex5 | ex6
    int m = 1;
    int n = 1;
    double a = 0.015;
    double b = 0.00185;
    double delta = 0.1;
    double phi = 0.0;
    double c = 100.0;
    double eta = 1e-3;
    uint64_t eta_seed = 7;
    int expected_count = 0;
    std::vector<std::pair<Complex, double>> expected_points;  ///< (value, tolerance)
};

namespace detail {

inline const double kLn2 = std::log(2.0);

}  // namespace detail

inline Problem lower_extremal(const ComplexPoly& p0, const ComplexPoly& q0, double delta, double phi, double c);

/// Prefilled spec for a family member; `k` is the family exponent
/// (n for ex1/ex3-explicit, m for ex2/ex4/ex5).
inline ExampleSpec corpus_spec(const std::string& id, int k = 1) {
    ExampleSpec spec;
    spec.id = id;
    if (id == "ex1") {
        spec.m = 0;
        spec.n = k;
        spec.expected_count = 3 * k;
        if (k == 1)
            spec.expected_points = {{{1.0, 0.0}, 1e-9}, {{0.5, 0.0}, 1e-9}, {{-0.191666, 0.0}, 1e-5}};
    } else if (id == "ex2") {
        spec.m = k;
        spec.n = 0;
        spec.expected_count = 5 * k;
        if (k == 1)
            spec.expected_points = {{{0.0625, 0.0}, 1e-10},
                                    {{0.125, 0.0}, 1e-10},
                                    {{0.25, 0.0}, 1e-10},
                                    {{-1.471293, 0.0}, 1e-5},
                                    {{-0.0106199, 0.0}, 1e-5}};
    } else if (id == "ex3") {
        spec.m = k;
        spec.n = std::min(1, k);
        spec.expected_count = 5 * k;
    } else if (id == "ex3-explicit") {
        spec.m = k;
        spec.n = k;
        spec.expected_count = 5 * k;
        if (k == 1)
            spec.expected_points = {{{1.0, 0.0}, 1e-9},
                                    {{2.0, 0.0}, 1e-9},
                                    {{0.5, 0.0}, 1e-9},
                                    {{-11.770347, 0.0}, 1e-5},
                                    {{-0.0849592, 0.0}, 1e-5}};
    } else if (id == "ex4") {
        spec.m = k;
        spec.n = 2 * k;
        spec.expected_count = 8 * k;
        if (k == 1)
            spec.expected_points = {{{-58.249375, 0.0}, 1e-5},  {{-20.915701, 0.0}, 1e-5},
                                    {{-0.0826000, 0.0}, 1e-5},  {{0.466285, 0.0}, 1e-5},
                                    {{1.0, 0.0}, 1e-9},         {{1.780021, 0.0}, 1e-5},
                                    {{-5.705306, 10.732819}, 1e-4}, {{-5.705306, -10.732819}, 1e-4}};
    } else if (id == "ex5") {
        spec.m = k;
        spec.n = 3 * k;
        spec.expected_count = 11 * k;
        if (k == 1)
            spec.expected_points = {{{-198.8150, 0.0}, 1e-3}, {{-176.4617, 0.0}, 1e-3},
                                    {{-17.8054, 0.0}, 1e-3},  {{-0.08289, 0.0}, 1e-3},
                                    {{0.4704, 0.0}, 1e-3},    {{1.0, 0.0}, 1e-9},
                                    {{1.8020, 0.0}, 1e-3},    {{-8.6167, 10.2654}, 1e-3},
                                    {{-8.6167, -10.2654}, 1e-3}, {{-234.2803, 43.6244}, 1e-3},
                                    {{-234.2803, -43.6244}, 1e-3}};
    } else if (id == "ex6") {
        spec.m = 1;
        spec.n = 1;
        spec.phi = 0.3;  // default rotation passing the value-avoidance check
        spec.expected_count = 1;
    } else {
        throw BadParamsError("unknown example id: " + id);
    }
    return spec;
}

/// Builds the corpus problem for a spec. The ex5 member uses the factor
/// (1 + b(z-1)): only with that sign do the reference solutions, the critical
/// point near -234.257, and the intermediate-value argument hold together.
inline Problem build_example(const ExampleSpec& spec) {
    const double ln2 = detail::kLn2;
    const std::string& id = spec.id;

    if (id == "ex1") {
        if (spec.n < 1) throw BadParamsError("ex1 needs n >= 1");
        ComplexPoly q = ComplexPoly{2.0 * ln2, -2.0 * ln2}.compose_power(spec.n).scaled(1.0 / spec.n);
        return Problem(ComplexPoly{1.0}, q);
    }
    if (id == "ex2") {
        if (spec.m < 1) throw BadParamsError("ex2 needs m >= 1");
        ComplexPoly p = ComplexPoly{1.0, 8.0}.compose_power(spec.m).scaled(static_cast<double>(spec.m));
        return Problem(p, ComplexPoly{6.0 * ln2});
    }
    if (id == "ex3") {
        if (spec.m < 1 || spec.n < 0 || spec.n > spec.m) throw BadParamsError("ex3 needs 1 <= m and n <= m");
        ComplexPoly p = ComplexPoly{1.0, 8.0}.compose_power(spec.m).scaled(static_cast<double>(spec.m));
        std::mt19937_64 rng(spec.eta_seed);
        std::uniform_real_distribution<double> box(-1.0, 1.0);
        std::vector<Complex> r(static_cast<size_t>(spec.n) + 1);
        for (Complex& x : r) x = Complex(box(rng), 0.0);
        if (std::abs(r.back()) < 0.25) r.back() = Complex(0.5, 0.0);
        ComplexPoly bump(std::move(r));
        bump = bump.scaled(1.0 / bump.max_coeff_modulus());
        ComplexPoly q = (ComplexPoly{1.0} + bump.scaled(spec.eta)).scaled(6.0 * ln2);
        return Problem(p, q);
    }
    if (id == "ex3-explicit") {
        if (spec.n < 1) throw BadParamsError("ex3-explicit needs n >= 1");
        ComplexPoly p = ComplexPoly{1.0, 1.0}.compose_power(spec.n).scaled(static_cast<double>(spec.n));
        ComplexPoly q = ComplexPoly{3.0 * ln2, -3.0 * ln2}.compose_power(spec.n);
        return Problem(p, q);
    }
    if (id == "ex4" || id == "ex5") {
        if (spec.m < 1) throw BadParamsError(id + " needs m >= 1");
        ComplexPoly base = ComplexPoly{1.0 + spec.a, -spec.a} * ComplexPoly{-1.0, 1.0};
        if (id == "ex5") base = base * ComplexPoly{1.0 - spec.b, spec.b};
        ComplexPoly q = base.scaled(-3.0 * ln2).compose_power(spec.m);
        ComplexPoly p = ComplexPoly{1.0, 1.0}.compose_power(spec.m).scaled(static_cast<double>(spec.m));
        return Problem(p, q);
    }
    if (id == "ex6") {
        ComplexPoly p0{1.0, 1.0};
        ComplexPoly q0{Complex(0.0, 1.0), Complex(1.0, 0.0)};
        return lower_extremal(p0, q0, spec.delta, spec.phi, spec.c);
    }
    throw BadParamsError("unknown example id: " + id);
}

namespace detail {

/// Minimum of |Im F| / (1 + |F|) over the closed unit disk (dense sampling)
/// and at infinity when F extends there with a finite nonzero value.
/// Returns the worst sample point through `where`.
inline double hypothesis_margin(const Problem& prob, Complex* where) {
    double worst = std::numeric_limits<double>::infinity();
    Complex bad(0.0);
    auto consider = [&](Complex z) {
        Complex fv = prob.eval_F(z);
        if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag())) {
            worst = -1.0;  // pole inside the disk: hypothesis cannot hold
            bad = z;
            return;
        }
        double margin = std::abs(fv.imag()) / (1.0 + std::abs(fv));
        if (margin < worst) {
            worst = margin;
            bad = z;
        }
    };
    consider(Complex(0.0));
    for (int ring = 1; ring <= 24; ++ring) {
        double r = static_cast<double>(ring) / 24.0;
        for (int k = 0; k < 96; ++k) consider(r * std::polar(1.0, 2.0 * M_PI * k / 96.0));
    }
    if (prob.n() == prob.m()) {
        Complex finf = prob.q().leading() / prob.p().leading();
        double margin = std::abs(finf.imag()) / (1.0 + std::abs(finf));
        if (margin < worst) {
            worst = margin;
            bad = Complex(std::numeric_limits<double>::infinity(), 0.0);
        }
    }
    if (where) *where = bad;
    return worst;
}

}  // namespace detail

/// Lower-bound extremal generator: p(z) = p0(delta z), q(z) = c e^{i phi} q0(delta z),
/// so the equation reads log|z| + c e^{i phi} F0(delta z) = 0. The rotation and the
/// scale sit on q alone; applying them to both polynomials would cancel in F.
/// Validates the hypothesis that F avoids the reals on the closed unit disk
/// (and at infinity), so that all level curves stay outside |z| = 1.
inline Problem lower_extremal(const ComplexPoly& p0, const ComplexPoly& q0, double delta, double phi, double c) {
    if (p0.is_zero() || q0.is_zero()) throw BadParamsError("p0 and q0 must be nonzero");
    if (std::abs(p0.coeff(0)) < 1e-12 * p0.max_coeff_modulus() ||
        std::abs(q0.coeff(0)) < 1e-12 * q0.max_coeff_modulus())
        throw BadParamsError("p0(0) and q0(0) must be nonzero");
    if (!(delta > 0.0) || !(c > 0.0)) throw BadParamsError("delta and c must be positive");

    ComplexPoly p = p0.dilated(Complex(delta));
    ComplexPoly q = q0.dilated(Complex(delta)).scaled(c * std::polar(1.0, phi));
    Problem prob(p, q);

    Complex bad;
    double margin = detail::hypothesis_margin(prob, &bad);
    if (!(margin > 1e-4)) throw HypothesisFailedError(bad);
    return prob;
}

struct ExtremalResult {
    Problem problem;
    double phi = 0.0;
    double c = 0.0;
    SolveReport report;
};

/// Searches a rotation phi that pushes F off the reals, then doubles c from 1
/// until the equation has exactly d solutions. The existence proof is
/// non-constructive; this is the constructive counterpart used by the tests.
inline ExtremalResult extremal_search(const ComplexPoly& p0, const ComplexPoly& q0, double delta,
                                      const SolveParams& solve_params = {}, int c_cap_pow = 20) {
    double best_phi = 0.0, best_margin = -1.0;
    double use_delta = delta;
    for (int halving = 0; halving < 4 && best_margin <= 1e-4; ++halving) {
        for (int k = 0; k < 24; ++k) {
            double phi = 2.0 * M_PI * k / 24.0;
            try {
                ComplexPoly p = p0.dilated(Complex(use_delta));
                ComplexPoly q = q0.dilated(Complex(use_delta)).scaled(std::polar(1.0, phi));
                Problem prob(p, q);
                double margin = detail::hypothesis_margin(prob, nullptr);
                if (margin > best_margin) {
                    best_margin = margin;
                    best_phi = phi;
                }
            } catch (const std::runtime_error&) {
            }
        }
        if (best_margin <= 1e-4) use_delta *= 0.5;
    }
    if (best_margin <= 1e-4) throw BadParamsError("no rotation pushes F off the reals for this input");

    SolveParams params = solve_params;
    params.run_dynamics = false;
    for (double c = 1.0; c <= std::pow(2.0, c_cap_pow); c *= 2.0) {
        Problem prob = lower_extremal(p0, q0, use_delta, best_phi, c);
        SolveReport rep = solve(prob, params);
        if (rep.consistent && rep.N == prob.d())
            return ExtremalResult{std::move(prob), best_phi, c, std::move(rep)};
    }
    throw BadParamsError("no scale up to the cap yields exactly d solutions");
}

/// The perturbation family: halves eta until the member keeps all 5m
/// solutions of the unperturbed equation.
inline std::pair<Problem, SolveReport> ex3_search(int m, int n, double eta0 = 1e-3,
                                                  const SolveParams& solve_params = {}, int max_halvings = 12) {
    ExampleSpec spec = corpus_spec("ex3", m);
    spec.n = n;
    spec.eta = eta0;
    SolveParams params = solve_params;
    params.run_dynamics = false;
    for (int i = 0; i <= max_halvings; ++i, spec.eta *= 0.5) {
        Problem prob = build_example(spec);
        SolveReport rep = solve(prob, params);
        if (rep.consistent && rep.N >= 5 * m) return {std::move(prob), std::move(rep)};
    }
    throw BadParamsError("perturbation never settled at the unperturbed count");
}

}  // namespace logroot
