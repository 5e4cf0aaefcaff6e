// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. A single criterion can be selected by number on the
// command line.

#include <logroot/corpus.hpp>
#include <logroot/report_io.hpp>

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using logroot::Complex;
using logroot::ComplexPoly;
using logroot::Problem;
using logroot::SolveParams;
using logroot::SolveReport;

namespace {

const double kLn2 = std::log(2.0);

struct Failure {
    std::string what;
};

struct Criterion {
    int id = 0;
    std::string label;
    std::vector<Failure> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back({what});
    }
};

double min_dist(const SolveReport& rep, Complex target) {
    double best = 1e18;
    for (const auto& s : rep.solutions) best = std::min(best, std::abs(s.z - target));
    return best;
}

std::string cstr(Complex z) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g%+.6gi", z.real(), z.imag());
    return buf;
}

ComplexPoly random_poly(std::mt19937_64& rng, int degree) {
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    std::vector<Complex> c(static_cast<size_t>(degree) + 1);
    for (Complex& x : c) x = Complex(box(rng), box(rng));
    if (std::abs(c.back()) < 0.1) c.back() += Complex(0.5, 0.5);
    return ComplexPoly(std::move(c));
}

/// Corpus members and the random batch are solved once and shared between
/// the count, bound, certificate and dynamics criteria.
struct Batch {
    std::vector<std::pair<std::string, Problem>> corpus_problems;
    std::vector<SolveReport> corpus_reports;   // dynamics enabled
    std::vector<Problem> random_problems;      // 0 is a regular value for all of them
    std::vector<SolveReport> random_reports;   // dynamics disabled

    static const Batch& get() {
        static Batch batch = [] {
            Batch b;
            auto add = [&](const std::string& id, int k) {
                logroot::ExampleSpec spec = logroot::corpus_spec(id, k);
                b.corpus_problems.emplace_back(id + "/" + std::to_string(k), logroot::build_example(spec));
            };
            for (int n = 1; n <= 3; ++n) add("ex1", n);
            for (int m = 1; m <= 3; ++m) add("ex2", m);
            for (int n = 1; n <= 3; ++n) add("ex3-explicit", n);
            for (int m = 1; m <= 2; ++m) add("ex4", m);
            add("ex5", 1);

            SolveParams with_dyn;
            for (const auto& [label, prob] : b.corpus_problems)
                b.corpus_reports.push_back(logroot::solve(prob, with_dyn));

            SolveParams no_dyn;
            no_dyn.run_dynamics = false;
            std::mt19937_64 rng(0x10620240917ull);
            std::uniform_int_distribution<int> deg(0, 4);
            while (b.random_problems.size() < 200) {
                int m = deg(rng), n = deg(rng);
                if (m == 0 && n == 0) continue;
                try {
                    Problem prob(random_poly(rng, m), random_poly(rng, n));
                    SolveReport rep = logroot::solve(prob, no_dyn);
                    if (rep.N_degenerate > 0) continue;  // resample: 0 must be regular
                    b.random_problems.push_back(std::move(prob));
                    b.random_reports.push_back(std::move(rep));
                } catch (const logroot::NotCoprimeError&) {
                } catch (const logroot::BothConstantError&) {
                }
            }
            return b;
        }();
        return batch;
    }
};

void criterion1(Criterion& c) {
    SolveReport rep = logroot::solve(logroot::build_example(logroot::corpus_spec("ex1", 1)));
    c.require(rep.N == 3, "n=1: N = " + std::to_string(rep.N) + ", want 3");
    c.require(min_dist(rep, Complex(1.0)) < 1e-9, "n=1: solution 1 missing");
    c.require(min_dist(rep, Complex(0.5)) < 1e-9, "n=1: solution 0.5 missing");
    c.require(min_dist(rep, Complex(-0.191666)) < 1e-5, "n=1: solution -0.191666 missing");
    for (int n = 2; n <= 6; ++n) {
        SolveReport fam = logroot::solve(logroot::build_example(logroot::corpus_spec("ex1", n)));
        c.require(fam.N == 3 * n && fam.status == "ok",
                  "n=" + std::to_string(n) + ": N = " + std::to_string(fam.N) + ", want " + std::to_string(3 * n));
    }
}

void criterion2(Criterion& c) {
    SolveReport rep = logroot::solve(logroot::build_example(logroot::corpus_spec("ex2", 1)));
    c.require(rep.N == 5, "m=1: N = " + std::to_string(rep.N) + ", want 5");
    c.require(min_dist(rep, Complex(0.0625)) < 1e-10, "m=1: solution 1/16 off by more than 1e-10");
    c.require(min_dist(rep, Complex(0.125)) < 1e-10, "m=1: solution 1/8 off by more than 1e-10");
    c.require(min_dist(rep, Complex(0.25)) < 1e-10, "m=1: solution 1/4 off by more than 1e-10");
    c.require(min_dist(rep, Complex(-1.471293)) < 1e-5, "m=1: solution -1.471293 missing");
    c.require(min_dist(rep, Complex(-0.0106199)) < 1e-5, "m=1: solution -0.0106199 missing");
    for (int m = 2; m <= 4; ++m) {
        SolveReport fam = logroot::solve(logroot::build_example(logroot::corpus_spec("ex2", m)));
        c.require(fam.N == 5 * m && fam.status == "ok",
                  "m=" + std::to_string(m) + ": N = " + std::to_string(fam.N) + ", want " + std::to_string(5 * m));
    }
}

void criterion3(Criterion& c) {
    SolveReport rep = logroot::solve(logroot::build_example(logroot::corpus_spec("ex3-explicit", 1)));
    c.require(rep.N == 5, "n=1: N = " + std::to_string(rep.N) + ", want 5");
    for (double v : {1.0, 2.0, 0.5})
        c.require(min_dist(rep, Complex(v)) < 1e-9, "n=1: solution " + std::to_string(v) + " missing");
    c.require(min_dist(rep, Complex(-11.770347)) < 1e-5, "n=1: solution -11.770347 missing");
    c.require(min_dist(rep, Complex(-0.0849592)) < 1e-5, "n=1: solution -0.0849592 missing");
    for (int n = 2; n <= 3; ++n) {
        SolveReport fam = logroot::solve(logroot::build_example(logroot::corpus_spec("ex3-explicit", n)));
        c.require(fam.N == 5 * n && fam.status == "ok",
                  "n=" + std::to_string(n) + ": N = " + std::to_string(fam.N) + ", want " + std::to_string(5 * n));
    }
}

void criterion4(Criterion& c) {
    Problem prob = logroot::build_example(logroot::corpus_spec("ex4", 1));
    SolveReport rep = logroot::solve(prob);
    c.require(rep.N == 8, "m=1: N = " + std::to_string(rep.N) + ", want 8");
    for (double v : {-58.249375, -20.915701, -0.0826000, 0.466285, 1.0, 1.780021})
        c.require(min_dist(rep, Complex(v)) < 1e-5, "m=1: real solution " + std::to_string(v) + " missing");
    c.require(min_dist(rep, Complex(-5.705306, 10.732819)) < 1e-4, "m=1: conjugate pair (upper) missing");
    c.require(min_dist(rep, Complex(-5.705306, -10.732819)) < 1e-4, "m=1: conjugate pair (lower) missing");

    auto js = logroot::junctions(prob);
    c.require(js.size() == 2, "m=1: expected two branch points on the real axis");
    if (js.size() == 2) {
        c.require(std::abs(js[0].location - Complex(-12.718930)) < 1e-5, "x1 mismatch: " + cstr(js[0].location));
        c.require(std::abs(js[1].location - Complex(10.718930)) < 1e-5, "x2 mismatch: " + cstr(js[1].location));
        // the equation is normalized as log|z| + F = 0, so F = -(right-hand side)
        c.require(std::abs(-js[0].value.real() - 2.935272) < 1e-5, "y1 mismatch: " + cstr(-js[0].value));
        c.require(std::abs(-js[1].value.real() - 1.473143) < 1e-5, "y2 mismatch: " + cstr(-js[1].value));
    }

    SolveReport rep2 = logroot::solve(logroot::build_example(logroot::corpus_spec("ex4", 2)));
    c.require(rep2.N == 16 && rep2.status == "ok", "m=2: N = " + std::to_string(rep2.N) + ", want 16");
}

void criterion5(Criterion& c) {
    SolveReport rep = logroot::solve(logroot::build_example(logroot::corpus_spec("ex5", 1)));
    c.require(rep.N == 11, "N = " + std::to_string(rep.N) + ", want 11");
    // xi_4 and Re xi_{8,9} are negative: their sign-flipped variants leave
    // residuals of order 1 under direct substitution, while these values
    // reproduce the roots to all tabulated digits
    const Complex expected[11] = {{-198.8150, 0.0}, {-176.4617, 0.0}, {-17.8054, 0.0},   {-0.08289, 0.0},
                                  {0.4704, 0.0},    {1.0, 0.0},       {1.8020, 0.0},     {-8.6167, 10.2654},
                                  {-8.6167, -10.2654}, {-234.2803, 43.6244}, {-234.2803, -43.6244}};
    for (const Complex& v : expected)
        c.require(min_dist(rep, v) < 1e-3, "solution " + cstr(v) + " missing at 1e-3");
}

void criterion6(Criterion& c) {
    const Batch& batch = Batch::get();
    for (size_t i = 0; i < batch.corpus_reports.size(); ++i) {
        const SolveReport& rep = batch.corpus_reports[i];
        const std::string& label = batch.corpus_problems[i].first;
        c.require(rep.status == "ok", "corpus " + label + ": status " + rep.status);
        c.require(rep.N_plus - rep.N_minus == rep.d, "corpus " + label + ": N+ - N- != d");
        c.require(rep.degree_winding == rep.d, "corpus " + label + ": winding != d");
    }
    for (size_t i = 0; i < batch.random_reports.size(); ++i) {
        const SolveReport& rep = batch.random_reports[i];
        std::string label = "random " + std::to_string(i);
        c.require(rep.status == "ok", label + ": status " + rep.status);
        c.require(rep.N_plus - rep.N_minus == rep.d, label + ": N+ - N- != d");
        c.require(rep.degree_winding == rep.d, label + ": winding != d");
    }
}

void criterion7(Criterion& c) {
    const Batch& batch = Batch::get();
    auto check = [&](const SolveReport& rep, const std::string& label) {
        c.require(rep.N >= rep.d, label + ": N below max(m, n)");
        c.require(rep.N <= 3 * rep.d + 2 * rep.m, label + ": N above 3d + 2m");
    };
    for (size_t i = 0; i < batch.corpus_reports.size(); ++i)
        check(batch.corpus_reports[i], "corpus " + batch.corpus_problems[i].first);
    for (size_t i = 0; i < batch.random_reports.size(); ++i)
        check(batch.random_reports[i], "random " + std::to_string(i));
}

void criterion8(Criterion& c) {
    const Batch& batch = Batch::get();
    auto check = [&](const SolveReport& rep, const std::string& label) {
        c.require(rep.certificate_count >= rep.d, label + ": fewer than d certified crossings");
        c.require(rep.certificate_ok, label + ": certificate residual above 1e-8");
    };
    for (size_t i = 0; i < batch.corpus_reports.size(); ++i)
        check(batch.corpus_reports[i], "corpus " + batch.corpus_problems[i].first);
    for (size_t i = 0; i < batch.random_reports.size(); ++i)
        check(batch.random_reports[i], "random " + std::to_string(i));
}

void criterion9(Criterion& c) {
    const Batch& batch = Batch::get();
    for (size_t i = 0; i < batch.corpus_reports.size(); ++i) {
        const SolveReport& rep = batch.corpus_reports[i];
        const std::string& label = batch.corpus_problems[i].first;
        c.require(rep.dynamics.has_value(), "corpus " + label + ": dynamics record missing");
        if (!rep.dynamics) continue;
        c.require(rep.dynamics->fatou_ok, "corpus " + label + ": a sense-reversing solution was not recovered");
        c.require(rep.dynamics->bound_ok, "corpus " + label + ": n- exceeds d + m");
    }
}

void criterion10(Criterion& c) {
    std::mt19937_64 rng(0xE6E6E6ull);
    std::uniform_int_distribution<int> deg(1, 2);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    int produced = 0, attempts = 0;
    while (produced < 20 && attempts < 200) {
        ++attempts;
        int dm = deg(rng), dn = deg(rng);
        std::vector<Complex> pc(static_cast<size_t>(dm) + 1), qc(static_cast<size_t>(dn) + 1);
        for (Complex& x : pc) x = Complex(box(rng), box(rng));
        for (Complex& x : qc) x = Complex(box(rng), box(rng));
        // the generator requires nonzero values at the origin
        if (std::abs(pc[0]) < 0.3) pc[0] += Complex(0.6, 0.2);
        if (std::abs(qc[0]) < 0.3) qc[0] += Complex(0.2, 0.7);
        if (std::abs(pc.back()) < 0.1) pc.back() += Complex(0.5, 0.0);
        if (std::abs(qc.back()) < 0.1) qc.back() += Complex(0.5, 0.0);
        try {
            auto result = logroot::extremal_search(ComplexPoly(pc), ComplexPoly(qc), 0.1);
            c.require(result.report.N == result.problem.d(),
                      "generated problem has N = " + std::to_string(result.report.N) + " != d");
            ++produced;
        } catch (const std::runtime_error&) {
            // candidate rejected by the value-avoidance search; draw another
        }
    }
    c.require(produced == 20, "only " + std::to_string(produced) + " of 20 generated problems validated");
}

void criterion11(Criterion& c) {
    // scaling invariance: (p, q) -> (cp, cq) leaves the solution set unchanged
    {
        Problem base(ComplexPoly{1.0, 8.0}, ComplexPoly{6.0 * kLn2});
        Complex scale(2.0, -3.0);
        Problem scaled(base.p().scaled(scale), base.q().scaled(scale));
        SolveParams params;
        params.run_dynamics = false;
        SolveReport a = logroot::solve(base, params);
        SolveReport b = logroot::solve(scaled, params);
        c.require(a.N == b.N, "scaling changed the solution count");
        for (const auto& s : a.solutions) {
            double best = 1e18;
            for (const auto& t : b.solutions) best = std::min(best, std::abs(s.z - t.z));
            c.require(best < 1e-10, "scaling moved a solution by " + std::to_string(best));
        }
    }
    // conjugation closure on the real-coefficient corpus
    {
        const Batch& batch = Batch::get();
        for (size_t i = 0; i < batch.corpus_reports.size(); ++i) {
            if (!batch.corpus_problems[i].second.real_coefficients()) continue;
            for (const auto& s : batch.corpus_reports[i].solutions) {
                double best = 1e18;
                for (const auto& t : batch.corpus_reports[i].solutions)
                    best = std::min(best, std::abs(std::conj(s.z) - t.z));
                c.require(best <= 1e-6 * (1.0 + std::abs(s.z)),
                          "corpus " + batch.corpus_problems[i].first + ": conjugate of " + cstr(s.z) + " missing");
            }
        }
    }
    // Wirtinger jets against central finite differences
    {
        std::mt19937_64 rng(777);
        std::uniform_int_distribution<int> deg(0, 4);
        std::uniform_real_distribution<double> box(-2.0, 2.0);
        int checked = 0, bad = 0;
        while (checked < 1000) {
            int m = deg(rng), n = deg(rng);
            if (m == 0 && n == 0) continue;
            try {
                Problem prob(random_poly(rng, m), random_poly(rng, n));
                Complex z(box(rng), box(rng));
                if (prob.at_singularity(z) || std::abs(z) < 1e-2) continue;
                bool near_pole = false;
                for (const Complex& pole : prob.poles())
                    if (std::abs(z - pole) < 1e-2) near_pole = true;
                if (near_pole) continue;
                logroot::Jet jet = prob.jet_g(z);
                const double h = 1e-6;
                Complex gx = (prob.eval_g(z + h) - prob.eval_g(z - h)) / (2.0 * h);
                Complex gy = (prob.eval_g(z + Complex(0, h)) - prob.eval_g(z - Complex(0, h))) / (2.0 * h);
                Complex fd_dz = 0.5 * (gx - Complex(0, 1) * gy);
                Complex fd_dzbar = 0.5 * (gx + Complex(0, 1) * gy);
                double scale = std::abs(jet.dz) + std::abs(jet.dzbar);
                if (std::abs(jet.dz - fd_dz) > 1e-4 * scale || std::abs(jet.dzbar - fd_dzbar) > 1e-4 * scale) ++bad;
                ++checked;
            } catch (const std::runtime_error&) {
            }
        }
        c.require(bad == 0, std::to_string(bad) + " of 1000 jets disagree with finite differences");
    }
    // determinism: byte-identical reports across thread counts
    {
        Problem prob = logroot::build_example(logroot::corpus_spec("ex4", 1));
        SolveParams p1;
        p1.threads = 1;
        SolveParams p4;
        p4.threads = 4;
        std::string a = logroot::emit_report_json(prob, logroot::solve(prob, p1));
        std::string b = logroot::emit_report_json(prob, logroot::solve(prob, p4));
        c.require(a == b, "reports differ between 1 and 4 threads");
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::pair<int, const char*> labels[] = {
        {1, "example family 1: counts 3n and reference solutions"},
        {2, "example family 2: counts 5m and reference solutions"},
        {3, "explicit family 3: counts 5n and reference solutions"},
        {4, "example 4: eight solutions, critical points, z -> z^2 lift"},
        {5, "example 5: eleven solutions at the reference values"},
        {6, "degree identity N+ - N- = d and winding = d on corpus plus 200 random problems"},
        {7, "theorem bounds max(m,n) <= N <= 3d + 2m on every solved instance"},
        {8, "certificate: at least d rising crossings, each with |g| < 1e-8"},
        {9, "dynamics cross-check: sense-reversing solutions recovered, n- <= d + m"},
        {10, "extremal generator: 20 problems with exactly N = d"},
        {11, "property suite: scaling, conjugation, jets, determinism"},
    };
    std::vector<Criterion> criteria;
    for (const auto& [id, label] : labels) {
        Criterion c;
        c.id = id;
        c.label = label;
        criteria.push_back(std::move(c));
    }

    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    for (Criterion& c : criteria) {
        if (only != 0 && c.id != only) continue;
        auto start = std::chrono::steady_clock::now();
        switch (c.id) {
            case 1: criterion1(c); break;
            case 2: criterion2(c); break;
            case 3: criterion3(c); break;
            case 4: criterion4(c); break;
            case 5: criterion5(c); break;
            case 6: criterion6(c); break;
            case 7: criterion7(c); break;
            case 8: criterion8(c); break;
            case 9: criterion9(c); break;
            case 10: criterion10(c); break;
            case 11: criterion11(c); break;
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = c.failures.empty();
        std::printf("criterion %2d: %s  %s (%.1fs)\n", c.id, pass ? "PASS" : "FAIL", c.label.c_str(), secs);
        for (const Failure& f : c.failures) std::printf("              - %s\n", f.what.c_str());
        if (!pass) ++failed;
    }
    if (failed) std::printf("%d criterion(s) failed\n", failed);
    return failed;
}
