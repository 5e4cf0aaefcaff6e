// Command-line front end: reads a problem (JSON file or a built-in example
// family), runs the full pipeline, and writes the JSON report plus optional
// CSV curve samples and an SVG plot.
//
// Exit codes: 0 all checks passed, 1 input error, 2 inconsistent result.

#include <logroot/corpus.hpp>
#include <logroot/report_io.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace {

int log_level() {
    const char* env = std::getenv("LOGROOT_LOG");
    return env ? std::atoi(env) : 0;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[logroot] " << msg << "\n";
}

std::optional<logroot::Complex> parse_complex_pair(const std::string& text) {
    std::istringstream is(text);
    double re = 0.0, im = 0.0;
    char comma = 0;
    if (!(is >> re)) return std::nullopt;
    if (is >> comma) {
        if (comma != ',' || !(is >> im)) return std::nullopt;
    }
    std::string rest;
    if (is >> rest) return std::nullopt;
    return logroot::Complex(re, im);
}

logroot::Problem make_example(const std::string& id, const std::map<std::string, double>& params,
                              logroot::Complex w) {
    int k = 1;
    if (params.count("m")) k = static_cast<int>(params.at("m"));
    if ((id == "ex1" || id == "ex3-explicit") && params.count("n")) k = static_cast<int>(params.at("n"));
    logroot::ExampleSpec spec = logroot::corpus_spec(id, k);
    if (params.count("n")) spec.n = static_cast<int>(params.at("n"));
    if (params.count("a")) spec.a = params.at("a");
    if (params.count("b")) spec.b = params.at("b");
    if (params.count("delta")) spec.delta = params.at("delta");
    if (params.count("phi")) spec.phi = params.at("phi");
    if (params.count("c")) spec.c = params.at("c");
    if (params.count("eta")) spec.eta = params.at("eta");
    logroot::Problem prob = logroot::build_example(spec);
    if (w != logroot::Complex(0.0)) return prob.with_w(w);
    return prob;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver for p(z) log|z| + q(z) = 0 with complex polynomials p, q"};

    std::string input_path, example_id, out_path, csv_path, svg_path, w_text;
    std::vector<std::string> param_args;
    double tol = 1e-10;
    bool no_dynamics = false, no_certificate = false;
    int threads = 1;
    int escalations = 3;
    uint64_t seed = 20240917ull;

    auto* input_opt = app.add_option("--input", input_path, "problem definition JSON file");
    auto* example_opt = app.add_option("--example", example_id, "built-in example id (ex1..ex6)");
    input_opt->excludes(example_opt);
    example_opt->excludes(input_opt);
    app.add_option("--param", param_args, "example parameter k=v (m, n, a, b, delta, phi, c, eta)");
    app.add_option("--w", w_text, "target value RE,IM (default 0)");
    app.add_option("--out", out_path, "report output path (default: stdout)");
    app.add_option("--csv", csv_path, "write curve samples as CSV");
    app.add_option("--svg", svg_path, "write an SVG plot");
    app.add_option("--tol", tol, "Newton residual tolerance on |g - w|");
    app.add_flag("--no-dynamics", no_dynamics, "skip the fixed-point cross-check");
    app.add_flag("--no-certificate", no_certificate, "skip the certificate gate");
    app.add_option("--threads", threads, "worker threads for seed refinement");
    app.add_option("--escalations", escalations, "retry rounds with refined tracing and grid seeds");
    app.add_option("--seed", seed, "perturbation seed for the dynamics reruns");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    if (input_path.empty() == example_id.empty()) {
        std::cerr << "error: exactly one of --input or --example is required\n";
        return 1;
    }

    logroot::Complex w(0.0);
    if (!w_text.empty()) {
        auto parsed = parse_complex_pair(w_text);
        if (!parsed) {
            std::cerr << "error: --w expects RE or RE,IM\n";
            return 1;
        }
        w = *parsed;
    }

    std::map<std::string, double> params;
    for (const std::string& kv : param_args) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --param expects k=v, got \"" << kv << "\"\n";
            return 1;
        }
        try {
            params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            std::cerr << "error: bad value in --param \"" << kv << "\"\n";
            return 1;
        }
    }

    std::optional<logroot::Problem> prob;
    try {
        if (!input_path.empty()) {
            std::ifstream in(input_path);
            if (!in) {
                std::cerr << "error: cannot read " << input_path << "\n";
                return 1;
            }
            std::stringstream buf;
            buf << in.rdbuf();
            logroot::ProblemInput parsed = logroot::parse_problem_json(buf.str());
            logroot::Complex w_eff = !w_text.empty() ? w : parsed.w;
            prob.emplace(parsed.p, parsed.q, w_eff);
        } else {
            prob.emplace(make_example(example_id, params, w));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    logroot::SolveParams solve_params;
    solve_params.solve_tol = tol;
    solve_params.run_dynamics = !no_dynamics;
    solve_params.run_certificate = !no_certificate;
    solve_params.threads = threads;
    solve_params.escalation_cap = escalations;
    solve_params.dynamics.perturb_seed = seed;

    info("solving (d = " + std::to_string(prob->d()) + ")");
    logroot::SolveReport report = logroot::solve(*prob, solve_params);
    info("status: " + report.status + ", N = " + std::to_string(report.N));

    std::string json = logroot::emit_report_json(*prob, report);
    if (out_path.empty()) {
        std::cout << json << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return 1;
        }
        out << json << "\n";
    }

    if (!csv_path.empty() || !svg_path.empty()) {
        auto curves = logroot::trace(*prob, solve_params.trace);
        if (!csv_path.empty()) {
            std::ofstream csv(csv_path);
            if (!csv) {
                std::cerr << "error: cannot write " << csv_path << "\n";
                return 1;
            }
            logroot::write_curves_csv(csv, curves);
        }
        if (!svg_path.empty()) {
            std::ofstream svg(svg_path);
            if (!svg) {
                std::cerr << "error: cannot write " << svg_path << "\n";
                return 1;
            }
            svg << logroot::emit_svg(*prob, curves, report);
        }
    }

    bool ok = report.consistent && report.bounds_ok.lower && report.bounds_ok.upper;
    if (report.dynamics) ok = ok && report.dynamics->fatou_ok && report.dynamics->bound_ok;
    return ok ? 0 : 2;
}
