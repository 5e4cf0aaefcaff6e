#pragma once

#include <logroot/curves.hpp>
#include <logroot/solver.hpp>

#include <json.hpp>

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace logroot {

struct InputFormatError : std::runtime_error {
    explicit InputFormatError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt_complex(Complex z) { return "[" + fmt17(z.real()) + "," + fmt17(z.imag()) + "]"; }

}  // namespace detail

/// Problem definition as accepted on the command line:
/// {"p": [[re, im], ...], "q": [[re, im], ...], "w": [re, im]?},
/// coefficients in ascending powers.
struct ProblemInput {
    ComplexPoly p, q;
    Complex w{0.0, 0.0};
};

inline ProblemInput parse_problem_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputFormatError(std::string("invalid JSON: ") + e.what());
    }
    auto read_poly = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_array())
            throw InputFormatError(std::string("missing coefficient array \"") + key + "\"");
        std::vector<Complex> coeffs;
        for (const auto& entry : doc[key]) {
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
                throw InputFormatError(std::string("coefficients of \"") + key + "\" must be [re, im] pairs");
            coeffs.emplace_back(entry[0].get<double>(), entry[1].get<double>());
        }
        return ComplexPoly(std::move(coeffs));
    };
    ProblemInput input;
    input.p = read_poly("p");
    input.q = read_poly("q");
    if (doc.contains("w")) {
        const auto& w = doc["w"];
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
            throw InputFormatError("\"w\" must be an [re, im] pair");
        input.w = Complex(w[0].get<double>(), w[1].get<double>());
    }
    return input;
}

/// Everything the report JSON carries, in emission order.
struct ReportData {
    int m = 0, n = 0, d = 0;
    Complex w{0.0, 0.0};
    struct SolutionRow {
        Complex z;
        double residual = 0.0;
        std::string orientation;
        std::string source;
        bool operator==(const SolutionRow&) const = default;
    };
    std::vector<SolutionRow> solutions;
    int N = 0, N_plus = 0, N_minus = 0, N_degenerate = 0;
    int degree_winding = 0;
    bool lower_ok = false, upper_ok = false;
    int certificate_count = 0;
    std::vector<Complex> certificate_points;
    struct DynamicsRow {
        int n_minus = 0;
        bool fatou_ok = false, bound_ok = false;
        int indeterminate = 0, disagreements = 0;
        struct FixedPointRow {
            Complex z;
            double multiplier = 0.0;
            Complex seed;
            int iterations = 0;
            bool operator==(const FixedPointRow&) const = default;
        };
        std::vector<FixedPointRow> fixed_points;
        bool operator==(const DynamicsRow&) const = default;
    };
    std::optional<DynamicsRow> dynamics;
    struct PerturbedRow {
        Complex w;
        int N = 0, N_plus = 0, N_minus = 0, N_degenerate = 0;
        bool operator==(const PerturbedRow&) const = default;
    };
    std::optional<PerturbedRow> perturbed;
    bool winding_global_ok = false, winding_local_ok = false, degree_identity_ok = false, certificate_ok = false;
    std::string completeness;
    int escalations = 0;
    std::string status;

    bool operator==(const ReportData&) const = default;
};

inline ReportData to_report_data(const Problem& prob, const SolveReport& rep) {
    ReportData data;
    data.m = rep.m;
    data.n = rep.n;
    data.d = rep.d;
    data.w = prob.w();
    for (const Solution& s : rep.solutions) {
        ReportData::SolutionRow row;
        row.z = s.z;
        row.residual = s.residual;
        row.orientation = to_string(s.orientation);
        if (s.source == SeedKind::Grid)
            row.source = "grid";
        else
            row.source = "curve:" + std::to_string(s.curve_index) + ":" + to_string(s.source);
        data.solutions.push_back(std::move(row));
    }
    data.N = rep.N;
    data.N_plus = rep.N_plus;
    data.N_minus = rep.N_minus;
    data.N_degenerate = rep.N_degenerate;
    data.degree_winding = rep.degree_winding;
    data.lower_ok = rep.bounds_ok.lower;
    data.upper_ok = rep.bounds_ok.upper;
    data.certificate_count = rep.certificate_count;
    data.certificate_points = rep.certificate_points;
    if (rep.dynamics) {
        ReportData::DynamicsRow dyn;
        dyn.n_minus = rep.dynamics->n_minus;
        dyn.fatou_ok = rep.dynamics->fatou_ok;
        dyn.bound_ok = rep.dynamics->bound_ok;
        dyn.indeterminate = rep.dynamics->indeterminate;
        dyn.disagreements = rep.dynamics->disagreements;
        for (const FixedPointRecord& rec : rep.dynamics->fixed_points)
            dyn.fixed_points.push_back({rec.z, rec.multiplier_modulus, rec.seed, rec.iterations});
        data.dynamics = std::move(dyn);
    }
    if (rep.perturbed)
        data.perturbed = ReportData::PerturbedRow{rep.perturbed->w, rep.perturbed->N, rep.perturbed->N_plus,
                                                  rep.perturbed->N_minus, rep.perturbed->N_degenerate};
    data.winding_global_ok = rep.winding_global_ok;
    data.winding_local_ok = rep.winding_local_ok;
    data.degree_identity_ok = rep.degree_identity_ok;
    data.certificate_ok = rep.certificate_ok;
    data.completeness = rep.completeness;
    data.escalations = rep.escalations;
    data.status = rep.status;
    return data;
}

/// Fixed-order emitter; all numbers carry 17 significant digits so the text
/// round-trips to the exact doubles and identical runs emit identical bytes.
inline std::string emit_report_json(const ReportData& data) {
    using detail::fmt17;
    using detail::fmt_complex;
    std::ostringstream os;
    os << "{\"problem\":{\"m\":" << data.m << ",\"n\":" << data.n << ",\"d\":" << data.d
       << ",\"w\":" << fmt_complex(data.w) << "},";
    os << "\"solutions\":[";
    for (size_t i = 0; i < data.solutions.size(); ++i) {
        const auto& s = data.solutions[i];
        if (i) os << ",";
        os << "{\"z\":" << fmt_complex(s.z) << ",\"residual\":" << fmt17(s.residual) << ",\"orientation\":\""
           << s.orientation << "\",\"source\":\"" << s.source << "\"}";
    }
    os << "],";
    os << "\"counts\":{\"N\":" << data.N << ",\"N_plus\":" << data.N_plus << ",\"N_minus\":" << data.N_minus
       << ",\"N_degenerate\":" << data.N_degenerate << "},";
    os << "\"degree_winding\":" << data.degree_winding << ",";
    os << "\"bounds\":{\"lower_ok\":" << (data.lower_ok ? "true" : "false")
       << ",\"upper_ok\":" << (data.upper_ok ? "true" : "false") << "},";
    os << "\"certificate\":{\"count\":" << data.certificate_count << ",\"points\":[";
    for (size_t i = 0; i < data.certificate_points.size(); ++i) {
        if (i) os << ",";
        os << fmt_complex(data.certificate_points[i]);
    }
    os << "]},";
    os << "\"dynamics\":";
    if (data.dynamics) {
        const auto& dyn = *data.dynamics;
        os << "{\"n_minus\":" << dyn.n_minus << ",\"fatou_ok\":" << (dyn.fatou_ok ? "true" : "false")
           << ",\"bound_ok\":" << (dyn.bound_ok ? "true" : "false") << ",\"indeterminate\":" << dyn.indeterminate
           << ",\"disagreements\":" << dyn.disagreements << ",\"fixed_points\":[";
        for (size_t i = 0; i < dyn.fixed_points.size(); ++i) {
            const auto& fp = dyn.fixed_points[i];
            if (i) os << ",";
            os << "{\"z\":" << fmt_complex(fp.z) << ",\"multiplier\":" << fmt17(fp.multiplier)
               << ",\"seed\":" << fmt_complex(fp.seed) << ",\"iterations\":" << fp.iterations << "}";
        }
        os << "]}";
    } else {
        os << "null";
    }
    os << ",";
    if (data.perturbed) {
        os << "\"perturbed\":{\"w\":" << fmt_complex(data.perturbed->w) << ",\"N\":" << data.perturbed->N
           << ",\"N_plus\":" << data.perturbed->N_plus << ",\"N_minus\":" << data.perturbed->N_minus
           << ",\"N_degenerate\":" << data.perturbed->N_degenerate << "},";
    }
    os << "\"checks\":{\"winding_global_ok\":" << (data.winding_global_ok ? "true" : "false")
       << ",\"winding_local_ok\":" << (data.winding_local_ok ? "true" : "false")
       << ",\"degree_identity_ok\":" << (data.degree_identity_ok ? "true" : "false")
       << ",\"certificate_ok\":" << (data.certificate_ok ? "true" : "false") << "},";
    os << "\"completeness\":\"" << data.completeness << "\",";
    os << "\"escalations\":" << data.escalations << ",";
    os << "\"status\":\"" << data.status << "\"}";
    return os.str();
}

inline std::string emit_report_json(const Problem& prob, const SolveReport& rep) {
    return emit_report_json(to_report_data(prob, rep));
}

inline ReportData parse_report_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    auto as_complex = [](const nlohmann::json& v) {
        return Complex(v.at(0).get<double>(), v.at(1).get<double>());
    };
    ReportData data;
    data.m = doc.at("problem").at("m").get<int>();
    data.n = doc.at("problem").at("n").get<int>();
    data.d = doc.at("problem").at("d").get<int>();
    data.w = as_complex(doc.at("problem").at("w"));
    for (const auto& s : doc.at("solutions")) {
        ReportData::SolutionRow row;
        row.z = as_complex(s.at("z"));
        row.residual = s.at("residual").get<double>();
        row.orientation = s.at("orientation").get<std::string>();
        row.source = s.at("source").get<std::string>();
        data.solutions.push_back(std::move(row));
    }
    data.N = doc.at("counts").at("N").get<int>();
    data.N_plus = doc.at("counts").at("N_plus").get<int>();
    data.N_minus = doc.at("counts").at("N_minus").get<int>();
    data.N_degenerate = doc.at("counts").at("N_degenerate").get<int>();
    data.degree_winding = doc.at("degree_winding").get<int>();
    data.lower_ok = doc.at("bounds").at("lower_ok").get<bool>();
    data.upper_ok = doc.at("bounds").at("upper_ok").get<bool>();
    data.certificate_count = doc.at("certificate").at("count").get<int>();
    for (const auto& p : doc.at("certificate").at("points")) data.certificate_points.push_back(as_complex(p));
    if (!doc.at("dynamics").is_null()) {
        ReportData::DynamicsRow dyn;
        const auto& d = doc.at("dynamics");
        dyn.n_minus = d.at("n_minus").get<int>();
        dyn.fatou_ok = d.at("fatou_ok").get<bool>();
        dyn.bound_ok = d.at("bound_ok").get<bool>();
        dyn.indeterminate = d.at("indeterminate").get<int>();
        dyn.disagreements = d.at("disagreements").get<int>();
        for (const auto& fp : d.at("fixed_points"))
            dyn.fixed_points.push_back({as_complex(fp.at("z")), fp.at("multiplier").get<double>(),
                                        as_complex(fp.at("seed")), fp.at("iterations").get<int>()});
        data.dynamics = std::move(dyn);
    }
    if (doc.contains("perturbed")) {
        const auto& p = doc.at("perturbed");
        data.perturbed = ReportData::PerturbedRow{as_complex(p.at("w")), p.at("N").get<int>(),
                                                  p.at("N_plus").get<int>(), p.at("N_minus").get<int>(),
                                                  p.at("N_degenerate").get<int>()};
    }
    data.winding_global_ok = doc.at("checks").at("winding_global_ok").get<bool>();
    data.winding_local_ok = doc.at("checks").at("winding_local_ok").get<bool>();
    data.degree_identity_ok = doc.at("checks").at("degree_identity_ok").get<bool>();
    data.certificate_ok = doc.at("checks").at("certificate_ok").get<bool>();
    data.completeness = doc.at("completeness").get<std::string>();
    data.escalations = doc.at("escalations").get<int>();
    data.status = doc.at("status").get<std::string>();
    return data;
}

/// Static SVG plot: level curves as polylines, solutions as circles colored
/// by orientation, poles and branch points as distinct markers.
inline std::string emit_svg(const Problem& prob, const std::vector<Curve>& curves, const SolveReport& rep) {
    double extent = 1.0;
    for (const Solution& s : rep.solutions) extent = std::max(extent, std::abs(s.z));
    for (const Complex& p : prob.poles()) extent = std::max(extent, std::abs(p));
    std::vector<Junction> js = junctions(prob);
    for (const Junction& j : js) extent = std::max(extent, std::abs(j.location));
    extent *= 1.3;

    const double size = 800.0;
    auto sx = [&](double x) { return (x / extent + 1.0) * 0.5 * size; };
    auto sy = [&](double y) { return (1.0 - y / extent) * 0.5 * size; };
    char buf[256];
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
    os << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";

    // axes
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"0\" y1=\"%.2f\" x2=\"800\" y2=\"%.2f\" stroke=\"#dddddd\"/>\n", sy(0.0), sy(0.0));
    os << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.2f\" y1=\"0\" x2=\"%.2f\" y2=\"800\" stroke=\"#dddddd\"/>\n", sx(0.0), sx(0.0));
    os << buf;

    for (const Curve& curve : curves) {
        std::vector<Complex> run;
        auto flush = [&] {
            if (run.size() < 2) {
                run.clear();
                return;
            }
            os << "<polyline fill=\"none\" stroke=\"#808080\" stroke-width=\"1\" points=\"";
            for (const Complex& z : run) {
                std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(z.real()), sy(z.imag()));
                os << buf;
            }
            os << "\"/>\n";
            run.clear();
        };
        for (const Complex& z : curve.samples) {
            if (is_infinity_marker(z) || std::abs(z.real()) > extent || std::abs(z.imag()) > extent) {
                flush();
                continue;
            }
            run.push_back(z);
        }
        flush();
    }

    for (const Complex& p : prob.poles()) {
        double x = sx(p.real()), y = sy(p.imag());
        std::snprintf(buf, sizeof(buf),
                      "<path d=\"M %.2f %.2f L %.2f %.2f M %.2f %.2f L %.2f %.2f\" stroke=\"#000000\" "
                      "stroke-width=\"1.5\"/>\n",
                      x - 5, y - 5, x + 5, y + 5, x - 5, y + 5, x + 5, y - 5);
        os << buf;
    }
    for (const Junction& j : js) {
        double x = sx(j.location.real()), y = sy(j.location.imag());
        std::snprintf(buf, sizeof(buf),
                      "<path d=\"M %.2f %.2f L %.2f %.2f L %.2f %.2f L %.2f %.2f Z\" fill=\"none\" "
                      "stroke=\"#9467bd\" stroke-width=\"1.5\"/>\n",
                      x, y - 6, x + 6, y, x, y + 6, x - 6, y);
        os << buf;
    }
    for (const Solution& s : rep.solutions) {
        const char* fill = s.orientation == Orientation::Positive   ? "#1f77b4"
                           : s.orientation == Orientation::Negative ? "#d62728"
                                                                    : "#7f7f7f";
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
                      sx(s.z.real()), sy(s.z.imag()), fill);
        os << buf;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace logroot
