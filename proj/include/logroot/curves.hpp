#pragma once

#include <logroot/problem.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

namespace logroot {

struct CertificateShortError : std::runtime_error {
    explicit CertificateShortError(const std::string& what) : std::runtime_error(what) {}
};

/// Endpoint marker for curves that start or end at the pole at infinity.
inline constexpr int kEndpointInfinity = -1;

inline Complex infinity_marker() {
    return Complex(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
}

inline bool is_infinity_marker(Complex z) { return std::isinf(z.real()) || std::isinf(z.imag()); }

struct TraceParams {
    double trace_tol = 1e-9;        ///< |Im F - level| <= trace_tol * (1 + |F|) at samples
    double h_min_rel = 1e-6;        ///< step bounds, relative to the local scale
    double h_max_rel = 0.1;
    int max_steps = 200000;         ///< per curve
    double junction_real_tol = 1e-9;
    double seed_radius_factor = 1e-3;
    double max_turn = 0.5;          ///< radians per accepted step
    double level_offset = 0.0;      ///< perturbs the traced level (escalation fallback)
    double g_safe = 5.0;            ///< |G| margin past which a monotone log tail cannot cross zero
};

/// Branch point of the level set: critical point of F with on-level critical value.
/// 2L branches meet here, spaced pi/L apart.
struct Junction {
    Complex location;
    int multiplicity = 1;               ///< L, smallest k with F^(k)(z0) != 0
    double alpha = 0.0;                 ///< arg F^(L)(z0)
    Complex value;                      ///< F(z0)
    std::vector<double> branch_angles;  ///< the 2L local directions of the level set, sorted
};

/// One traced component of {Im F = level}, parametrized with Re F increasing.
struct Curve {
    std::vector<Complex> samples;   ///< plane coordinates; at most one infinity marker
    std::vector<double> f_values;   ///< Re F at the samples, monotonically increasing
    int endpoint_start = kEndpointInfinity;  ///< pole index into Problem.poles(), or infinity
    int endpoint_end = kEndpointInfinity;
    bool passes_infinity = false;
    bool complete = true;
};

namespace detail {

inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    return a;
}

/// Signed angular difference a-b wrapped into (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = std::fmod(a - b, 2.0 * M_PI);
    if (d <= -M_PI) d += 2.0 * M_PI;
    if (d > M_PI) d -= 2.0 * M_PI;
    return d;
}

/// Rational function in one chart, with derivative through the Wronskian numerator.
struct Rat {
    ComplexPoly num, den, wronsk;

    Complex F(Complex z) const { return num.eval(z) / den.eval(z); }
    Complex Fp(Complex z) const {
        Complex dv = den.eval(z);
        return wronsk.eval(z) / (dv * dv);
    }
};

inline Rat make_rat(ComplexPoly num, ComplexPoly den) {
    Rat r;
    r.wronsk = num.derivative() * den - num * den.derivative();
    r.num = std::move(num);
    r.den = std::move(den);
    return r;
}

/// F in the plane chart: q/p.
inline Rat plane_rat(const Problem& prob) { return make_rat(prob.q(), prob.p()); }

/// F(1/u) as a rational function of u: u^(m-n) rev(q) / u^(n-m) rev(p).
inline Rat inverted_rat(const Problem& prob) {
    ComplexPoly num = prob.q().reversed();
    ComplexPoly den = prob.p().reversed();
    if (prob.m() > prob.n()) num = num.shifted_up(prob.m() - prob.n());
    if (prob.n() > prob.m()) den = den.shifted_up(prob.n() - prob.m());
    return make_rat(std::move(num), std::move(den));
}

/// Unit tangent of the level line of Im F, oriented so F increases.
inline Complex level_tangent(const Rat& rat, Complex z) {
    Complex fp = rat.Fp(z);
    double a = std::abs(fp);
    if (!(a > 0.0) || !std::isfinite(a)) return Complex(1.0, 0.0);
    return std::conj(fp) / a;
}

/// Newton steps along the normal direction pulling z onto Im F = level.
inline bool level_correct(const Rat& rat, Complex& z, double level, int steps = 3) {
    for (int i = 0; i < steps; ++i) {
        Complex fv = rat.F(z);
        if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag())) return false;
        double v = fv.imag() - level;
        Complex fp = rat.Fp(z);
        double n2 = std::norm(fp);
        if (!(n2 > 1e-300) || !std::isfinite(n2)) return false;
        z -= v * (Complex(0.0, 1.0) * std::conj(fp)) / n2;
    }
    return true;
}

/// Power series of num/den around z0 (den(z0) != 0), first `count` coefficients.
inline std::vector<Complex> series_div(const ComplexPoly& num, const ComplexPoly& den, Complex z0, int count) {
    std::vector<Complex> a = num.taylor_at(z0, count);
    std::vector<Complex> b = den.taylor_at(z0, count);
    std::vector<Complex> c(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        Complex acc = a[static_cast<size_t>(k)];
        for (int j = 0; j < k; ++j) acc -= c[static_cast<size_t>(j)] * b[static_cast<size_t>(k - j)];
        c[static_cast<size_t>(k)] = acc / b[0];
    }
    return c;
}

/// Local branch data of F at a point where den != 0: multiplicity L and arg F^(L).
struct BranchLocal {
    int L = 0;           // 0 when no nonzero derivative was found (should not happen)
    double alpha = 0.0;
    Complex value;
};

/// The multiplicity scan weighs the series coefficients by radius^k: raw
/// coefficients grow geometrically when a pole sits just outside z0, which
/// would drown a perfectly healthy first derivative.
inline BranchLocal branch_local(const Rat& rat, Complex z0, int max_order, double radius) {
    BranchLocal out;
    auto c = series_div(rat.num, rat.den, z0, max_order + 1);
    out.value = c[0];
    double scale = 0.0, pw = 1.0;
    std::vector<double> weighted(static_cast<size_t>(max_order) + 1, 0.0);
    for (int k = 1; k <= max_order; ++k) {
        pw *= radius;
        weighted[static_cast<size_t>(k)] = std::abs(c[static_cast<size_t>(k)]) * pw;
        scale = std::max(scale, weighted[static_cast<size_t>(k)]);
    }
    if (scale == 0.0) return out;
    for (int k = 1; k <= max_order; ++k) {
        if (weighted[static_cast<size_t>(k)] > 1e-7 * scale) {
            out.L = k;
            out.alpha = std::arg(c[static_cast<size_t>(k)]);
            return out;
        }
    }
    return out;
}

/// Given the ray along which the level line enters a branch point (pointing
/// from the branch point toward the incoming curve), returns the outgoing ray:
/// the incoming ray is snapped to the nearest descending direction and the
/// curve leaves one branch step counterclockwise.
inline double branch_exit_ray(int L, double alpha, double incoming_ray) {
    double best = 0.0, best_dist = 1e9;
    for (int k = 0; k < 2 * L; ++k) {
        if (k % 2 == 0) continue;  // even rays carry F above the branch value
        double theta = (M_PI * k - alpha) / L;
        double dist = std::abs(angle_diff(theta, incoming_ray));
        if (dist < best_dist) {
            best_dist = dist;
            best = theta;
        }
    }
    return wrap_angle(best + M_PI / L);
}

struct ChartPole {
    Complex z;
    int order = 1;
    Complex lead;                 // lim (z - z0)^order F
    double seed_radius = 1e-3;
    double capture_radius = 1e-3;
    int endpoint_id = kEndpointInfinity;
    std::vector<double> out_rays;  // F -> -inf along these: curves start here
};

struct ChartNode {
    bool active = false;   // level line passes through the chart origin
    bool to_infinity = false;  // origin is the point at infinity (inverted chart)
    int L = 1;
    double alpha = 0.0;
    Complex value;
    double capture = 0.0;
};

struct Chart {
    Rat rat;
    std::vector<ChartPole> poles;
    std::vector<Junction> junctions;
    std::vector<double> junction_capture;
    ChartNode node;
};

/// Clusters a multiset of roots into (location, order) groups.
inline std::vector<std::pair<Complex, int>> cluster_points(const std::vector<Complex>& pts, double rel = 1e-6) {
    std::vector<std::pair<Complex, int>> out;
    for (const Complex& z : pts) {
        bool merged = false;
        for (auto& [c, k] : out) {
            if (std::abs(z - c) <= rel * (1.0 + std::abs(c))) {
                c = (c * static_cast<double>(k) + z) / static_cast<double>(k + 1);
                ++k;
                merged = true;
                break;
            }
        }
        if (!merged) out.emplace_back(z, 1);
    }
    return out;
}

}  // namespace detail

namespace detail {

inline std::vector<Junction> junctions_at_level(const Problem& prob, const Rat& rat,
                                                const std::vector<Complex>& crit, double level, double real_tol) {
    std::vector<Junction> out;
    for (const Complex& z0 : crit) {
        bool near_pole = false;
        double pole_gap = 1.0 + std::abs(z0);
        for (const Complex& pole : prob.poles()) {
            if (std::abs(z0 - pole) <= 1e-9 * (1.0 + std::abs(pole))) near_pole = true;
            pole_gap = std::min(pole_gap, std::abs(z0 - pole));
        }
        if (near_pole) continue;
        Complex value = rat.F(z0);
        if (!(std::abs(value.imag() - level) < real_tol * (1.0 + std::abs(value)))) continue;
        double radius = std::min(1e-3 * (1.0 + std::abs(z0)), 0.45 * pole_gap);
        BranchLocal local = branch_local(rat, z0, std::max(prob.d(), 2), radius);
        if (local.L < 2) continue;  // numerically non-critical after all
        Junction j;
        j.location = z0;
        j.multiplicity = local.L;
        j.alpha = local.alpha;
        j.value = value;
        for (int k = 0; k < 2 * local.L; ++k)
            j.branch_angles.push_back(wrap_angle((M_PI * k - local.alpha) / local.L));
        std::sort(j.branch_angles.begin(), j.branch_angles.end());
        out.push_back(std::move(j));
    }
    std::sort(out.begin(), out.end(), [](const Junction& a, const Junction& b) {
        if (a.location.real() != b.location.real()) return a.location.real() < b.location.real();
        return a.location.imag() < b.location.imag();
    });
    return out;
}

}  // namespace detail

/// Critical points of F = q/p whose critical value lies on the traced level
/// line Im F = Im(w)/2, together with their local branch structure.
inline std::vector<Junction> junctions(const Problem& prob, double real_tol = 1e-9) {
    const ComplexPoly& w = prob.f_prime_numerator();
    if (w.is_zero() || w.degree() < 1) return {};
    detail::Rat rat = detail::plane_rat(prob);
    return detail::junctions_at_level(prob, rat, roots(w), 0.5 * prob.w().imag(), real_tol);
}

namespace detail {

/// Everything the tracer needs, prepared once per problem.
struct TraceSetup {
    Chart plane;     // chart 0
    Chart inverted;  // chart 1, u = 1/z
    double r_max = 10.0;
    double level = 0.0;
    std::vector<std::pair<int, double>> seeds_plane;     // (pole idx in chart, ray angle)
    std::vector<std::pair<int, double>> seeds_inverted;
};

inline TraceSetup make_trace_setup(const Problem& prob, const TraceParams& params) {
    TraceSetup s;
    s.level = 0.5 * prob.w().imag() + params.level_offset;
    s.plane.rat = plane_rat(prob);
    s.inverted.rat = inverted_rat(prob);

    // radius beyond which there are no poles, critical points or zeros of F
    double biggest = 0.0;
    for (const Complex& z : prob.poles()) biggest = std::max(biggest, std::abs(z));
    const ComplexPoly& w = prob.f_prime_numerator();
    std::vector<Complex> crit;
    if (!w.is_zero() && w.degree() >= 1) crit = roots(w);
    for (const Complex& z : crit) biggest = std::max(biggest, std::abs(z));
    if (prob.n() >= 1)
        for (const Complex& z : roots(prob.q())) biggest = std::max(biggest, std::abs(z));
    for (const Complex& z : prob.h_critical_points()) biggest = std::max(biggest, std::abs(z));
    s.r_max = 10.0 * (1.0 + biggest);

    // finite poles, clustered into (location, order)
    auto clusters = cluster_points(prob.poles());
    std::vector<Complex> centers;
    for (const auto& [c, k] : clusters) centers.push_back(c);

    auto junction_list = junctions_at_level(prob, s.plane.rat, crit, s.level, params.junction_real_tol);
    // branch points at the origin are handled by the origin node, not as junctions
    std::erase_if(junction_list, [](const Junction& j) { return std::abs(j.location) < 1e-7; });

    // plane-chart origin node: the level line may run through z = 0
    bool origin_is_pole = false;
    for (const Complex& c : centers)
        if (std::abs(c) < 1e-9) origin_is_pole = true;
    s.plane.node.capture = 0.05;
    for (const Complex& c : centers) s.plane.node.capture = std::min(s.plane.node.capture, 0.5 * std::abs(c));
    if (!origin_is_pole) {
        BranchLocal local = branch_local(s.plane.rat, Complex(0.0), std::max(prob.d(), 2), s.plane.node.capture);
        if (local.L >= 1 &&
            std::abs(local.value.imag() - s.level) < params.junction_real_tol * (1.0 + std::abs(local.value))) {
            s.plane.node.active = true;
            s.plane.node.L = local.L;
            s.plane.node.alpha = local.alpha;
            s.plane.node.value = local.value;
        }
    }

    // isolation-based radii
    auto isolation = [&](Complex z, bool skip_self) {
        double iso = std::numeric_limits<double>::infinity();
        for (const Complex& c : centers) {
            double dd = std::abs(z - c);
            if (skip_self && dd < 1e-12 * (1.0 + std::abs(z))) continue;
            if (dd > 1e-12 * (1.0 + std::abs(z))) iso = std::min(iso, dd);
        }
        for (const auto& j : junction_list) {
            double dd = std::abs(z - j.location);
            if (dd > 1e-12 * (1.0 + std::abs(z))) iso = std::min(iso, dd);
        }
        if (std::abs(z) > 1e-12) iso = std::min(iso, std::abs(z));  // keep away from the origin node
        return std::min(iso, 1.0 + std::abs(z));
    };

    for (const auto& [c, k] : clusters) {
        ChartPole pole;
        pole.z = c;
        pole.order = k;
        auto pt = prob.p().taylor_at(c, k + 1);
        pole.lead = prob.q().eval(c) / pt[static_cast<size_t>(k)];
        double iso = isolation(c, true);
        pole.seed_radius = params.seed_radius_factor * iso;
        pole.capture_radius = 0.9 * pole.seed_radius;
        // endpoint id: nearest index in the sorted pole list
        pole.endpoint_id = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < prob.poles().size(); ++i) {
            double dd = std::abs(prob.poles()[i] - c);
            if (dd < best) {
                best = dd;
                pole.endpoint_id = static_cast<int>(i);
            }
        }
        // rays where F -> -inf: arg(lead) - k*theta = pi (mod 2pi)
        double base = std::arg(pole.lead);
        for (int j = 0; j < k; ++j) pole.out_rays.push_back(wrap_angle((base - M_PI + 2.0 * M_PI * j) / k));
        std::sort(pole.out_rays.begin(), pole.out_rays.end());
        s.plane.poles.push_back(std::move(pole));
    }

    for (const auto& j : junction_list) {
        double iso = std::numeric_limits<double>::infinity();
        for (const auto& other : junction_list) {
            double dd = std::abs(j.location - other.location);
            if (dd > 1e-12 * (1.0 + std::abs(j.location))) iso = std::min(iso, dd);
        }
        for (const Complex& c : centers) iso = std::min(iso, std::abs(j.location - c));
        if (std::abs(j.location) > 1e-12) iso = std::min(iso, std::abs(j.location));
        iso = std::min(iso, 1.0 + std::abs(j.location));
        s.plane.junctions.push_back(j);
        s.plane.junction_capture.push_back(
            std::max(std::min(0.2 * iso, 1e-3 * (1.0 + std::abs(j.location))), 1e-9 * (1.0 + std::abs(j.location))));
    }

    // inverted chart: pole at u = 0 when n > m, otherwise a node at infinity
    if (prob.n() > prob.m()) {
        ChartPole pole;
        pole.z = Complex(0.0);
        pole.order = prob.n() - prob.m();
        pole.lead = prob.q().leading() / prob.p().leading();
        pole.seed_radius = params.seed_radius_factor / s.r_max;
        pole.capture_radius = 0.9 * pole.seed_radius;
        pole.endpoint_id = kEndpointInfinity;
        double base = std::arg(pole.lead);
        for (int j = 0; j < pole.order; ++j)
            pole.out_rays.push_back(wrap_angle((base - M_PI + 2.0 * M_PI * j) / pole.order));
        std::sort(pole.out_rays.begin(), pole.out_rays.end());
        s.inverted.poles.push_back(std::move(pole));
    } else {
        s.inverted.node.capture = 0.1 / s.r_max;
        BranchLocal local =
            branch_local(s.inverted.rat, Complex(0.0), std::max(prob.d(), 2), s.inverted.node.capture);
        if (local.L >= 1 &&
            std::abs(local.value.imag() - s.level) < params.junction_real_tol * (1.0 + std::abs(local.value))) {
            s.inverted.node.active = true;
            s.inverted.node.to_infinity = true;
            s.inverted.node.L = local.L;
            s.inverted.node.alpha = local.alpha;
            s.inverted.node.value = local.value;
        }
    }

    // seed bookkeeping, canonically ordered
    for (size_t pi = 0; pi < s.plane.poles.size(); ++pi)
        for (double ray : s.plane.poles[pi].out_rays) s.seeds_plane.emplace_back(static_cast<int>(pi), ray);
    for (size_t pi = 0; pi < s.inverted.poles.size(); ++pi)
        for (double ray : s.inverted.poles[pi].out_rays) s.seeds_inverted.emplace_back(static_cast<int>(pi), ray);
    std::sort(s.seeds_plane.begin(), s.seeds_plane.end(), [&](const auto& a, const auto& b) {
        int ea = s.plane.poles[static_cast<size_t>(a.first)].endpoint_id;
        int eb = s.plane.poles[static_cast<size_t>(b.first)].endpoint_id;
        if (ea != eb) return ea < eb;
        return a.second < b.second;
    });
    std::sort(s.seeds_inverted.begin(), s.seeds_inverted.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    return s;
}

/// Traces one curve from a pole seed until it reaches a pole again.
class CurveTracer {
public:
    CurveTracer(const Problem& prob, const TraceParams& params, const TraceSetup& setup)
        : prob_(prob), params_(params), setup_(setup) {}

    Curve trace_from(int chart_id, int pole_idx, double ray) {
        const Chart* ch = chart(chart_id);
        const ChartPole& pole = ch->poles[static_cast<size_t>(pole_idx)];

        Curve curve;
        curve.endpoint_start = pole.endpoint_id;
        chart_id_ = chart_id;

        Complex z = pole.z + pole.seed_radius * std::polar(1.0, ray);
        if (!level_correct(ch->rat, z, setup_.level)) {
            curve.complete = false;
            return curve;
        }
        // walk down the funnel first: G still changes sign between the seed
        // ring and the pole whenever log|pole| outweighs F at the ring
        double f_ring = std::abs(ch->rat.F(z));
        for (int k = 0; k < 800; ++k) {
            if (curve_g(z) < -params_.g_safe && std::abs(ch->rat.F(z)) > 10.0 * (1.0 + f_ring)) break;
            Complex deeper = pole.z + 0.5 * (z - pole.z);
            if (std::abs(deeper - pole.z) < 1e-13 * (1.0 + std::abs(pole.z))) break;
            if (!level_correct(ch->rat, deeper, setup_.level)) break;
            z = deeper;
        }
        record(curve, z);
        prev_dir_ = level_tangent(ch->rat, z);
        h_ = 0.05 * std::abs(z - pole.z);

        int rejects = 0;
        for (int step = 0; step < params_.max_steps; ++step) {
            ch = chart(chart_id_);
            Complex fv = ch->rat.F(z);

            // arrival at a pole (other than straight back out of the seed ring);
            // sample on down the funnel until G is safely past any crossing
            for (const auto& p : ch->poles) {
                double dist = std::abs(z - p.z);
                if (dist >= p.capture_radius) continue;
                Complex toward = p.z - z;
                if (toward.real() * prev_dir_.real() + toward.imag() * prev_dir_.imag() <= 0.0) continue;
                double f_here = std::abs(ch->rat.F(z));
                for (int k = 0; k < 800; ++k) {
                    if (curve_g(z) > params_.g_safe && std::abs(ch->rat.F(z)) > 10.0 * (1.0 + f_here)) break;
                    Complex deeper = p.z + 0.5 * (z - p.z);
                    if (std::abs(deeper - p.z) < 1e-13 * (1.0 + std::abs(p.z))) break;
                    if (!level_correct(ch->rat, deeper, setup_.level)) break;
                    z = deeper;
                    record(curve, z);
                }
                curve.endpoint_end = p.endpoint_id;
                return curve;
            }

            // junction passage
            bool branched = false;
            for (size_t ji = 0; ji < ch->junctions.size(); ++ji) {
                const Junction& jn = ch->junctions[ji];
                double dist = std::abs(z - jn.location);
                if (dist < ch->junction_capture[ji] && fv.real() < jn.value.real()) {
                    pass_junction(curve, z, jn);
                    branched = true;
                    break;
                }
            }
            if (branched) {
                rejects = 0;
                continue;
            }

            // node passage through the chart origin (z = 0 or the point at infinity).
            // G runs to -inf at z = 0 and +inf at infinity. The branch rule may
            // take over once no crossing can hide on the rest of the approach:
            //  - toward infinity both Re F and -log|u| increase, so G is monotone
            //    once it is past +g_safe;
            //  - toward 0, Re F stays below the node value, so G <= value + log|z|
            //    bounds the whole remaining tail;
            //  - a node value beyond +-709 pushes the residual crossing pair below
            //    the double-precision range altogether (|z| ~ exp(-|value|)).
            if (ch->node.active && std::abs(z) < ch->node.capture && fv.real() < ch->node.value.real()) {
                double g_here = curve_g(z);
                bool safe;
                if (ch->node.to_infinity)
                    safe = g_here > params_.g_safe || fv.real() < -709.0 - params_.g_safe;
                else
                    safe = (g_here < -params_.g_safe &&
                            ch->node.value.real() + std::log(std::abs(z)) < -params_.g_safe) ||
                           fv.real() > 709.0 + params_.g_safe;
                if (safe) {
                    pass_node(curve, z, ch->node);
                    rejects = 0;
                    continue;
                }
            }

            // chart switching with hysteresis
            if (chart_id_ == 0 && std::abs(z) > setup_.r_max) {
                Complex zp = z;
                z = 1.0 / z;
                prev_dir_ = switch_direction(prev_dir_, zp);
                chart_id_ = 1;
                h_ = h_ / std::norm(zp);
                continue;
            }
            if (chart_id_ == 1 && std::abs(z) > 1.2 / setup_.r_max) {
                Complex up = z;
                z = 1.0 / z;
                prev_dir_ = switch_direction(prev_dir_, up);
                chart_id_ = 0;
                h_ = h_ / std::norm(up);
                continue;
            }

            // predictor-corrector step
            double scale = local_scale(*ch, z);
            double h_min = params_.h_min_rel * scale;
            double h_max = params_.h_max_rel * scale;
            h_ = std::clamp(h_, h_min, h_max);
            for (size_t ji = 0; ji < ch->junctions.size(); ++ji) {
                double dist = std::abs(z - ch->junctions[ji].location);
                if (dist < 10.0 * h_) h_ = std::max(std::min(h_, dist / 5.0), h_min);
            }

            Complex t = level_tangent(ch->rat, z);
            Complex z_new = z + h_ * t;
            bool ok = level_correct(ch->rat, z_new, setup_.level, 2);
            if (ok) {
                Complex fnew = ch->rat.F(z_new);
                double turn = std::abs(angle_diff(std::arg(z_new - z), std::arg(prev_dir_)));
                Complex t_new = level_tangent(ch->rat, z_new);
                // the tangent continuity check catches jumps onto the opposite
                // strand of a narrow passage, which flip the oriented field while
                // leaving the position step looking innocent.
                // F ties are tolerated: near branch points the increment of Re F
                // drops below double precision while the curve still advances
                ok = std::isfinite(fnew.real()) && std::isfinite(fnew.imag()) &&
                     std::abs(fnew.imag() - setup_.level) <= params_.trace_tol * (1.0 + std::abs(fnew)) &&
                     std::abs(z_new - z - h_ * t) <= 0.25 * h_ && turn <= params_.max_turn &&
                     t_new.real() * t.real() + t_new.imag() * t.imag() >= std::cos(params_.max_turn) &&
                     fnew.real() >= fv.real();
            }
            if (!ok) {
                if (h_ <= h_min * 1.0000001 && ++rejects > 60) {
                    curve.complete = false;
                    return curve;
                }
                h_ = std::max(0.5 * h_, h_min);
                continue;
            }
            rejects = 0;
            prev_dir_ = (z_new - z) / std::abs(z_new - z);
            z = z_new;
            record(curve, z);
            h_ = std::min(1.4 * h_, h_max);
        }
        curve.complete = false;
        return curve;
    }

private:
    const Chart* chart(int id) const { return id == 0 ? &setup_.plane : &setup_.inverted; }

    Complex to_plane(Complex z) const {
        if (chart_id_ == 0) return z;
        if (std::abs(z) == 0.0) return infinity_marker();
        return 1.0 / z;
    }

    double curve_g(Complex z_chart) const {
        const Chart* ch = chart(chart_id_);
        double f_re = ch->rat.F(z_chart).real();
        Complex zp = to_plane(z_chart);
        return f_re + std::log(std::abs(zp)) - 0.5 * prob_.w().real();
    }

    static Complex switch_direction(Complex dir, Complex at) {
        // d(1/z) = -dz / z^2
        Complex mapped = -dir / (at * at);
        double a = std::abs(mapped);
        return (a > 0.0 && std::isfinite(a)) ? mapped / a : dir;
    }

    double local_scale(const Chart& ch, Complex z) const {
        double s = 1.0 + std::abs(z);
        for (const auto& p : ch.poles) s = std::min(s, 2.0 * std::abs(z - p.z));
        s = std::min(s, std::max(2.0 * std::abs(z), 1e-12));
        return std::max(s, 1e-300);
    }

    void record(Curve& curve, Complex z_chart) {
        const Chart* ch = chart(chart_id_);
        double f_re = ch->rat.F(z_chart).real();
        record_plane(curve, to_plane(z_chart), f_re);
    }

    void record_plane(Curve& curve, Complex z_plane, double f_re) {
        if (!curve.f_values.empty() && f_re < curve.f_values.back()) return;
        curve.samples.push_back(z_plane);
        curve.f_values.push_back(f_re);
    }

    void pass_junction(Curve& curve, Complex& z, const Junction& jn) {
        double rho = std::abs(z - jn.location);
        double incoming = std::arg(z - jn.location);
        double out = branch_exit_ray(jn.multiplicity, jn.alpha, incoming);
        record_plane(curve, jn.location, jn.value.real());
        Complex exit = jn.location + rho * std::polar(1.0, out);
        const Chart* ch = chart(chart_id_);
        level_correct(ch->rat, exit, setup_.level);
        z = exit;
        prev_dir_ = std::polar(1.0, out);
        h_ = 0.3 * rho;
        record(curve, z);
    }

    void pass_node(Curve& curve, Complex& z, const ChartNode& node) {
        double rho = std::abs(z);
        double incoming = std::arg(z);
        double out = branch_exit_ray(node.L, node.alpha, incoming);
        if (node.to_infinity) {
            curve.passes_infinity = true;
            record_plane(curve, infinity_marker(), node.value.real());
        }
        Complex exit = rho * std::polar(1.0, out);
        const Chart* ch = chart(chart_id_);
        level_correct(ch->rat, exit, setup_.level);
        z = exit;
        prev_dir_ = std::polar(1.0, out);
        h_ = 0.3 * rho;
        record(curve, z);
    }

    const Problem& prob_;
    const TraceParams& params_;
    const TraceSetup& setup_;
    int chart_id_ = 0;
    Complex prev_dir_{1.0, 0.0};
    double h_ = 1e-3;
};

}  // namespace detail

/// Traces the complete level set {Im F = Im(w)/2}: one curve per descending
/// pole ray, d curves in total, each running from a pole of F to a pole of F
/// with Re F strictly increasing. Stalled traces come back flagged incomplete.
inline std::vector<Curve> trace(const Problem& prob, const TraceParams& params = {}) {
    detail::TraceSetup setup = detail::make_trace_setup(prob, params);
    detail::CurveTracer tracer(prob, params, setup);
    std::vector<Curve> out;
    for (const auto& [pole_idx, ray] : setup.seeds_plane) out.push_back(tracer.trace_from(0, pole_idx, ray));
    for (const auto& [pole_idx, ray] : setup.seeds_inverted) out.push_back(tracer.trace_from(1, pole_idx, ray));
    return out;
}

/// Crossing data of G = Re F + log|z| - Re(w)/2 along the traced curves.
struct CertPoint {
    Complex z;
    int curve_index = 0;
    double g_abs = 0.0;  ///< |g(z) - w| after refinement
};

struct Certificate {
    std::vector<CertPoint> points;   ///< sign changes - to +, deduplicated: the lower-bound witnesses
    std::vector<CertPoint> falling;  ///< sign changes + to -
    std::vector<Complex> minima;     ///< samples at local minima of |G|, extra solver seeds
};

struct CertParams {
    double cert_tol = 1e-9;
    double merge_radius_rel = 1e-6;
    int max_bisections = 120;
};

namespace detail {

inline double curve_G(const Problem& prob, Complex z_plane, double f_re) {
    return f_re + std::log(std::abs(z_plane)) - 0.5 * prob.w().real();
}

/// A couple of damped Wirtinger-Newton steps to squeeze the residual of g.
inline Complex polish_on_g(const Problem& prob, Complex z, double tol, int iters) {
    for (int i = 0; i < iters; ++i) {
        Jet jet;
        try {
            jet = prob.jet_g(z);
        } catch (const AtSingularityError&) {
            return z;
        }
        double res = std::abs(jet.value);
        if (res < tol) return z;
        double s = std::max(std::abs(jet.dz), std::abs(jet.dzbar));
        if (!(s > 0.0) || !std::isfinite(s)) return z;
        Complex a = jet.dz / s, b = jet.dzbar / s;
        double det = std::norm(a) - std::norm(b);
        if (std::abs(det) < 1e-14) return z;
        Complex delta = (b * std::conj(jet.value) - std::conj(a) * jet.value) / (det * s);
        if (std::abs(delta) > 0.1 * (1.0 + std::abs(z))) return z;
        for (int halving = 0; halving < 8; ++halving) {
            try {
                if (std::abs(prob.eval_g(z + delta) - prob.w()) <= res) break;
            } catch (const AtSingularityError&) {
            }
            delta *= 0.5;
        }
        z += delta;
    }
    return z;
}

/// Refines a bracketed sign change of G between two adjacent on-curve samples.
inline CertPoint refine_crossing(const Problem& prob, const Rat& plane, const Rat& inverted, double level,
                                 double r_chart, Complex za, Complex zb, double ga, double gb, int curve_index,
                                 const CertParams& params) {
    bool use_inverted = std::min(std::abs(za), std::abs(zb)) > r_chart;
    const Rat& rat = use_inverted ? inverted : plane;
    Complex a = use_inverted ? 1.0 / za : za;
    Complex b = use_inverted ? 1.0 / zb : zb;

    auto g_of = [&](Complex zc) {
        Complex zp = use_inverted ? 1.0 / zc : zc;
        return curve_G(prob, zp, rat.F(zc).real());
    };

    Complex best = (std::abs(ga) < std::abs(gb)) ? a : b;
    double best_g = std::min(std::abs(ga), std::abs(gb));
    for (int i = 0; i < params.max_bisections; ++i) {
        Complex mid = 0.5 * (a + b);
        if (!level_correct(rat, mid, level)) break;
        double gm = g_of(mid);
        if (!std::isfinite(gm)) break;
        if (std::abs(gm) < best_g) {
            best_g = std::abs(gm);
            best = mid;
        }
        if (best_g < params.cert_tol) break;
        if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
            gb = gm;
        }
        if (std::abs(a - b) < 1e-15 * (1.0 + std::abs(a))) break;
    }

    CertPoint pt;
    pt.z = use_inverted ? 1.0 / best : best;
    pt.z = polish_on_g(prob, pt.z, 0.25 * params.cert_tol, 4);
    try {
        pt.g_abs = std::abs(prob.eval_g(pt.z) - prob.w());
    } catch (const AtSingularityError&) {
        pt.g_abs = std::numeric_limits<double>::infinity();
    }
    pt.curve_index = curve_index;
    return pt;
}

inline void dedupe_cert(std::vector<CertPoint>& pts, double merge_rel) {
    std::sort(pts.begin(), pts.end(), [](const CertPoint& x, const CertPoint& y) {
        if (x.z.real() != y.z.real()) return x.z.real() < y.z.real();
        return x.z.imag() < y.z.imag();
    });
    std::vector<CertPoint> out;
    for (const CertPoint& p : pts) {
        bool merged = false;
        for (CertPoint& q : out) {
            double scale = std::min(1.0 + std::abs(q.z), 2.0 * std::abs(q.z));
            if (std::abs(p.z - q.z) <= merge_rel * scale) {
                if (p.g_abs < q.g_abs) q = p;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(p);
    }
    pts = std::move(out);
}

}  // namespace detail

namespace detail {

inline Certificate build_certificate(const Problem& prob, const std::vector<Curve>& curves,
                                     const CertParams& params) {
    Certificate cert;
    detail::Rat plane = detail::plane_rat(prob);
    detail::Rat inverted = detail::inverted_rat(prob);
    const double level = 0.5 * prob.w().imag();

    // the inverted chart is only used beyond all poles and critical points
    double r_chart = 10.0;
    for (const Complex& z : prob.poles()) r_chart = std::max(r_chart, 10.0 * std::abs(z));
    const ComplexPoly& wn = prob.f_prime_numerator();
    if (!wn.is_zero() && wn.degree() >= 1)
        for (const Complex& z : roots(wn)) r_chart = std::max(r_chart, 10.0 * std::abs(z));

    for (size_t ci = 0; ci < curves.size(); ++ci) {
        const Curve& curve = curves[ci];
        std::vector<double> G(curve.samples.size());
        for (size_t i = 0; i < curve.samples.size(); ++i)
            G[i] = detail::curve_G(prob, curve.samples[i], curve.f_values[i]);

        for (size_t i = 1; i < curve.samples.size(); ++i) {
            if (is_infinity_marker(curve.samples[i - 1]) || is_infinity_marker(curve.samples[i])) continue;
            double ga = G[i - 1], gb = G[i];
            if (!std::isfinite(ga) || !std::isfinite(gb)) continue;
            bool rising = ga <= 0.0 && gb > 0.0;
            bool falling = ga >= 0.0 && gb < 0.0;
            if (!rising && !falling) continue;
            CertPoint pt = detail::refine_crossing(prob, plane, inverted, level, r_chart, curve.samples[i - 1],
                                                   curve.samples[i], ga, gb, static_cast<int>(ci), params);
            if (!std::isfinite(pt.g_abs)) continue;
            (rising ? cert.points : cert.falling).push_back(pt);
        }

        for (size_t i = 1; i + 1 < curve.samples.size(); ++i) {
            if (is_infinity_marker(curve.samples[i])) continue;
            if (!std::isfinite(G[i])) continue;
            double left = std::isfinite(G[i - 1]) ? std::abs(G[i - 1]) : std::numeric_limits<double>::infinity();
            double right = std::isfinite(G[i + 1]) ? std::abs(G[i + 1]) : std::numeric_limits<double>::infinity();
            if (std::abs(G[i]) < left && std::abs(G[i]) < right && (G[i - 1] < 0.0) == (G[i + 1] < 0.0))
                cert.minima.push_back(curve.samples[i]);
        }
    }

    dedupe_cert(cert.points, params.merge_radius_rel);
    dedupe_cert(cert.falling, params.merge_radius_rel);
    return cert;
}

}  // namespace detail

/// Walks every curve, locates all sign changes of G = Re F + log|z| - Re(w)/2,
/// refines them by bisection in the curve parameter, and returns the rising
/// (- to +) crossings as the lower-bound certificate. At least d distinct
/// rising crossings must exist; fewer signals a tracing failure.
inline Certificate certificate(const Problem& prob, const std::vector<Curve>& curves, const CertParams& params = {}) {
    Certificate cert = detail::build_certificate(prob, curves, params);
    if (static_cast<int>(cert.points.size()) < prob.d())
        throw CertificateShortError("fewer distinct rising crossings than the degree guarantees");
    return cert;
}

/// CSV export of the traced curves; infinity markers are skipped.
inline void write_curves_csv(std::ostream& os, const std::vector<Curve>& curves) {
    os << "curve_id,t_index,re,im,F_value\n";
    for (size_t ci = 0; ci < curves.size(); ++ci) {
        int t = 0;
        for (size_t i = 0; i < curves[ci].samples.size(); ++i) {
            Complex z = curves[ci].samples[i];
            if (is_infinity_marker(z)) continue;
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%zu,%d,%.17g,%.17g,%.17g\n", ci, t, z.real(), z.imag(),
                          curves[ci].f_values[i]);
            os << buf;
            ++t;
        }
    }
}

}  // namespace logroot
