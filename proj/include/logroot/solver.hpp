#pragma once

#include <logroot/curves.hpp>
#include <logroot/dynamics.hpp>
#include <logroot/parallel.hpp>
#include <logroot/problem.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace logroot {

struct NewtonDivergedError : std::runtime_error {
    NewtonDivergedError() : std::runtime_error("planar Newton iteration diverged") {}
};

struct ContourTooCloseError : std::runtime_error {
    ContourTooCloseError() : std::runtime_error("contour passes too close to a zero of g - w") {}
};

struct ArgJumpError : std::runtime_error {
    ArgJumpError() : std::runtime_error("argument tracking failed to resolve the winding number") {}
};

enum class SeedKind { CurveRising, CurveFalling, CurveMinimum, Grid };

inline const char* to_string(SeedKind k) {
    switch (k) {
        case SeedKind::CurveRising: return "rising";
        case SeedKind::CurveFalling: return "falling";
        case SeedKind::CurveMinimum: return "minimum";
        default: return "grid";
    }
}

struct Solution {
    Complex z;
    double residual = 0.0;  ///< |g(z) - w|
    Orientation orientation = Orientation::Degenerate;
    SeedKind source = SeedKind::Grid;
    int curve_index = -1;   ///< -1 for grid seeds
    int newton_iters = 0;
};

struct BoundsOk {
    bool lower = false;  ///< N >= max{m, n}
    bool upper = false;  ///< N <= 3d + 2m
};

struct PerturbedCounts {
    Complex w;
    int N = 0, N_plus = 0, N_minus = 0, N_degenerate = 0;
};

struct SolveReport {
    std::vector<Solution> solutions;
    int N = 0, N_plus = 0, N_minus = 0, N_degenerate = 0;
    int d = 0, m = 0, n = 0;
    int degree_winding = 0;          ///< large-contour winding, must equal d
    BoundsOk bounds_ok;
    int certificate_count = 0;
    std::vector<Complex> certificate_points;
    std::optional<DynamicsCheck> dynamics;
    std::optional<PerturbedCounts> perturbed;  ///< rerun at w + i*eps when degenerates appear
    bool winding_global_ok = false;
    bool winding_local_ok = false;
    bool degree_identity_ok = false;  ///< N+ - N- = d (vacuous when degenerates appear)
    bool certificate_ok = false;
    bool consistent = false;
    int escalations = 0;
    std::string completeness;  ///< "curve-complete" for real w, "heuristic-complete" otherwise
    std::string status;        ///< "ok" or "inconsistent"
};

struct SolveParams {
    double solve_tol = 1e-10;        ///< absolute tolerance on |g - w|
    double merge_radius_rel = 1e-6;
    int newton_max_iters = 50;
    int newton_max_halvings = 20;
    double degenerate_tol = 1e-8;
    int escalation_cap = 3;
    bool enable_grid_fallback = true;
    bool run_certificate = true;
    bool run_dynamics = true;
    int threads = 1;
    TraceParams trace;
    CertParams cert;
    DynamicsParams dynamics;
    double seed_jitter_rel = 0.0;    ///< test hook: random relative offset applied to every seed
    uint64_t jitter_seed = 1;
    bool allow_perturbed_rerun = true;
};

namespace detail {

struct NewtonOutcome {
    Complex z;
    double residual = std::numeric_limits<double>::infinity();
    int iters = 0;
    bool ok = false;
};

inline NewtonOutcome newton_refine(const Problem& prob, Complex z0, double tol, int max_iters, int max_halvings) {
    NewtonOutcome out;
    Complex z = z0;
    for (int it = 0; it < max_iters; ++it) {
        Jet jet;
        try {
            jet = prob.jet_g(z);
        } catch (const AtSingularityError&) {
            return out;
        }
        double res = std::abs(jet.value);
        if (!std::isfinite(res)) return out;
        out.z = z;
        out.residual = res;
        out.iters = it;
        if (res < tol) {
            out.ok = true;
            return out;
        }
        // solve dz * delta + dzbar * conj(delta) = -value, scaled against overflow
        double s = std::max(std::abs(jet.dz), std::abs(jet.dzbar));
        if (!(s > 0.0) || !std::isfinite(s)) return out;
        Complex a = jet.dz / s, b = jet.dzbar / s;
        double det = std::norm(a) - std::norm(b);
        Complex delta;
        if (std::abs(det) > 1e-14) {
            delta = (b * std::conj(jet.value) - std::conj(a) * jet.value) / (det * s);
        } else {
            delta = -jet.value / jet.dz;  // antiholomorphic part degenerate, fall back
        }
        double cap = 0.5 * (1.0 + std::abs(z));
        if (std::abs(delta) > cap) delta *= cap / std::abs(delta);

        bool stepped = false;
        for (int halving = 0; halving <= max_halvings; ++halving) {
            Complex cand = z + delta;
            try {
                if (std::abs(prob.eval_g(cand) - prob.w()) < res) {
                    z = cand;
                    stepped = true;
                    break;
                }
            } catch (const AtSingularityError&) {
            }
            delta *= 0.5;
        }
        if (!stepped) return out;
    }
    return out;
}

}  // namespace detail

/// Polishes a root of g(z) = w with a damped planar Newton iteration on the
/// Wirtinger jet. Throws when the iteration leaves the admissible region or
/// fails to reach the tolerance.
inline Solution refine_newton(const Problem& prob, Complex z0, double tol = 1e-10, int max_iters = 50) {
    if (prob.at_singularity(z0)) throw AtSingularityError();
    detail::NewtonOutcome out = detail::newton_refine(prob, z0, tol, max_iters, 20);
    if (!out.ok) throw NewtonDivergedError();
    Solution sol;
    sol.z = out.z;
    sol.residual = out.residual;
    sol.orientation = prob.orientation(out.z);
    sol.newton_iters = out.iters;
    return sol;
}

/// Closed circular contour, counterclockwise.
inline std::vector<Complex> circle_contour(Complex center, double radius, int points = 256) {
    std::vector<Complex> out;
    out.reserve(static_cast<size_t>(points));
    for (int k = 0; k < points; ++k)
        out.push_back(center + radius * std::polar(1.0, 2.0 * M_PI * k / points));
    return out;
}

/// Winding number of g - w along a closed polyline, by continuous argument
/// tracking with adaptive chord subdivision. The result is certified to sit
/// within a quarter turn of an integer.
inline int winding_number(const Problem& prob, const std::vector<Complex>& contour, double margin = 1e-9,
                          int max_depth = 24) {
    if (contour.size() < 3) throw ArgJumpError();
    auto value = [&](Complex z) {
        try {
            return prob.eval_g(z) - prob.w();
        } catch (const AtSingularityError&) {
            throw ContourTooCloseError();
        }
    };

    std::vector<Complex> vals(contour.size());
    for (size_t i = 0; i < contour.size(); ++i) {
        vals[i] = value(contour[i]);
        if (!(std::abs(vals[i]) > margin)) throw ContourTooCloseError();
    }

    long double total = 0.0L;
    for (size_t i = 0; i < contour.size(); ++i) {
        size_t j = (i + 1) % contour.size();
        // subdivide the chord until each argument step is below pi/2
        struct Piece {
            Complex za, zb, sa, sb;
            int depth;
        };
        std::vector<Piece> stack{{contour[i], contour[j], vals[i], vals[j], 0}};
        while (!stack.empty()) {
            Piece piece = stack.back();
            stack.pop_back();
            double phi = std::arg(piece.sb / piece.sa);
            if (std::abs(phi) <= M_PI / 2.0) {
                total += phi;
                continue;
            }
            if (piece.depth >= max_depth) throw ArgJumpError();
            Complex mid = 0.5 * (piece.za + piece.zb);
            Complex sm = value(mid);
            if (!(std::abs(sm) > margin)) throw ContourTooCloseError();
            stack.push_back({mid, piece.zb, sm, piece.sb, piece.depth + 1});
            stack.push_back({piece.za, mid, piece.sa, sm, piece.depth + 1});
        }
    }
    double turns = static_cast<double>(total / (2.0L * M_PI));
    double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 0.25) throw ArgJumpError();
    return static_cast<int>(rounded);
}

namespace detail {

/// Structural radius: everything interesting sits well inside it.
inline double structure_radius(const Problem& prob) {
    double biggest = 0.0;
    for (const Complex& z : prob.poles()) biggest = std::max(biggest, std::abs(z));
    const ComplexPoly& w = prob.f_prime_numerator();
    if (!w.is_zero() && w.degree() >= 1)
        for (const Complex& z : roots(w)) biggest = std::max(biggest, std::abs(z));
    if (prob.n() >= 1)
        for (const Complex& z : roots(prob.q())) biggest = std::max(biggest, std::abs(z));
    for (const Complex& z : prob.h_critical_points()) biggest = std::max(biggest, std::abs(z));
    return 10.0 * (1.0 + biggest);
}

/// Winding of g - w summed over the boundary of {|z| < R} minus pole disks.
/// Equals N+ - N- over the enclosed solutions.
inline std::optional<int> degree_winding_at(const Problem& prob, double radius,
                                            const std::vector<std::pair<Complex, double>>& pole_disks) {
    try {
        int total = winding_number(prob, circle_contour(Complex(0.0), radius, 512), 1e-12);
        for (const auto& [center, r] : pole_disks)
            total -= winding_number(prob, circle_contour(center, r, 256), 1e-12);
        return total;
    } catch (const std::runtime_error&) {
        return std::nullopt;
    }
}

struct SeedPoint {
    Complex z;
    SeedKind kind;
    int curve_index;
};

/// Sign-quadrant scan of g - w over a square grid: cells where both the real
/// and the imaginary part change sign become fallback seeds.
inline std::vector<SeedPoint> grid_seeds(const Problem& prob, double box_radius, int resolution) {
    std::vector<SeedPoint> out;
    const double step = 2.0 * box_radius / resolution;

    auto eval_at = [&](int i, int j, Complex& val) {
        Complex z(-box_radius + i * step, -box_radius + j * step);
        if (prob.at_singularity(z)) return false;
        Complex g = prob.eval_g(z) - prob.w();
        if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) return false;
        val = g;
        return true;
    };

    std::vector<Complex> prev(static_cast<size_t>(resolution) + 1), row(prev);
    std::vector<char> prev_ok(static_cast<size_t>(resolution) + 1, 0), row_ok(prev_ok);

    for (int j = 0; j <= resolution; ++j) {
        for (int i = 0; i <= resolution; ++i) {
            Complex v;
            row_ok[static_cast<size_t>(i)] = eval_at(i, j, v) ? 1 : 0;
            row[static_cast<size_t>(i)] = v;
        }
        if (j > 0) {
            for (int i = 0; i < resolution; ++i) {
                size_t a = static_cast<size_t>(i);
                if (!(prev_ok[a] && prev_ok[a + 1] && row_ok[a] && row_ok[a + 1])) continue;
                const Complex c[4] = {prev[a], prev[a + 1], row[a], row[a + 1]};
                bool re_pos = false, re_neg = false, im_pos = false, im_neg = false;
                for (const Complex& v : c) {
                    (v.real() >= 0.0 ? re_pos : re_neg) = true;
                    (v.imag() >= 0.0 ? im_pos : im_neg) = true;
                }
                if (re_pos && re_neg && im_pos && im_neg) {
                    Complex center(-box_radius + (i + 0.5) * step, -box_radius + (j - 0.5) * step);
                    out.push_back({center, SeedKind::Grid, -1});
                }
            }
        }
        std::swap(prev, row);
        std::swap(prev_ok, row_ok);
    }
    return out;
}

inline void dedupe_solutions(std::vector<Solution>& sols, double merge_rel) {
    std::sort(sols.begin(), sols.end(), [](const Solution& a, const Solution& b) {
        if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
        if (a.z.imag() != b.z.imag()) return a.z.imag() < b.z.imag();
        return a.residual < b.residual;
    });
    std::vector<Solution> out;
    for (const Solution& s : sols) {
        bool merged = false;
        for (Solution& kept : out) {
            // the radius contracts with |z| near the origin: twin roots sit at
            // +-exp(-F(0)) there and must not collapse into one
            double scale = std::min(1.0 + std::abs(kept.z), 2.0 * std::abs(kept.z));
            if (std::abs(s.z - kept.z) <= merge_rel * scale) {
                if (s.residual < kept.residual) kept = s;
                merged = true;
                break;
            }
        }
        if (!merged) out.push_back(s);
    }
    std::sort(out.begin(), out.end(), [](const Solution& a, const Solution& b) {
        if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
        return a.z.imag() < b.z.imag();
    });
    sols = std::move(out);
}

}  // namespace detail

/// Finds all solutions of g(z) = w.
///
/// Seeds come from the sign changes of G along the traced level curves (a
/// complete seed set since Im g = 2 Im F), get polished by planar Newton,
/// deduplicated and classified. The counts are then verified against the
/// topological degree: the large-contour winding must equal d, every
/// nondegenerate solution must carry local winding +-1, and N+ - N- = d.
/// On a failed check the tracing is refined and a grid scan joins the seeds,
/// up to the escalation cap. Reports are deterministic for any thread count.
inline SolveReport solve(const Problem& prob, const SolveParams& params = {}) {
    SolveReport report;
    report.d = prob.d();
    report.m = prob.m();
    report.n = prob.n();
    report.completeness = std::abs(prob.w().imag()) > 0.0 ? "heuristic-complete" : "curve-complete";

    const double r_structure = detail::structure_radius(prob);
    auto pole_clusters = detail::cluster_points(prob.poles());

    for (int round = 0; round <= params.escalation_cap; ++round) {
        report.escalations = round;

        TraceParams tp = params.trace;
        tp.trace_tol = params.trace.trace_tol * std::pow(0.5, round);
        if (round >= 2) tp.level_offset = (round % 2 == 0 ? 1.0 : -1.0) * 1e-6;

        std::vector<Curve> curves = trace(prob, tp);
        bool all_complete = true;
        for (const Curve& c : curves) all_complete = all_complete && c.complete;

        Certificate cert = detail::build_certificate(prob, curves, params.cert);
        bool cert_short = static_cast<int>(cert.points.size()) < prob.d();

        std::vector<detail::SeedPoint> seeds;
        for (const CertPoint& p : cert.points) seeds.push_back({p.z, SeedKind::CurveRising, p.curve_index});
        for (const CertPoint& p : cert.falling) seeds.push_back({p.z, SeedKind::CurveFalling, p.curve_index});
        for (const Complex& z : cert.minima) seeds.push_back({z, SeedKind::CurveMinimum, -1});

        bool want_grid = params.enable_grid_fallback &&
                         (round >= 1 || !all_complete || std::abs(prob.w().imag()) > 0.0);
        if (want_grid) {
            int res = std::min(1024, 64 << (2 * std::max(0, round - 1)));
            double box = std::min(r_structure, 1e4);
            for (const auto& s : detail::grid_seeds(prob, box, res)) seeds.push_back(s);
        }

        if (params.seed_jitter_rel > 0.0) {
            std::mt19937_64 rng(params.jitter_seed);
            std::uniform_real_distribution<double> unit(-1.0, 1.0);
            for (auto& s : seeds)
                s.z += params.seed_jitter_rel * (1.0 + std::abs(s.z)) * Complex(unit(rng), unit(rng));
        }

        // at a multiple root |g| is quadratically flat, so a residual of
        // solve_tol only pins the position to about sqrt(solve_tol); the
        // degenerate classification has to absorb that uncertainty
        const double degen_tol = std::max(params.degenerate_tol, 8.0 * std::sqrt(params.solve_tol));

        std::vector<std::optional<Solution>> refined(seeds.size());
        detail::parallel_for_index(seeds.size(), params.threads, [&](size_t i) {
            if (prob.at_singularity(seeds[i].z)) return;
            detail::NewtonOutcome out = detail::newton_refine(prob, seeds[i].z, params.solve_tol,
                                                              params.newton_max_iters, params.newton_max_halvings);
            if (!out.ok) return;
            Solution sol;
            sol.z = out.z;
            sol.residual = out.residual;
            sol.orientation = prob.orientation(out.z, degen_tol);
            sol.source = seeds[i].kind;
            sol.curve_index = seeds[i].curve_index;
            sol.newton_iters = out.iters;
            refined[i] = sol;
        });

        std::vector<Solution> sols;
        for (const auto& r : refined)
            if (r) sols.push_back(*r);
        detail::dedupe_solutions(sols, params.merge_radius_rel);

        // copies of one multiple root scatter across the flat region; they all
        // classify degenerate and collapse to a single representative here
        {
            double wide = 50.0 * std::sqrt(params.solve_tol);
            std::vector<Solution> merged;
            for (const Solution& s : sols) {
                bool absorbed = false;
                if (s.orientation == Orientation::Degenerate) {
                    for (Solution& kept : merged) {
                        if (kept.orientation != Orientation::Degenerate) continue;
                        double scale = std::min(1.0 + std::abs(kept.z), 2.0 * std::abs(kept.z));
                        if (std::abs(s.z - kept.z) <= wide * scale) {
                            if (s.residual < kept.residual) kept = s;
                            absorbed = true;
                            break;
                        }
                    }
                }
                if (!absorbed) merged.push_back(s);
            }
            sols = std::move(merged);
        }

        int n_plus = 0, n_minus = 0, n_deg = 0;
        for (const Solution& s : sols) {
            if (s.orientation == Orientation::Positive) ++n_plus;
            else if (s.orientation == Orientation::Negative) ++n_minus;
            else ++n_deg;
        }

        report.solutions = sols;
        report.N = static_cast<int>(sols.size());
        report.N_plus = n_plus;
        report.N_minus = n_minus;
        report.N_degenerate = n_deg;
        report.certificate_count = static_cast<int>(cert.points.size());
        report.certificate_points.clear();
        for (const CertPoint& p : cert.points) report.certificate_points.push_back(p.z);
        report.certificate_ok = !cert_short;
        for (const CertPoint& p : cert.points)
            if (!(p.g_abs < 1e-8)) report.certificate_ok = false;

        // global winding over the sphere-exhausting contour system
        std::vector<std::pair<Complex, double>> disks;
        for (const auto& [center, order] : pole_clusters) {
            double iso = 1.0 + std::abs(center);
            for (const auto& [other, o2] : pole_clusters) {
                double dd = std::abs(center - other);
                if (dd > 1e-12 * (1.0 + std::abs(center))) iso = std::min(iso, dd);
            }
            if (std::abs(center) > 1e-12) iso = std::min(iso, std::abs(center));
            for (const Solution& s : sols) iso = std::min(iso, std::abs(center - s.z));
            disks.emplace_back(center, 0.25 * iso);
        }
        double r_wind = r_structure;
        for (const Solution& s : sols) r_wind = std::max(r_wind, 4.0 * std::abs(s.z));
        for (const Complex& z : report.certificate_points) r_wind = std::max(r_wind, 4.0 * std::abs(z));

        report.winding_global_ok = false;
        report.degree_winding = 0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            auto w1 = detail::degree_winding_at(prob, r_wind, disks);
            auto w2 = detail::degree_winding_at(prob, 2.09 * r_wind, disks);
            if (w1 && w2 && *w1 == *w2) {
                report.degree_winding = *w1;
                report.winding_global_ok = (*w1 == prob.d());
                break;
            }
            r_wind *= 2.37;
        }

        // local winding: each nondegenerate solution is a simple +-1 point
        report.winding_local_ok = true;
        for (const Solution& s : sols) {
            if (s.orientation == Orientation::Degenerate) continue;
            double iso = 0.1 * (1.0 + std::abs(s.z));
            for (const Solution& other : sols) {
                double dd = std::abs(s.z - other.z);
                if (dd > 1e-12 * (1.0 + std::abs(s.z))) iso = std::min(iso, dd);
            }
            for (const Complex& pole : prob.poles()) iso = std::min(iso, std::abs(s.z - pole));
            if (std::abs(s.z) > 1e-12) iso = std::min(iso, std::abs(s.z));
            int expected = s.orientation == Orientation::Positive ? 1 : -1;
            bool matched = false;
            double radius = 0.35 * iso;
            for (int attempt = 0; attempt < 3 && !matched; ++attempt, radius /= 3.0) {
                try {
                    if (winding_number(prob, circle_contour(s.z, radius, 96), 1e-13) == expected) matched = true;
                } catch (const std::runtime_error&) {
                }
            }
            if (!matched) report.winding_local_ok = false;
        }

        report.degree_identity_ok = n_deg > 0 || (n_plus - n_minus == prob.d());
        report.consistent = report.winding_global_ok && report.winding_local_ok && report.degree_identity_ok &&
                            (report.certificate_ok || !params.run_certificate);
        if (report.consistent) break;
    }

    report.bounds_ok.lower = report.N >= prob.d();
    report.bounds_ok.upper = report.N <= 3 * prob.d() + 2 * prob.m();
    report.status = report.consistent ? "ok" : "inconsistent";

    // a degenerate zero set triggers a rerun at a nearby regular value; the
    // shift grows until the fold actually splits beyond the flat region
    if (report.N_degenerate > 0 && params.allow_perturbed_rerun) {
        SolveParams sub = params;
        sub.allow_perturbed_rerun = false;
        sub.run_dynamics = false;
        sub.escalation_cap = std::min(params.escalation_cap, 1);
        for (double eps : {1e-6, 1e-3, 1e-2}) {
            Complex w_shift = prob.w() + Complex(0.0, eps * (1.0 + std::abs(prob.w())));
            try {
                SolveReport subrep = solve(prob.with_w(w_shift), sub);
                report.perturbed =
                    PerturbedCounts{w_shift, subrep.N, subrep.N_plus, subrep.N_minus, subrep.N_degenerate};
                if (subrep.N_degenerate == 0 && subrep.consistent) break;
            } catch (const std::runtime_error&) {
            }
        }
    }

    if (params.run_dynamics) {
        DynamicsParams dp = params.dynamics;
        dp.threads = params.threads;
        DynamicsResult dyn = attracting_fixed_points(prob, dp);
        DynamicsCheck check;
        check.n_minus = static_cast<int>(dyn.fixed_points.size());
        check.fixed_points = dyn.fixed_points;
        check.indeterminate = dyn.indeterminate;
        check.disagreements = dyn.disagreements;
        check.bound_ok = check.n_minus <= prob.d() + prob.m();
        check.fatou_ok = true;
        for (const Solution& s : report.solutions) {
            if (s.orientation != Orientation::Negative) continue;
            bool found = false;
            for (const FixedPointRecord& rec : dyn.fixed_points)
                if (std::abs(rec.z - s.z) <= 10.0 * params.merge_radius_rel * (1.0 + std::abs(s.z))) found = true;
            if (!found) check.fatou_ok = false;
        }
        report.dynamics = check;
    }
    return report;
}

}  // namespace logroot
