#pragma once

#include <logroot/parallel.hpp>
#include <logroot/problem.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace logroot {

/// Attracting fixed point of z -> conj(h(z)), found by iterating from a
/// singular value of h.
struct FixedPointRecord {
    Complex z;
    double multiplier_modulus = 0.0;  ///< |h'(z)| at the limit
    Complex seed;                     ///< the singular value whose orbit converged
    int iterations = 0;
};

struct DynamicsParams {
    int max_iters = 100000;
    double fix_tol = 1e-10;
    double escape_radius = 0.0;  ///< 0: derived from the problem geometry
    uint64_t perturb_seed = 20240917ull;
    int replicas = 5;            ///< perturbed reruns per singular value
    double perturb_rel = 1e-3;
    double neutral_band = 1e-6;  ///< multipliers within this of 1 count as indeterminate
    double merge_radius_rel = 1e-6;
    int threads = 1;
};

struct DynamicsResult {
    std::vector<FixedPointRecord> fixed_points;  ///< deduplicated, attracting only
    int indeterminate = 0;      ///< limits with near-neutral multiplier, excluded
    int dropped_singular = 0;   ///< non-finite h values at critical points
    int disagreements = 0;      ///< seed groups whose replicas found different limits
};

/// Cross-check record embedded into a solve report.
struct DynamicsCheck {
    int n_minus = 0;
    bool fatou_ok = true;  ///< every sense-reversing solution appears among the fixed points
    bool bound_ok = true;  ///< n_minus <= d + m
    std::vector<FixedPointRecord> fixed_points;
    int indeterminate = 0;
    int disagreements = 0;
};

/// Finite singular values of h: the images of the critical points. The two
/// asymptotic values 0 and infinity never attract and are left out.
inline std::vector<Complex> singular_values(const Problem& prob, int* dropped = nullptr) {
    std::vector<Complex> out;
    int lost = 0;
    for (const Complex& c : prob.h_critical_points()) {
        Complex v = prob.eval_h(c);
        if (std::isfinite(v.real()) && std::isfinite(v.imag()) && std::abs(v) > 1e-13)
            out.push_back(v);
        else
            ++lost;
    }
    if (dropped) *dropped = lost;
    return out;
}

namespace detail {

inline double default_escape_radius(const Problem& prob) {
    double biggest = 0.0;
    for (const Complex& z : prob.poles()) biggest = std::max(biggest, std::abs(z));
    for (const Complex& z : prob.h_critical_points()) biggest = std::max(biggest, std::abs(z));
    return 100.0 * (1.0 + biggest);
}

}  // namespace detail

/// Iterates z -> conj(h(z)). Returns the limit when successive iterates
/// settle, or nothing on escape, cycling, or a singularity hit.
inline std::optional<FixedPointRecord> iterate_to_fixed_point(const Problem& prob, Complex z0,
                                                              int max_iters = 100000, double fix_tol = 1e-10,
                                                              double escape_radius = 0.0) {
    if (escape_radius <= 0.0) escape_radius = detail::default_escape_radius(prob);
    Complex z = z0, z1 = z0;
    for (int k = 0; k < max_iters; ++k) {
        if (prob.at_singularity(z)) return std::nullopt;
        Complex next = std::conj(prob.eval_h(z));
        if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) return std::nullopt;
        if (std::abs(next) > escape_radius) return std::nullopt;

        double step = std::abs(next - z);
        if (step < fix_tol * (1.0 + std::abs(next))) {
            FixedPointRecord rec;
            rec.z = next;
            rec.seed = z0;
            rec.iterations = k + 1;
            if (prob.at_singularity(next)) return std::nullopt;
            if (std::abs(std::conj(prob.eval_h(next)) - next) > 10.0 * fix_tol * (1.0 + std::abs(next)))
                return std::nullopt;
            rec.multiplier_modulus = prob.h_prime_modulus(next);
            return rec;
        }
        // the pair {0, infinity} and other 2-cycles show up as period-2 orbits
        if (k >= 2 && std::abs(next - z1) < fix_tol * (1.0 + std::abs(next)) &&
            std::abs(next - z) > 100.0 * fix_tol * (1.0 + std::abs(next)))
            return std::nullopt;
        z1 = z;
        z = next;
    }
    return std::nullopt;
}

/// Runs the iteration from every singular value (plus perturbed replicas),
/// keeping the distinct attracting limits. Their count bounds the number of
/// sense-reversing solutions from above.
inline DynamicsResult attracting_fixed_points(const Problem& prob, const DynamicsParams& params = {}) {
    DynamicsResult result;
    std::vector<Complex> values = singular_values(prob, &result.dropped_singular);
    double escape = params.escape_radius > 0.0 ? params.escape_radius : detail::default_escape_radius(prob);

    struct SeedJob {
        Complex z;
        int group;
    };
    std::vector<SeedJob> jobs;
    std::mt19937_64 rng(params.perturb_seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (size_t i = 0; i < values.size(); ++i) {
        jobs.push_back({values[i], static_cast<int>(i)});
        for (int r = 0; r < params.replicas; ++r) {
            Complex bump(unit(rng), unit(rng));
            jobs.push_back({values[i] * (1.0 + params.perturb_rel * bump), static_cast<int>(i)});
        }
    }

    std::vector<std::optional<FixedPointRecord>> limits(jobs.size());
    detail::parallel_for_index(jobs.size(), params.threads, [&](size_t i) {
        limits[i] = iterate_to_fixed_point(prob, jobs[i].z, params.max_iters, params.fix_tol, escape);
    });

    // per-group disagreement flagging
    for (size_t gi = 0; gi < values.size(); ++gi) {
        std::vector<Complex> group_limits;
        for (size_t i = 0; i < jobs.size(); ++i) {
            if (jobs[i].group != static_cast<int>(gi) || !limits[i]) continue;
            bool fresh = true;
            for (const Complex& other : group_limits)
                if (std::abs(limits[i]->z - other) <= params.merge_radius_rel * (1.0 + std::abs(other))) fresh = false;
            if (fresh) group_limits.push_back(limits[i]->z);
        }
        if (group_limits.size() > 1) ++result.disagreements;
    }

    std::vector<FixedPointRecord> recs;
    for (auto& lim : limits)
        if (lim) recs.push_back(*lim);
    std::sort(recs.begin(), recs.end(), [](const FixedPointRecord& a, const FixedPointRecord& b) {
        if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
        return a.z.imag() < b.z.imag();
    });

    for (const FixedPointRecord& rec : recs) {
        if (rec.multiplier_modulus >= 1.0 - params.neutral_band) {
            if (rec.multiplier_modulus <= 1.0 + params.neutral_band) ++result.indeterminate;
            continue;
        }
        bool fresh = true;
        for (const FixedPointRecord& kept : result.fixed_points)
            if (std::abs(rec.z - kept.z) <= params.merge_radius_rel * (1.0 + std::abs(kept.z))) fresh = false;
        if (fresh) result.fixed_points.push_back(rec);
    }
    return result;
}

}  // namespace logroot
