#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace logroot {

using Complex = std::complex<double>;

/// Relative threshold below which trailing coefficients are trimmed away.
inline constexpr double kZeroTrimRel = 1e-12;

struct BothZeroError : std::runtime_error {
    BothZeroError() : std::runtime_error("gcd of two zero polynomials is undefined") {}
};

struct NoConvergenceError : std::runtime_error {
    explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense complex polynomial, coefficients in ascending powers.
///
/// The zero polynomial is represented by an empty coefficient list; nonzero
/// polynomials always keep a trailing coefficient whose modulus exceeds the
/// trim threshold relative to the largest coefficient.
class ComplexPoly {
public:
    ComplexPoly() = default;

    explicit ComplexPoly(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

    ComplexPoly(std::initializer_list<Complex> coeffs) : coeffs_(coeffs) { trim(); }

    static ComplexPoly constant(Complex c) { return ComplexPoly(std::vector<Complex>{c}); }

    bool is_zero() const { return coeffs_.empty(); }

    bool is_constant() const { return coeffs_.size() <= 1; }

    /// Degree of a nonzero polynomial. Must not be called on the zero polynomial.
    int degree() const {
        assert(!coeffs_.empty());
        return static_cast<int>(coeffs_.size()) - 1;
    }

    const std::vector<Complex>& coeffs() const { return coeffs_; }

    /// Coefficient of z^k, zero beyond the degree.
    Complex coeff(int k) const {
        if (k < 0 || k >= static_cast<int>(coeffs_.size())) return Complex(0.0);
        return coeffs_[static_cast<size_t>(k)];
    }

    Complex leading() const {
        assert(!coeffs_.empty());
        return coeffs_.back();
    }

    double max_coeff_modulus() const {
        double m = 0.0;
        for (const Complex& c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

    /// Horner evaluation.
    Complex eval(Complex z) const {
        if (coeffs_.empty()) return Complex(0.0);
        Complex acc = coeffs_.back();
        for (size_t i = coeffs_.size() - 1; i-- > 0;) acc = acc * z + coeffs_[i];
        return acc;
    }

    ComplexPoly derivative() const {
        if (coeffs_.size() <= 1) return ComplexPoly();
        std::vector<Complex> d(coeffs_.size() - 1);
        for (size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
        return ComplexPoly(std::move(d));
    }

    ComplexPoly operator+(const ComplexPoly& rhs) const {
        std::vector<Complex> out(std::max(coeffs_.size(), rhs.coeffs_.size()), Complex(0.0));
        for (size_t i = 0; i < coeffs_.size(); ++i) out[i] += coeffs_[i];
        for (size_t i = 0; i < rhs.coeffs_.size(); ++i) out[i] += rhs.coeffs_[i];
        return ComplexPoly(std::move(out));
    }

    ComplexPoly operator-(const ComplexPoly& rhs) const {
        std::vector<Complex> out(std::max(coeffs_.size(), rhs.coeffs_.size()), Complex(0.0));
        for (size_t i = 0; i < coeffs_.size(); ++i) out[i] += coeffs_[i];
        for (size_t i = 0; i < rhs.coeffs_.size(); ++i) out[i] -= rhs.coeffs_[i];
        return ComplexPoly(std::move(out));
    }

    ComplexPoly operator*(const ComplexPoly& rhs) const {
        if (coeffs_.empty() || rhs.coeffs_.empty()) return ComplexPoly();
        std::vector<Complex> out(coeffs_.size() + rhs.coeffs_.size() - 1, Complex(0.0));
        for (size_t i = 0; i < coeffs_.size(); ++i)
            for (size_t j = 0; j < rhs.coeffs_.size(); ++j) out[i + j] += coeffs_[i] * rhs.coeffs_[j];
        return ComplexPoly(std::move(out));
    }

    ComplexPoly scaled(Complex c) const {
        std::vector<Complex> out(coeffs_);
        for (Complex& x : out) x *= c;
        return ComplexPoly(std::move(out));
    }

    /// Multiplication by z^k.
    ComplexPoly shifted_up(int k) const {
        if (coeffs_.empty()) return ComplexPoly();
        std::vector<Complex> out(coeffs_.size() + static_cast<size_t>(k), Complex(0.0));
        std::copy(coeffs_.begin(), coeffs_.end(), out.begin() + k);
        return ComplexPoly(std::move(out));
    }

    /// Substitution z -> z^k, spreading coefficients.
    ComplexPoly compose_power(int k) const {
        assert(k >= 1);
        if (coeffs_.empty()) return ComplexPoly();
        std::vector<Complex> out(static_cast<size_t>(degree()) * k + 1, Complex(0.0));
        for (size_t i = 0; i < coeffs_.size(); ++i) out[i * static_cast<size_t>(k)] = coeffs_[i];
        return ComplexPoly(std::move(out));
    }

    /// Coefficient reversal: z^degree * p(1/z).
    ComplexPoly reversed() const {
        std::vector<Complex> out(coeffs_.rbegin(), coeffs_.rend());
        return ComplexPoly(std::move(out));
    }

    /// Substitution z -> s*z.
    ComplexPoly dilated(Complex s) const {
        std::vector<Complex> out(coeffs_);
        Complex pw = 1.0;
        for (Complex& x : out) {
            x *= pw;
            pw *= s;
        }
        return ComplexPoly(std::move(out));
    }

    /// First `count` Taylor coefficients of p(z0 + e) by repeated synthetic division.
    std::vector<Complex> taylor_at(Complex z0, int count) const {
        std::vector<Complex> work(coeffs_);
        std::vector<Complex> out(static_cast<size_t>(count), Complex(0.0));
        for (int k = 0; k < count && !work.empty(); ++k) {
            for (size_t i = work.size() - 1; i-- > 0;) work[i] += z0 * work[i + 1];
            out[static_cast<size_t>(k)] = work.front();
            work.erase(work.begin());
        }
        return out;
    }

private:
    void trim() {
        double scale = max_coeff_modulus();
        if (scale == 0.0) {
            coeffs_.clear();
            return;
        }
        double thresh = kZeroTrimRel * scale;
        while (!coeffs_.empty() && std::abs(coeffs_.back()) <= thresh) coeffs_.pop_back();
    }

    std::vector<Complex> coeffs_;
};

namespace detail {

/// Remainder of a / b for nonzero b; a is consumed.
inline std::vector<Complex> poly_mod(std::vector<Complex> a, const std::vector<Complex>& b) {
    const size_t db = b.size() - 1;
    const Complex lead = b.back();
    while (a.size() > db) {
        Complex factor = a.back() / lead;
        size_t shift = a.size() - 1 - db;
        for (size_t i = 0; i < db; ++i) a[shift + i] -= factor * b[i];
        a.pop_back();
    }
    return a;
}

inline double inf_norm(const std::vector<Complex>& v) {
    double m = 0.0;
    for (const Complex& c : v) m = std::max(m, std::abs(c));
    return m;
}

}  // namespace detail

/// Degree of the numerical greatest common divisor, computed by a Euclidean
/// remainder sequence with per-step normalization. Remainders with relative
/// infinity norm below `tol` count as zero, so coprime inputs return 0.
inline int gcd_degree(const ComplexPoly& a, const ComplexPoly& b, double tol = 1e-8) {
    if (a.is_zero() && b.is_zero()) throw BothZeroError();
    if (a.is_zero()) return b.degree();
    if (b.is_zero()) return a.degree();

    auto normalize = [](std::vector<Complex> v) {
        double n = detail::inf_norm(v);
        for (Complex& c : v) c /= n;
        return v;
    };

    std::vector<Complex> x = normalize(a.coeffs());
    std::vector<Complex> y = normalize(b.coeffs());
    if (x.size() < y.size()) std::swap(x, y);

    while (y.size() > 1) {
        std::vector<Complex> r = detail::poly_mod(x, y);
        // strip trailing noise relative to the working scale
        while (!r.empty() && std::abs(r.back()) <= tol) r.pop_back();
        if (r.empty() || detail::inf_norm(r) <= tol) return static_cast<int>(y.size()) - 1;
        x = std::move(y);
        y = normalize(std::move(r));
    }
    return 0;  // reached a nonzero constant
}

struct RootsConfig {
    double tol = 1e-10;   ///< residual tolerance, relative to the coefficient scale at the root
    int max_sweeps = 400;
    int polish_steps = 3;
};

/// All roots of `poly`, with multiplicity, by Aberth-Ehrlich simultaneous
/// iteration followed by Newton polishing. Returned sorted by (Re, Im).
/// Multiple roots come back as numerically clustered copies; nonzero
/// constants have none.
inline std::vector<Complex> roots(const ComplexPoly& poly, RootsConfig cfg = {}) {
    assert(!poly.is_zero());
    if (poly.degree() < 1) return {};
    const int n = poly.degree();

    // monic copy
    std::vector<Complex> c(poly.coeffs());
    Complex lead = c.back();
    for (Complex& x : c) x /= lead;

    if (n == 1) return {-c[0]};

    ComplexPoly mp{std::vector<Complex>(c)};
    ComplexPoly dmp = mp.derivative();

    // initial guesses on a circle inside the Cauchy bound
    double bound = 0.0;
    for (int k = 0; k < n; ++k) bound = std::max(bound, std::abs(c[static_cast<size_t>(k)]));
    double radius = 0.5 * (1.0 + bound);
    std::vector<Complex> z(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double angle = 2.0 * M_PI * j / n + 0.376;
        z[static_cast<size_t>(j)] = radius * Complex(std::cos(angle), std::sin(angle));
    }

    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            Complex zi = z[static_cast<size_t>(i)];
            Complex pv = mp.eval(zi);
            Complex dv = dmp.eval(zi);
            Complex ratio = (dv != Complex(0.0)) ? pv / dv : pv;
            Complex sum(0.0);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                Complex diff = zi - z[static_cast<size_t>(j)];
                if (std::abs(diff) < 1e-300) diff = Complex(1e-300);
                sum += 1.0 / diff;
            }
            Complex denom = 1.0 - ratio * sum;
            Complex step = (std::abs(denom) > 1e-300) ? ratio / denom : ratio;
            z[static_cast<size_t>(i)] = zi - step;
            worst = std::max(worst, std::abs(step) / (1.0 + std::abs(zi)));
        }
        if (worst < 1e-14) break;
    }

    for (Complex& r : z) {
        for (int k = 0; k < cfg.polish_steps; ++k) {
            Complex dv = dmp.eval(r);
            if (std::abs(dv) < 1e-300) break;
            r -= mp.eval(r) / dv;
        }
    }

    auto scale_at = [&](Complex r) {
        double ar = std::abs(r);
        double s = 1.0, pw = 1.0;
        for (int k = 0; k <= n; ++k) {
            s += std::abs(c[static_cast<size_t>(k)]) * pw;
            pw *= ar;
        }
        return s;
    };
    for (const Complex& r : z) {
        double res = std::abs(mp.eval(r));
        if (!(res <= cfg.tol * scale_at(r)))
            throw NoConvergenceError("polynomial root iteration did not reach the residual tolerance");
    }

    std::sort(z.begin(), z.end(), [](Complex a2, Complex b2) {
        if (a2.real() != b2.real()) return a2.real() < b2.real();
        return a2.imag() < b2.imag();
    });
    return z;
}

}  // namespace logroot
