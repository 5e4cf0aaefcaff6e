#pragma once

#include <logroot/complex_poly.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace logroot {

struct NotCoprimeError : std::runtime_error {
    NotCoprimeError() : std::runtime_error("p and q have a nontrivial common divisor") {}
};

struct BothConstantError : std::runtime_error {
    BothConstantError() : std::runtime_error("p and q are both constant") {}
};

struct ZeroPolynomialError : std::runtime_error {
    explicit ZeroPolynomialError(const std::string& what) : std::runtime_error(what) {}
};

struct AtSingularityError : std::runtime_error {
    AtSingularityError() : std::runtime_error("evaluation inside the exclusion radius of 0 or a pole") {}
};

enum class Orientation { Positive, Negative, Degenerate };

inline const char* to_string(Orientation o) {
    switch (o) {
        case Orientation::Positive: return "positive";
        case Orientation::Negative: return "negative";
        default: return "degenerate";
    }
}

/// First-order data of g at a point, in the Wirtinger frame.
struct Jet {
    Complex value;    ///< g(z) - w
    Complex dz;       ///< 1/z + f'(z)
    Complex dzbar;    ///< 1/conj(z)
    double jacobian;  ///< |dz|^2 - |dzbar|^2
};

/// Validated instance of the equation p(z) log|z| + q(z) = 0, target value w.
///
/// Everything is phrased through the equivalent map
///   g(z) = log|z|^2 + f(z),  f = 2q/p,
/// whose zeros (w-points) are exactly the solutions. The rational function
/// F = q/p and the auxiliary map h(z) = exp(-f(z)+w)/z are evaluated here as
/// well; the level-curve and dynamics machinery build on them.
class Problem {
public:
    Problem(ComplexPoly p, ComplexPoly q, Complex w = Complex(0.0), double gcd_tol = 1e-8)
        : p_(std::move(p)), q_(std::move(q)), w_(w) {
        if (p_.is_zero()) throw ZeroPolynomialError("p must not be the zero polynomial");
        if (q_.is_zero()) throw ZeroPolynomialError("q must not be the zero polynomial");
        m_ = p_.degree();
        n_ = q_.degree();
        if (m_ == 0 && n_ == 0) throw BothConstantError();
        if (gcd_degree(p_, q_, gcd_tol) > 0) throw NotCoprimeError();
        d_ = std::max(m_, n_);

        dp_ = p_.derivative();
        dq_ = q_.derivative();
        wronskian_ = dq_ * p_ - q_ * dp_;                       // numerator of F'
        h_crit_num_ = p_ * p_ + (wronskian_.shifted_up(1)).scaled(2.0);  // numerator of 1 + z f'

        if (m_ >= 1) poles_ = roots(p_);

        double scale = std::max(p_.max_coeff_modulus(), q_.max_coeff_modulus());
        real_coefficients_ = true;
        for (const Complex& c : p_.coeffs())
            if (std::abs(c.imag()) > 1e-12 * scale) real_coefficients_ = false;
        for (const Complex& c : q_.coeffs())
            if (std::abs(c.imag()) > 1e-12 * scale) real_coefficients_ = false;
    }

    const ComplexPoly& p() const { return p_; }
    const ComplexPoly& q() const { return q_; }
    const ComplexPoly& p_prime() const { return dp_; }
    const ComplexPoly& q_prime() const { return dq_; }
    const ComplexPoly& f_prime_numerator() const { return wronskian_; }  // = q'p - qp'
    const ComplexPoly& h_critical_numerator() const { return h_crit_num_; }
    int m() const { return m_; }
    int n() const { return n_; }
    int d() const { return d_; }
    Complex w() const { return w_; }
    const std::vector<Complex>& poles() const { return poles_; }
    bool real_coefficients() const { return real_coefficients_; }

    /// Sibling problem with a different target value (shares p, q).
    Problem with_w(Complex w) const {
        Problem copy(*this);
        copy.w_ = w;
        return copy;
    }

    bool at_singularity(Complex z) const {
        if (std::abs(z) <= 1e-9) return true;
        for (const Complex& pole : poles_)
            if (std::abs(z - pole) <= 1e-9 * (1.0 + std::abs(pole))) return true;
        return false;
    }

    Complex eval_F(Complex z) const { return q_.eval(z) / p_.eval(z); }

    Complex eval_F_prime(Complex z) const {
        Complex pv = p_.eval(z);
        return wronskian_.eval(z) / (pv * pv);
    }

    Complex eval_f(Complex z) const { return 2.0 * eval_F(z); }

    Complex eval_f_prime(Complex z) const { return 2.0 * eval_F_prime(z); }

    /// g(z) = log|z|^2 + f(z). Uses 2 log|z| so huge |z| cannot overflow.
    Complex eval_g(Complex z) const {
        guard(z);
        return 2.0 * std::log(std::abs(z)) + eval_f(z);
    }

    Jet jet_g(Complex z) const {
        guard(z);
        Jet jet;
        jet.value = eval_g(z) - w_;
        jet.dz = 1.0 / z + eval_f_prime(z);
        jet.dzbar = 1.0 / std::conj(z);
        jet.jacobian = std::norm(jet.dz) - std::norm(jet.dzbar);
        return jet;
    }

    Orientation orientation(Complex z, double degenerate_tol = 1e-8) const {
        Jet jet = jet_g(z);
        // scaled so the classification survives |dz| overflow near poles
        double a = std::abs(jet.dz), b = std::abs(jet.dzbar);
        double s = std::max(a, b);
        if (s == 0.0) return Orientation::Degenerate;
        double an = a / s, bn = b / s;
        double scaled = an * an - bn * bn;
        double scale = an * an + bn * bn;
        if (scaled > degenerate_tol * scale) return Orientation::Positive;
        if (scaled < -degenerate_tol * scale) return Orientation::Negative;
        return Orientation::Degenerate;
    }

    /// h(z) = exp(-f(z) + w) / z. Overflow propagates as a non-finite value.
    Complex eval_h(Complex z) const {
        guard(z);
        return std::exp(-eval_f(z) + w_) / z;
    }

    /// |h'(z)| = exp(Re(-f+w)) |1 + z f'(z)| / |z|^2.
    double h_prime_modulus(Complex z) const {
        guard(z);
        double expo = std::exp((-eval_f(z) + w_).real());
        return expo * std::abs(1.0 + z * eval_f_prime(z)) / std::norm(z);
    }

    /// Zeros of 1 + z f'(z): the critical points of h. At most d+m of them.
    std::vector<Complex> h_critical_points() const {
        if (h_crit_num_.is_zero() || h_crit_num_.degree() < 1) return {};
        std::vector<Complex> out;
        for (const Complex& r : roots(h_crit_num_))
            if (!at_singularity(r)) out.push_back(r);
        return out;
    }

private:
    void guard(Complex z) const {
        if (at_singularity(z)) throw AtSingularityError();
    }

    ComplexPoly p_, q_, dp_, dq_, wronskian_, h_crit_num_;
    int m_ = 0, n_ = 0, d_ = 0;
    Complex w_{0.0};
    std::vector<Complex> poles_;
    bool real_coefficients_ = false;
};

}  // namespace logroot
