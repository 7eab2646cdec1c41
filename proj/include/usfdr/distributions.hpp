#pragma once

#include <cmath>
#include <stdexcept>

#if defined(__unix__) || defined(__APPLE__)
extern "C" double lgamma_r(double, int*);
#endif

namespace usfdr {

namespace detail {

// std::lgamma writes the global signgam, which races under concurrent use;
// the reentrant form keeps the sign local.
inline double log_gamma(double x) {
#if defined(__unix__) || defined(__APPLE__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

} // namespace detail

/// Degrees of freedom of the Student-t reference distribution. The two-sample
/// statistics use n1 + n2 - 2, but any positive real value is accepted.
struct DegreesOfFreedom {
    double value;

    explicit DegreesOfFreedom(double v) : value(v) {
        if (!(std::isfinite(v) && v > 0.0))
            throw std::domain_error("degrees of freedom must be finite and positive");
    }
};

/// A two-sided tail probability; always in [0, 1].
struct TailProbability {
    double value;

    explicit TailProbability(double v) : value(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("tail probability must lie in [0, 1]");
    }
};

namespace detail {

// Continued fraction for the regularized incomplete beta function, evaluated
// with Lentz's algorithm. Convergence tolerance 1e-15, at most 300 terms.
inline double ibeta_continued_fraction(double a, double b, double x) {
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;
    constexpr int max_iter = 300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// Regularized incomplete beta I_x(a, b).
inline double reg_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b)
                            + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // The continued fraction converges rapidly only below the crossover point.
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * ibeta_continued_fraction(a, b, x) / a;
    return 1.0 - front * ibeta_continued_fraction(b, a, 1.0 - x) / b;
}

} // namespace detail

/// Student-t density, used by the Newton refinement of the inverse survival.
inline double student_t_pdf(double t, DegreesOfFreedom df) {
    const double v = df.value;
    const double ln = detail::log_gamma(0.5 * (v + 1.0)) - detail::log_gamma(0.5 * v)
                      - 0.5 * std::log(v * M_PI)
                      - 0.5 * (v + 1.0) * std::log1p(t * t / v);
    return std::exp(ln);
}

/// CDF of the Student-t distribution with df degrees of freedom.
/// Saturates to exact 0/1 when the tail mass underflows.
inline double student_t_cdf(double x, DegreesOfFreedom df) {
    if (!std::isfinite(x))
        throw std::domain_error("student_t_cdf: x must be finite");
    if (x == 0.0) return 0.5;
    const double v = df.value;
    const double z = v / (v + x * x);
    const double tail = 0.5 * detail::reg_incomplete_beta(0.5 * v, 0.5, z);
    return x > 0.0 ? 1.0 - tail : tail;
}

/// G(t) = 2 - 2*Psi(t): probability that |T| exceeds t under the null.
/// Computed directly as I_{v/(v+t^2)}(v/2, 1/2), which keeps full relative
/// accuracy deep in the tail.
inline TailProbability two_sided_survival(double t, DegreesOfFreedom df) {
    if (!(t >= 0.0))
        throw std::domain_error("two_sided_survival: t must be >= 0");
    if (t == 0.0) return TailProbability(1.0);
    const double v = df.value;
    const double z = v / (v + t * t);
    double g = detail::reg_incomplete_beta(0.5 * v, 0.5, z);
    if (g < 0.0) g = 0.0;
    if (g > 1.0) g = 1.0;
    return TailProbability(g);
}

/// Functional inverse of two_sided_survival: the t >= 0 with G(t) = p.
/// Bracketing plus a bisection/Newton hybrid; the bracket starts at [0, 60]
/// and expands as needed (heavy-tailed small-df cases).
inline double inverse_two_sided_survival(TailProbability p, DegreesOfFreedom df) {
    const double target = p.value;
    if (!(target > 0.0))
        throw std::domain_error("inverse_two_sided_survival: p must be in (0, 1]");
    if (target >= 1.0) return 0.0;

    double lo = 0.0;
    double hi = 60.0;
    while (two_sided_survival(hi, df).value > target) {
        lo = hi;
        hi *= 4.0;
        if (hi > 1e300)
            throw std::runtime_error("inverse_two_sided_survival: bracket expansion failed");
    }

    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double g = two_sided_survival(t, df).value;
        const double err = g - target;
        if (std::fabs(err) <= 1e-14 * target) break;
        if (err > 0.0) lo = t; else hi = t;
        if (hi - lo <= 1e-15 * hi) break;
        // G'(t) = -2 * pdf(t); Newton step, clipped to the bracket.
        const double dens = student_t_pdf(t, df);
        double next = dens > 1e-300 ? t + err / (2.0 * dens) : lo;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        t = next;
    }
    return t;
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
    if (!std::isfinite(x))
        throw std::domain_error("normal_cdf: x must be finite");
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

} // namespace usfdr
