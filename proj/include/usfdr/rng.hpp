#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace usfdr {

/// SplitMix64 stream addressed by a (master seed, replication, group,
/// feature) key. Every generated value depends only on the key and the draw
/// index, so parallel replication schedules cannot change the data.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static RngStream keyed(std::uint64_t master, std::uint64_t replication,
                           std::uint64_t group, std::uint64_t feature) {
        std::uint64_t h = mix(master ^ 0x6A09E667F3BCC909ULL);
        h = mix(h ^ (replication + 0x9E3779B97F4A7C15ULL));
        h = mix(h ^ (group + 0xBF58476D1CE4E5B9ULL));
        h = mix(h ^ (feature + 0x94D049BB133111EBULL));
        return RngStream(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via the polar method.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shapes below 1 use the boost
    /// Gamma(shape) = Gamma(shape + 1) * U^(1/shape).
    double next_gamma(double shape) {
        if (!(shape > 0.0))
            throw std::domain_error("next_gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = next_double();
            return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = next_gaussian();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    /// Student-t with df degrees of freedom: Z / sqrt(chi2_df / df).
    double next_student_t(double df) {
        if (!(df > 0.0))
            throw std::domain_error("next_student_t: df must be positive");
        const double z = next_gaussian();
        const double chi2 = 2.0 * next_gamma(0.5 * df);
        return z / std::sqrt(chi2 / df);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace usfdr
