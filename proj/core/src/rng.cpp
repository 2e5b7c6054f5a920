#include "atrfas/rng.hpp"

#include <cmath>

#include "atrfas/errors.hpp"

namespace atrfas {

namespace {
constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

uint64_t RngStream::mix64(uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t RngStream::hash_name(std::string_view name) {
    // FNV-1a, then one mix round so short names spread.
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return mix64(h);
}

RngStream RngStream::split(uint64_t key) const {
    return RngStream(mix64(seed_ ^ mix64(key ^ 0xD1B54A32D192ED03ULL)));
}

RngStream RngStream::split(std::string_view name) const {
    return split(hash_name(name));
}

uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(seed_ + kGamma * counter_);
}

double RngStream::next_double() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

float RngStream::next_float() {
    return float(next_u64() >> 40) * 0x1.0p-24f;
}

float RngStream::uniform(float lo, float hi) {
    return lo + (hi - lo) * next_float();
}

uint64_t RngStream::below(uint64_t n) {
    if (n == 0) throw ParamError("RngStream::below: n must be >= 1");
    // Lemire's multiply-shift with rejection of the biased region.
    uint64_t x = next_u64();
    __uint128_t m = __uint128_t(x) * __uint128_t(n);
    uint64_t lo = uint64_t(m);
    if (lo < n) {
        uint64_t t = (0 - n) % n;
        while (lo < t) {
            x = next_u64();
            m = __uint128_t(x) * __uint128_t(n);
            lo = uint64_t(m);
        }
    }
    return uint64_t(m >> 64);
}

namespace {

// Acklam's inverse normal CDF; peak relative error ~1.15e-9. Uses only
// arithmetic, sqrt and log, which keeps streams stable across platforms
// (up to libm's log rounding).
double inverse_normal_cdf(double p) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace

float RngStream::normal() {
    double u = double((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1], never 0
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return float(inverse_normal_cdf(u));
}

} // namespace atrfas
