#include "gvs/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gvs/error.hpp"

namespace gvs {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream), engine_(mix(seed, stream)) {}

Rng Rng::split(std::uint64_t child) const { return Rng(mix(seed_, stream_), child); }

double Rng::normal() {
    // Marsaglia polar method; kept local so draws do not depend on the
    // standard library's distribution implementation.
    for (;;) {
        const double u = 2.0 * uniform() - 1.0;
        const double v = 2.0 * uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

double Rng::uniform() {
    // 53 random bits mapped onto [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw ParameterError("Rng::index requires n >= 1");
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Matrix sample_gaussian(std::size_t n, std::size_t d, std::uint64_t seed, std::uint64_t first_stream) {
    if (n < 1 || d < 1) throw ParameterError("sample_gaussian requires n, d >= 1");
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, first_stream + i);
        for (std::size_t j = 0; j < d; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
    }
    return out;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> sample_logit_normal(std::size_t n, Rng& rng) {
    if (n < 1) throw ParameterError("sample_logit_normal requires n >= 1");
    constexpr double kLo = std::numeric_limits<double>::min();
    constexpr double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    std::vector<double> out(n);
    for (auto& t : out) {
        // The polar method is unbounded in principle; keep the open interval.
        t = std::clamp(sigmoid(rng.normal()), kLo, kHi);
    }
    return out;
}

std::vector<double> sample_logit_normal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return sample_logit_normal(n, rng);
}

}  // namespace gvs
