#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gvs/types.hpp"

namespace gvs {

/// Seedable generator with explicit stream splitting.
///
/// A generator is identified by (seed, stream). The engine state is derived
/// by SplitMix64 mixing of both values, so Rng(s, a) and Rng(s, b) are
/// statistically independent for a != b and either can be recreated without
/// touching the other. split(k) derives a child stream from the current
/// identity, which is how training (shuffle, noise, times, dropout) and
/// sampling (one stream per generated row) keep their draws separate.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    Rng split(std::uint64_t child) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    double normal();
    double uniform();  // [0, 1)
    std::size_t index(std::size_t n);  // uniform in [0, n)
    bool bernoulli(double p);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// n x d matrix of independent standard normals. Row i is drawn from
/// Rng(seed, first_stream + i), so rows can be regenerated individually.
Matrix sample_gaussian(std::size_t n, std::size_t d, std::uint64_t seed, std::uint64_t first_stream = 0);

/// sigmoid(z) with z ~ N(0, 1); every value lies strictly inside (0, 1).
std::vector<double> sample_logit_normal(std::size_t n, Rng& rng);
std::vector<double> sample_logit_normal(std::size_t n, std::uint64_t seed);

double sigmoid(double z);

}  // namespace gvs
