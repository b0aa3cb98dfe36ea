#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>

#include "gvs/embedding.hpp"
#include "gvs/random.hpp"
#include "gvs/train.hpp"

namespace gvs::fixtures {

/// Two Gaussian classes in 4-D with means +3 e1 (class 0) and -3 e1
/// (class 1), std 0.5, alternating rows; conditions are one-hot.
struct TwoClass {
    EmbeddingMatrix targets;
    EmbeddingMatrix conditions;
};

inline TwoClass two_class(std::size_t n, std::uint64_t seed, double sigma = 0.5) {
    Rng rng(seed, 0x6669);
    Matrix x(static_cast<Eigen::Index>(n), 4);
    Matrix c = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::Index k = i % 2;
        for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = sigma * rng.normal();
        x(i, 0) += k == 0 ? 3.0 : -3.0;
        c(i, k) = 1.0;
    }
    return {EmbeddingMatrix(x), EmbeddingMatrix(c)};
}

inline RowVector class_mean(std::size_t k) {
    RowVector m = RowVector::Zero(4);
    m(0) = k == 0 ? 3.0 : -3.0;
    return m;
}

inline RowVector one_hot(std::size_t k, std::size_t n = 2) {
    RowVector c = RowVector::Zero(static_cast<Eigen::Index>(n));
    c(static_cast<Eigen::Index>(k)) = 1.0;
    return c;
}

/// Training settings that fit the two-class fixture in a few hundred steps.
inline TrainConfig quick_config(std::size_t epochs, std::uint64_t seed, std::size_t batch = 128) {
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.warmup_steps = 100;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

inline Architecture small_arch(std::size_t hidden = 64) {
    Architecture a;
    a.hidden_dim = hidden;
    a.time_dim = 16;
    a.layers = 1;
    a.rank = std::min<std::size_t>(8, hidden / 2);
    return a;
}

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("gvs_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace gvs::fixtures
