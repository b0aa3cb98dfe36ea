#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvs/types.hpp"

namespace gvs {

/// Synthetic benchmark comparing one-prototype-per-class classification with
/// classification by nearest generated samples after PCA reduction.
///
/// Every class is a mixture of `modes_per_class` isotropic Gaussian clusters
/// whose centres are drawn at radius `separation` around the origin.
struct CapacityBenchConfig {
    std::size_t n_classes = 4;
    std::size_t points_per_class = 300;
    std::size_t ambient_dim = 32;
    std::vector<std::size_t> reduced_dims = {2, 4, 8, 16, 32};
    double separation = 3.0;
    double noise = 1.0;
    std::uint64_t seed = 0;
    std::size_t samples_per_class = 200;
    std::size_t modes_per_class = 3;

    /// Fractions of each class used for training and validation; the rest is test.
    double train_fraction = 0.6;
    double val_fraction = 0.2;

    std::size_t hidden_dim = 256;
    std::size_t flow_epochs = 250;
    std::size_t flow_batch = 128;
    double flow_lr = 1e-3;
    std::size_t flow_warmup = 100;
    std::size_t euler_steps = 10;
    std::size_t k = 3;

    std::size_t prototype_epochs = 300;
    double prototype_lr = 0.05;
    double prototype_temperature = 0.1;

    void validate() const;
};

struct CapacityRow {
    std::size_t dim = 0;
    std::string method;  // "prototype" or "generative"
    double accuracy = 0;
    double seconds = 0;
};

struct CapacityReport {
    CapacityBenchConfig config;
    std::vector<CapacityRow> rows;
    double total_seconds = 0;

    /// Accuracy for (dim, method); throws when absent.
    double accuracy(std::size_t dim, const std::string& method) const;
};

/// Labelled data from the benchmark's generator: rows grouped by class.
struct LabelledData {
    Matrix x;
    std::vector<std::size_t> labels;
};

/// Draws points_per_class rows per class in ambient_dim.
LabelledData capacity_synthesize(const CapacityBenchConfig& cfg);

/// Nearest-prototype classifier with one learnable prototype per class,
/// trained by full-batch Adam on class-weighted cross-entropy over cosine
/// similarities divided by the temperature. The epoch with the best
/// validation accuracy is kept. Returns one prototype per row.
Matrix fit_prototypes(const LabelledData& train, const LabelledData& val, std::size_t n_classes, double lr,
                      std::size_t epochs, double temperature);

/// Index of the prototype with the highest cosine similarity for each row.
std::vector<std::size_t> classify_by_prototype(const Matrix& prototypes, const Matrix& x);

CapacityReport capacity_bench(const CapacityBenchConfig& cfg);

/// TSV with the configuration as leading "# key\tvalue" lines, then
/// "dim\tmethod\taccuracy\tseconds" rows.
std::string format_capacity_tsv(const CapacityReport& report, bool with_timing = true);
std::string format_capacity_json(const CapacityReport& report, bool with_timing = true);

}  // namespace gvs
