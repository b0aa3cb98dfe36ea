#pragma once

#include <filesystem>

#include "gvs/flow_model.hpp"

namespace gvs {

inline constexpr int kCheckpointVersion = 1;

/// Writes <base>.manifest.json (architecture, tensor table with byte
/// offsets, standardization statistics, format version) and
/// <base>.params.f32 (parameters then buffers as little-endian floats).
/// Values are rounded to 32-bit floats; a model whose values are already
/// float-representable (every trained model) round-trips bit-exactly.
void save_checkpoint(const FlowModel& model, const std::filesystem::path& base);

/// Rejects unknown format versions and tensor tables that disagree with the
/// architecture.
FlowModel load_checkpoint(const std::filesystem::path& base);

}  // namespace gvs
