#pragma once

#include <string>

#include "sldl/pipeline.hpp"

namespace sldl {

/// Model files carry a one-line JSON header (format version, dimensions,
/// config snapshot, block directory) followed by raw little-endian binary
/// blocks: float64 matrices written row by row, plus int64 arrays for the
/// sparse training-label structure. Matrices round-trip bit-exactly.
inline constexpr int kModelFormatVersion = 1;

void save_model(const std::string& path, const TrainedModel& model);

/// Throws ParseError for unknown versions, inconsistent dimensions, or
/// truncated payloads; IoError when the file cannot be read.
TrainedModel load_model(const std::string& path);

}  // namespace sldl
