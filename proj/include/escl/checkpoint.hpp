#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "escl/encoder.hpp"
#include "escl/optimizer.hpp"
#include "escl/vocabulary.hpp"

namespace escl {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Everything needed to evaluate an encoder or resume its training.
struct Checkpoint {
  EncoderParams params;
  Vocabulary vocab;
  std::uint64_t step = 0;
  std::optional<OptimizerState> optimizer;
};

// Binary container: magic "ESCLCKPT", u32 format version, u64 header length,
// a JSON header (dims, vocabulary, step, tensor names and shapes), then the
// raw little-endian IEEE-754 doubles of each tensor in header order.
// Writes go to a temporary file that is renamed into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

// Throws DataError for unreadable or malformed files and DimensionError when
// the stored tensors disagree with the stored dimensions or vocabulary.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes `contents` to `path` through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace escl
