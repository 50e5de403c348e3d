#pragma once

// Binary feature (FMAT) and label (LVEC) files plus CSV feature import.
//
// FMAT layout, all little-endian:
//   offset 0   "FMAT" magic (0x46 0x4D 0x41 0x54)
//   offset 4   uint16 version = 1
//   offset 6   uint8  dtype (1 = binary32, 2 = binary64)
//   offset 7   uint8  reserved = 0
//   offset 8   uint64 rows
//   offset 16  uint64 cols
//   offset 24  rows * cols elements, row-major, in the declared dtype
//
// LVEC layout, all little-endian:
//   offset 0   "LVEC" magic (0x4C 0x56 0x45 0x43)
//   offset 4   uint16 version = 1
//   offset 6   uint16 reserved = 0
//   offset 8   uint64 count
//   offset 16  uint64 num_classes
//   offset 24  count * uint32 labels
//
// Readers require the file length to match the header exactly. Functions are
// pure apart from the file they touch; writing the same path from two threads
// at once is the caller's problem.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rgcinit/numerics.hpp"

namespace rgcinit {

/// N x d feature matrix; always binary64 in memory.
using FeatureMatrix = Matrix;

enum class Dtype : std::uint8_t { kBinary32 = 1, kBinary64 = 2 };

struct LabelVector {
  std::vector<std::uint32_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::uint32_t operator[](std::size_t i) const { return labels[i]; }
  bool operator==(const LabelVector&) const = default;
};

struct LoadedFeatures {
  FeatureMatrix values;
  Dtype stored_as = Dtype::kBinary64;
};

/// Rejects empty shapes and NaN/Inf entries (message names the element index).
void validate_features(const FeatureMatrix& m);
/// Rejects an empty vector, labels outside [0, K) and K == 0.
void validate_labels(const LabelVector& y);
/// Rejects a feature/label row-count mismatch.
void check_paired(const FeatureMatrix& x, const LabelVector& y);

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m, Dtype dtype = Dtype::kBinary64);
LoadedFeatures decode_features(std::span<const std::uint8_t> bytes,
                               const std::string& origin = "<memory>");

std::vector<std::uint8_t> encode_labels(const LabelVector& y);
LabelVector decode_labels(std::span<const std::uint8_t> bytes,
                          const std::string& origin = "<memory>");

void write_features(const FeatureMatrix& m, const std::filesystem::path& path,
                    Dtype dtype = Dtype::kBinary64);
FeatureMatrix read_features(const std::filesystem::path& path);
LoadedFeatures read_features_with_dtype(const std::filesystem::path& path);

void write_labels(const LabelVector& y, const std::filesystem::path& path);
LabelVector read_labels(const std::filesystem::path& path);

/// Comma-separated numeric rows; blank trailing lines are ignored.
FeatureMatrix parse_csv_features(std::string_view text, bool has_header,
                                 const std::string& origin = "<memory>");
FeatureMatrix read_csv_features(const std::filesystem::path& path, bool has_header);

// Whole-file helpers shared with the text formats.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace rgcinit
