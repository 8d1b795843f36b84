#pragma once

// On-disk interchange layout. A stored object is a directory holding
//
//   manifest.json   {"version": 1, "kind": ..., "dtype": "f32le",
//                    "shape": [rows, dim] | [steps, rows, dim],
//                    "labels": [...]?, "steps": [...]?, "data_file": "data.f32"}
//   data.f32        little-endian IEEE-754 binary32, row-major, no header
//
// Keys are written in exactly that order. Values are widened to double on
// read; writing narrows to float, so write(read(x)) reproduces x bit for bit.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tea/embedding.hpp"

namespace tea {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kDefaultDataFile = "data.f32";

enum class ObjectKind { vocab_matrix, embedding_set, prompt_embedding, checkpoint_series };

std::string_view to_string(ObjectKind kind) noexcept;

struct Manifest {
  int version = kFormatVersion;
  ObjectKind kind = ObjectKind::embedding_set;
  std::string dtype = "f32le";
  std::vector<std::uint64_t> shape;
  std::optional<std::vector<std::string>> labels;
  std::optional<std::vector<std::int64_t>> steps;
  std::string data_file = kDefaultDataFile;

  std::uint64_t element_count() const;
  std::uint64_t byte_size() const { return 4 * element_count(); }
};

/// Parses and validates a manifest document. Throws MalformedManifest or
/// UnsupportedVersion.
Manifest parse_manifest(std::string_view json_text);
std::string render_manifest(const Manifest& manifest);

using StoredObject = std::variant<EmbeddingMatrix, PromptEmbedding, CheckpointSeries>;

Manifest write(const EmbeddingMatrix& matrix, const std::filesystem::path& dir);
Manifest write(const PromptEmbedding& prompt, const std::filesystem::path& dir);
Manifest write(const CheckpointSeries& series, const std::filesystem::path& dir);
Manifest write(const StoredObject& object, const std::filesystem::path& dir);

Manifest read_manifest(const std::filesystem::path& dir);
StoredObject read(const std::filesystem::path& dir);

/// Typed readers. read_matrix accepts vocab_matrix, embedding_set and
/// prompt_embedding (as its L x d position matrix); the others require their
/// own kind. A mismatch throws MalformedManifest.
EmbeddingMatrix read_matrix(const std::filesystem::path& dir);
PromptEmbedding read_prompt(const std::filesystem::path& dir);
CheckpointSeries read_series(const std::filesystem::path& dir);

/// Little-endian binary32 encoding of `values`. Throws InvalidVector when a
/// value is non-finite or overflows float.
std::string encode_f32le(std::span<const double> values);
std::vector<double> decode_f32le(std::string_view bytes);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace tea
