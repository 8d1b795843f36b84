#include "tea/io_formats.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tea {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedManifest, what);
}

ObjectKind parse_kind(const std::string& s) {
  for (ObjectKind k : {ObjectKind::vocab_matrix, ObjectKind::embedding_set,
                       ObjectKind::prompt_embedding, ObjectKind::checkpoint_series}) {
    if (to_string(k) == s) return k;
  }
  malformed("unknown kind '" + s + "'");
}

bool is_integer(const ordered_json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

std::vector<double> flatten(const CheckpointSeries& series) {
  std::vector<double> out;
  out.reserve(series.size() * series.rows() * series.dim());
  for (const auto& f : series.frames()) out.insert(out.end(), f.data().begin(), f.data().end());
  return out;
}

MatrixKind matrix_kind(ObjectKind k) {
  return k == ObjectKind::vocab_matrix ? MatrixKind::vocab_matrix : MatrixKind::embedding_set;
}

void write_object(const Manifest& manifest, std::span<const double> values, const fs::path& dir) {
  const std::string bytes = encode_f32le(values);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  write_file_atomic(dir / manifest.data_file, bytes);
  write_file_atomic(dir / kManifestName, render_manifest(manifest));
}

}  // namespace

std::string_view to_string(ObjectKind kind) noexcept {
  switch (kind) {
    case ObjectKind::vocab_matrix: return "vocab_matrix";
    case ObjectKind::embedding_set: return "embedding_set";
    case ObjectKind::prompt_embedding: return "prompt_embedding";
    case ObjectKind::checkpoint_series: return "checkpoint_series";
  }
  return "unknown";
}

std::uint64_t Manifest::element_count() const {
  std::uint64_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

// ---------------------------------------------------------------------------
// Manifest

Manifest parse_manifest(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) malformed("manifest must be a JSON object");

  Manifest m;
  if (!doc.contains("version") || !is_integer(doc["version"])) malformed("missing integer 'version'");
  const auto version = doc["version"].get<std::int64_t>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "manifest version " + std::to_string(version) +
                                                   ", this reader supports " +
                                                   std::to_string(kFormatVersion));
  }
  m.version = kFormatVersion;

  if (!doc.contains("kind") || !doc["kind"].is_string()) malformed("missing string 'kind'");
  m.kind = parse_kind(doc["kind"].get<std::string>());

  if (!doc.contains("dtype") || !doc["dtype"].is_string()) malformed("missing string 'dtype'");
  m.dtype = doc["dtype"].get<std::string>();
  if (m.dtype != "f32le") malformed("unsupported dtype '" + m.dtype + "'");

  if (!doc.contains("shape") || !doc["shape"].is_array()) malformed("missing array 'shape'");
  const std::size_t rank = m.kind == ObjectKind::checkpoint_series ? 3 : 2;
  if (doc["shape"].size() != rank) {
    malformed("kind " + std::string(to_string(m.kind)) + " needs a rank-" + std::to_string(rank) +
              " shape");
  }
  constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;
  std::uint64_t total = 1;
  for (const auto& s : doc["shape"]) {
    if (!is_integer(s) || s.get<std::int64_t>() <= 0) malformed("shape entries must be positive integers");
    const auto v = s.get<std::uint64_t>();
    if (v > kMaxElements / total) malformed("shape is implausibly large");
    total *= v;
    m.shape.push_back(v);
  }
  const std::uint64_t row_axis = m.shape[rank - 2];

  if (doc.contains("labels")) {
    const auto& labels = doc["labels"];
    if (!labels.is_array()) malformed("'labels' must be an array");
    if (labels.size() != row_axis) {
      malformed("labels length " + std::to_string(labels.size()) + " does not match row axis " +
                std::to_string(row_axis));
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& l : labels) {
      if (!l.is_string()) malformed("labels must be strings");
      auto s = l.get<std::string>();
      if (!seen.insert(s).second) malformed("duplicate label '" + s + "'");
      out.push_back(std::move(s));
    }
    m.labels = std::move(out);
  }

  if (doc.contains("steps")) {
    if (m.kind != ObjectKind::checkpoint_series) malformed("'steps' only applies to checkpoint_series");
    const auto& steps = doc["steps"];
    if (!steps.is_array() || steps.size() != m.shape[0]) {
      malformed("'steps' must be an array of length " + std::to_string(m.shape[0]));
    }
    std::vector<std::int64_t> out;
    for (const auto& s : steps) {
      if (!s.is_number_integer()) malformed("steps must be integers");
      out.push_back(s.get<std::int64_t>());
      if (out.size() > 1 && out.back() <= out[out.size() - 2]) {
        malformed("steps must be strictly increasing");
      }
    }
    m.steps = std::move(out);
  }

  if (!doc.contains("data_file") || !doc["data_file"].is_string()) malformed("missing string 'data_file'");
  m.data_file = doc["data_file"].get<std::string>();
  const fs::path rel(m.data_file);
  if (m.data_file.empty() || rel.is_absolute() || rel.has_root_name()) {
    malformed("data_file must be a relative path");
  }
  for (const auto& part : rel) {
    if (part == "..") malformed("data_file may not leave the manifest directory");
  }
  if (rel.filename() == kManifestName) malformed("data_file may not be the manifest itself");
  return m;
}

std::string render_manifest(const Manifest& m) {
  ordered_json doc;
  doc["version"] = m.version;
  doc["kind"] = std::string(to_string(m.kind));
  doc["dtype"] = m.dtype;
  doc["shape"] = m.shape;
  if (m.labels) doc["labels"] = *m.labels;
  if (m.steps) doc["steps"] = *m.steps;
  doc["data_file"] = m.data_file;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Binary payload

std::string encode_f32le(std::span<const double> values) {
  std::string out(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const bool fits = std::isfinite(v) && std::abs(v) <= std::numeric_limits<float>::max();
    const float f = fits ? static_cast<float>(v) : 0.0f;
    if (!fits || !std::isfinite(f)) {
      throw Error(ErrorCode::InvalidVector, "value at flat index " + std::to_string(i) +
                                                " is not representable as a finite float32");
    }
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  return out;
}

std::vector<double> decode_f32le(std::string_view bytes) {
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorCode::CorruptData, "payload of " + std::to_string(bytes.size()) +
                                            " bytes is not a whole number of float32 values");
  }
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    }
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f)) {
      throw Error(ErrorCode::CorruptData, "non-finite value at flat index " + std::to_string(i));
    }
    out[i] = static_cast<double>(f);
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw Error(ErrorCode::IoError, "cannot move output into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failure on " + path.string());
  return buf.str();
}

// ---------------------------------------------------------------------------
// Objects

Manifest write(const EmbeddingMatrix& matrix, const fs::path& dir) {
  if (matrix.rows() == 0) throw Error(ErrorCode::EmptySet, "cannot store an empty matrix");
  Manifest m;
  m.kind = matrix.kind() == MatrixKind::vocab_matrix ? ObjectKind::vocab_matrix
                                                     : ObjectKind::embedding_set;
  m.shape = {matrix.rows(), matrix.dim()};
  if (matrix.has_labels()) m.labels = matrix.labels();
  write_object(m, matrix.data(), dir);
  return m;
}

Manifest write(const PromptEmbedding& prompt, const fs::path& dir) {
  Manifest m;
  m.kind = ObjectKind::prompt_embedding;
  m.shape = {prompt.length(), prompt.dim()};
  if (prompt.positions().has_labels()) m.labels = prompt.positions().labels();
  write_object(m, prompt.positions().data(), dir);
  return m;
}

Manifest write(const CheckpointSeries& series, const fs::path& dir) {
  if (series.empty() || series.rows() == 0) {
    throw Error(ErrorCode::EmptySet, "cannot store an empty checkpoint series");
  }
  Manifest m;
  m.kind = ObjectKind::checkpoint_series;
  m.shape = {series.size(), series.rows(), series.dim()};
  if (series.frame(0).has_labels()) m.labels = series.frame(0).labels();
  m.steps = series.steps();
  write_object(m, flatten(series), dir);
  return m;
}

Manifest write(const StoredObject& object, const fs::path& dir) {
  return std::visit([&](const auto& o) { return write(o, dir); }, object);
}

Manifest read_manifest(const fs::path& dir) {
  return parse_manifest(read_file(dir / kManifestName));
}

StoredObject read(const fs::path& dir) {
  const Manifest m = read_manifest(dir);
  const fs::path data_path = dir / m.data_file;
  std::error_code ec;
  if (!fs::is_regular_file(data_path, ec)) {
    throw Error(ErrorCode::IoError, "data file " + data_path.string() + " is missing");
  }
  const auto actual = fs::file_size(data_path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot stat " + data_path.string());
  if (actual != m.byte_size()) {
    throw Error(ErrorCode::CorruptData, data_path.string() + ": expected " +
                                            std::to_string(m.byte_size()) + " bytes, found " +
                                            std::to_string(actual));
  }
  auto values = decode_f32le(read_file(data_path));
  if (values.size() != m.element_count()) {
    throw Error(ErrorCode::CorruptData, "data file changed size while reading");
  }
  auto labels = m.labels.value_or(std::vector<std::string>{});

  switch (m.kind) {
    case ObjectKind::vocab_matrix:
    case ObjectKind::embedding_set:
      return EmbeddingMatrix(m.shape[0], m.shape[1], std::move(values), std::move(labels),
                             matrix_kind(m.kind));
    case ObjectKind::prompt_embedding:
      return PromptEmbedding(EmbeddingMatrix(m.shape[0], m.shape[1], std::move(values),
                                             std::move(labels)));
    case ObjectKind::checkpoint_series: {
      const std::size_t k = m.shape[0];
      const std::size_t rows = m.shape[1];
      const std::size_t d = m.shape[2];
      std::vector<std::int64_t> steps = m.steps.value_or(std::vector<std::int64_t>{});
      if (steps.empty()) {
        for (std::size_t t = 0; t < k; ++t) steps.push_back(static_cast<std::int64_t>(t));
      }
      std::vector<EmbeddingMatrix> frames;
      frames.reserve(k);
      for (std::size_t t = 0; t < k; ++t) {
        const auto first = values.begin() + static_cast<std::ptrdiff_t>(t * rows * d);
        frames.emplace_back(rows, d, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(rows * d)),
                            labels);
      }
      return CheckpointSeries(std::move(steps), std::move(frames));
    }
  }
  malformed("unknown kind");
}

EmbeddingMatrix read_matrix(const fs::path& dir) {
  auto obj = read(dir);
  if (auto* m = std::get_if<EmbeddingMatrix>(&obj)) return std::move(*m);
  if (auto* p = std::get_if<PromptEmbedding>(&obj)) return p->positions();
  malformed(dir.string() + " holds a checkpoint series, expected a matrix");
}

PromptEmbedding read_prompt(const fs::path& dir) {
  auto obj = read(dir);
  if (auto* p = std::get_if<PromptEmbedding>(&obj)) return std::move(*p);
  malformed(dir.string() + " does not hold a prompt_embedding");
}

CheckpointSeries read_series(const fs::path& dir) {
  auto obj = read(dir);
  if (auto* s = std::get_if<CheckpointSeries>(&obj)) return std::move(*s);
  malformed(dir.string() + " does not hold a checkpoint_series");
}

}  // namespace tea
