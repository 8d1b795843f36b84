#include <cstring>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "tea/io_formats.hpp"
#include "tea/report.hpp"

using namespace tea;
using testing::code_of;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = TEA_FIXTURE_DIR;

void put_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Little-endian float32 bytes built by hand, independent of encode_f32le.
std::string le_bytes(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  std::string s(4, '\0');
  for (int b = 0; b < 4; ++b) s[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  return s;
}

}  // namespace

TEST_CASE("float32 layout") {
  const std::string one = encode_f32le(std::vector<double>{1.0});
  CHECK(one == std::string("\x00\x00\x80\x3F", 4));
  CHECK(encode_f32le(std::vector<double>{-2.5}) == le_bytes(-2.5f));
  CHECK(decode_f32le(one) == std::vector<double>{1.0});
  CHECK(code_of([] { encode_f32le(std::vector<double>{1e39}); }) == ErrorCode::InvalidVector);
  CHECK(code_of([] { encode_f32le(std::vector<double>{std::nan("")}); }) == ErrorCode::InvalidVector);
  CHECK(code_of([] { decode_f32le(std::string(5, '\0')); }) == ErrorCode::CorruptData);
  CHECK(code_of([] { decode_f32le(std::string("\x00\x00\x80\x7F", 4)); }) == ErrorCode::CorruptData);
}

TEST_CASE("2x3 matrix on disk") {
  testing::TempDir dir("m23");
  auto m = EmbeddingMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  auto manifest = write(m, dir.path());
  CHECK(manifest.byte_size() == 24);
  const auto bytes = read_file(dir / "data.f32");
  REQUIRE(bytes.size() == 24);
  CHECK(bytes.substr(0, 4) == std::string("\x00\x00\x80\x3F", 4));
  CHECK(read_matrix(dir.path()) == m);

  // Same bytes and manifest text as the independently written fixture.
  CHECK(bytes == read_file(kFixtures / "golden_matrix" / "data.f32"));
  CHECK(read_file(dir / "manifest.json") == read_file(kFixtures / "golden_matrix" / "manifest.json"));
}

TEST_CASE("manifest key order") {
  testing::TempDir dir("order");
  auto f = EmbeddingMatrix::from_rows({{1, 0}, {0, 1}}, {"a", "b"});
  write(CheckpointSeries({0, 3}, {f, f}), dir.path());
  const auto text = read_file(dir / "manifest.json");
  std::size_t last = 0;
  for (const char* key : {"\"version\"", "\"kind\"", "\"dtype\"", "\"shape\"", "\"labels\"", "\"steps\"",
                          "\"data_file\""}) {
    const auto at = text.find(key);
    REQUIRE(at != std::string::npos);
    CHECK(at > last);
    last = at;
  }
}

TEST_CASE("golden fixtures") {
  auto m = read_matrix(kFixtures / "golden_matrix");
  CHECK(testing::to_rows(m) == oracle::Mat{{1, 2, 3}, {4, 5, 6}});

  auto vocab = read_matrix(kFixtures / "golden_vocab");
  CHECK(vocab.kind() == MatrixKind::vocab_matrix);
  CHECK(vocab.index_of("sks") == 3);
  CHECK(testing::to_rows(vocab)[3] == oracle::Vec{0.125, 1024.0});
  CHECK(testing::to_rows(vocab)[0] == oracle::Vec{0.5, -0.25});

  auto series = read_series(kFixtures / "golden_series");
  CHECK(series.size() == 3);
  CHECK(series.steps() == std::vector<std::int64_t>{0, 100, 200});
  CHECK(series.frame(2).row(1)[3] == 23.0 - 11.5);
  CHECK(series.frame(0).labels() == std::vector<std::string>{"v_star", "concept"});
  CHECK(fs::file_size(kFixtures / "golden_series" / "data.f32") == 96);

  auto prompt = read_prompt(kFixtures / "golden_prompt");
  CHECK(prompt.length() == 3);
  CHECK(prompt.position(2)[0] == 0.5);

  CHECK(code_of([] { read_prompt(kFixtures / "golden_matrix"); }) == ErrorCode::MalformedManifest);
  CHECK(code_of([] { read_series(kFixtures / "golden_matrix"); }) == ErrorCode::MalformedManifest);
  CHECK(code_of([] { read_matrix(kFixtures / "golden_series"); }) == ErrorCode::MalformedManifest);
}

TEST_CASE("round trips") {
  testing::TempDir dir("rt");
  std::mt19937_64 rng(71);
  std::normal_distribution<float> g(0.0f, 3.0f);
  auto rows = [&](std::size_t n, std::size_t d) {
    oracle::Mat m(n, oracle::Vec(d));
    for (auto& r : m)
      for (double& x : r) x = g(rng);
    return m;
  };

  auto vocab = EmbeddingMatrix::from_rows(rows(5, 3), {"a", "b", "c", "d", "e"}, MatrixKind::vocab_matrix);
  write(vocab, dir / "vocab");
  CHECK(read_matrix(dir / "vocab") == vocab);

  PromptEmbedding prompt(testing::to_matrix(rows(4, 2)));
  write(prompt, dir / "prompt");
  CHECK(read_prompt(dir / "prompt") == prompt);

  CheckpointSeries series({-5, 0, 12}, {testing::to_matrix(rows(2, 4)), testing::to_matrix(rows(2, 4)),
                                        testing::to_matrix(rows(2, 4))});
  auto manifest = write(StoredObject(series), dir / "series");
  CHECK(manifest.shape == std::vector<std::uint64_t>{3, 2, 4});
  CHECK(fs::file_size(dir / "series" / "data.f32") == 96);
  CHECK(read_series(dir / "series") == series);

  CHECK(code_of([&] { write(EmbeddingMatrix(0, 3, {}), dir / "empty"); }) == ErrorCode::EmptySet);
}

TEST_CASE("series without steps counts from zero") {
  testing::TempDir dir("nosteps");
  write(EmbeddingMatrix::from_rows({{1, 2}}), dir.path());
  put_text(dir / "manifest.json",
           R"({"version":1,"kind":"checkpoint_series","dtype":"f32le","shape":[2,1,1],"data_file":"data.f32"})");
  auto s = read_series(dir.path());
  CHECK(s.steps() == std::vector<std::int64_t>{0, 1});
  CHECK(s.frame(1).row(0)[0] == 2.0);
}

TEST_CASE("data file problems") {
  testing::TempDir dir("corrupt");
  write(EmbeddingMatrix::from_rows({{1, 2, 3}, {4, 5, 6}}), dir.path());
  const auto data = read_file(dir / "data.f32");

  put_text(dir / "data.f32", data.substr(0, 20));
  try {
    read(dir.path());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptData);
    CHECK(std::string(e.what()).find("expected 24 bytes, found 20") != std::string::npos);
  }

  put_text(dir / "data.f32", data + "xxxx");
  CHECK(code_of([&] { read(dir.path()); }) == ErrorCode::CorruptData);

  std::string nan_payload = data;
  nan_payload.replace(8, 4, std::string("\x00\x00\xC0\x7F", 4));
  put_text(dir / "data.f32", nan_payload);
  CHECK(code_of([&] { read(dir.path()); }) == ErrorCode::CorruptData);

  fs::remove(dir / "data.f32");
  CHECK(code_of([&] { read(dir.path()); }) == ErrorCode::IoError);
  CHECK(code_of([&] { read(dir / "nowhere"); }) == ErrorCode::IoError);
}

TEST_CASE("manifest validation") {
  const std::string good =
      R"({"version":1,"kind":"embedding_set","dtype":"f32le","shape":[2,3],"data_file":"data.f32"})";
  CHECK(parse_manifest(good).shape == std::vector<std::uint64_t>{2, 3});

  auto patched = [&](const std::string& key, const nlohmann::json& value) {
    auto j = nlohmann::json::parse(good);
    if (value.is_discarded()) {
      j.erase(key);
    } else {
      j[key] = value;
    }
    return j.dump();
  };
  const nlohmann::json drop(nlohmann::json::value_t::discarded);

  CHECK(code_of([&] { parse_manifest(patched("version", 99)); }) == ErrorCode::UnsupportedVersion);
  CHECK(code_of([&] { parse_manifest(patched("version", 0)); }) == ErrorCode::UnsupportedVersion);

  const std::vector<std::pair<std::string, nlohmann::json>> malformed_cases{
      {"version", "1"},
      {"version", 1.5},
      {"version", drop},
      {"kind", "tensor"},
      {"kind", 3},
      {"dtype", "f64le"},
      {"dtype", drop},
      {"shape", {2}},
      {"shape", {2, 3, 4}},
      {"shape", {0, 3}},
      {"shape", {-2, 3}},
      {"shape", {2.5, 3}},
      {"shape", {1u << 30, 1u << 30}},
      {"shape", "2x3"},
      {"labels", {"a"}},
      {"labels", {"a", "a"}},
      {"labels", {"a", 2}},
      {"labels", "ab"},
      {"steps", {0, 1}},
      {"data_file", "/etc/passwd"},
      {"data_file", "../data.f32"},
      {"data_file", "manifest.json"},
      {"data_file", ""},
      {"data_file", drop},
  };
  for (const auto& [key, value] : malformed_cases) {
    CAPTURE(key);
    CAPTURE(value.dump());
    CHECK(code_of([&] { parse_manifest(patched(key, value)); }) == ErrorCode::MalformedManifest);
  }
  for (const char* text : {"", "{", "[]", "null", "{\"version\":1} trailing", "\xff\xfe"}) {
    CHECK(code_of([&] { parse_manifest(text); }) == ErrorCode::MalformedManifest);
  }

  const std::string series =
      R"({"version":1,"kind":"checkpoint_series","dtype":"f32le","shape":[2,1,1],)";
  CHECK(code_of([&] { parse_manifest(series + R"("steps":[3,3],"data_file":"d"})"); }) ==
        ErrorCode::MalformedManifest);
  CHECK(code_of([&] { parse_manifest(series + R"("steps":[0],"data_file":"d"})"); }) ==
        ErrorCode::MalformedManifest);
  CHECK(parse_manifest(series + R"("steps":[-4,9],"data_file":"sub/d.bin"})").steps ==
        std::vector<std::int64_t>{-4, 9});
}

TEST_CASE("manifest render and parse agree") {
  Manifest m;
  m.kind = ObjectKind::checkpoint_series;
  m.shape = {2, 2, 5};
  m.labels = std::vector<std::string>{"x", "y"};
  m.steps = std::vector<std::int64_t>{1, 7};
  auto back = parse_manifest(render_manifest(m));
  CHECK(back.shape == m.shape);
  CHECK(back.labels == m.labels);
  CHECK(back.steps == m.steps);
  CHECK(back.data_file == "data.f32");
}

// --- reports -----------------------------------------------------------------

TEST_CASE("real formatting keeps 17 significant digits") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(1.0) == "1");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("report formats follow the extension") {
  CHECK(format_for_path("x.csv") == ReportFormat::csv);
  CHECK(format_for_path("x.json") == ReportFormat::json);
  CHECK(format_for_path("x") == ReportFormat::json);
}

TEST_CASE("trajectory csv") {
  DriftTrajectory empty;
  CHECK(render_report(empty, ReportFormat::csv) == "step,norm_ratio,cosine\n");

  DriftTrajectory t;
  t.steps = {0, 10};
  t.norm_ratio = {1.0, 1.25};
  t.cosine = {1.0, 0.5};
  CHECK(render_report(t, ReportFormat::csv) == "step,norm_ratio,cosine\n0,1,1\n10,1.25,0.5\n");
  auto j = nlohmann::json::parse(render_report(t, ReportFormat::json));
  CHECK(j["norm_ratio"][1].get<double>() == 1.25);
  CHECK(j["level"] == "token");
}

TEST_CASE("sweep csv") {
  SweepResults s;
  for (double a : {0.2, 0.3})
    for (double b : {1.0, 1.5}) s.rows.push_back({a, b, Metric::l2, a * b});
  const auto csv = render_report(s, ReportFormat::csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.substr(0, csv.find('\n')) == "alpha,beta,metric,value");
  CHECK(csv.find("0.20000000000000001,1.5,l2,0.30000000000000004") != std::string::npos);
}

TEST_CASE("drift report") {
  DriftReport r;
  r.set_names = {"a", "b,c"};
  r.matrix.size = 2;
  r.matrix.cells.resize(4);
  r.matrix.cells[1].result = SetDistanceResult{0.1, {}, 3, 3, "n"};
  r.matrix.cells[2].error = "PairingMismatch: sizes";
  r.matrix.cells[2].error_code = ErrorCode::PairingMismatch;
  const auto csv = render_report(r, ReportFormat::csv);
  CHECK(csv ==
        "set_a,set_b,kind,metric,value,n_a,n_b,notes,error\n"
        "a,\"b,c\",inter,l2,0.10000000000000001,3,3,n,\n"
        "\"b,c\",a,inter,l2,,,,,PairingMismatch: sizes\n");
  auto j = nlohmann::json::parse(render_report(r, ReportFormat::json));
  CHECK(j["cells"].size() == 2);
  CHECK(j["cells"][0]["value"].get<double>() == 0.1);
  CHECK(j["cells"][1]["value"].is_null());
  CHECK(j["config"]["metric"] == "l2");
}

TEST_CASE("histogram report") {
  NormHistogram h;
  h.bin_edges = {0.0, 0.5, 1.0};
  h.counts = {3, 1};
  h.highlighted = {{"sks", 0.9, 75.0}};
  CHECK(render_report(h, ReportFormat::csv) ==
        "row_type,label,bin_lower,bin_upper,count,norm,percentile\n"
        "bin,,0,0.5,3,,\n"
        "bin,,0.5,1,1,,\n"
        "highlight,sks,,,,0.90000000000000002,75\n");
}

TEST_CASE("reports are written atomically and deterministically") {
  testing::TempDir dir("report");
  DriftTrajectory t;
  t.steps = {0};
  t.norm_ratio = {2.0};
  t.cosine = {0.25};
  emit_report(t, ReportFormat::json, dir / "r.json");
  const auto first = read_file(dir / "r.json");
  emit_report(t, ReportFormat::json, dir / "r.json");
  CHECK(read_file(dir / "r.json") == first);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path())) ++entries;
  CHECK(entries == 1);
  CHECK(code_of([&] { emit_report(t, ReportFormat::csv, dir / "missing" / "r.csv"); }) == ErrorCode::IoError);
}
