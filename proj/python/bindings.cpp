#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tea/drift_metrics.hpp"
#include "tea/drift_sim.hpp"
#include "tea/error.hpp"
#include "tea/io_formats.hpp"
#include "tea/norm_analysis.hpp"
#include "tea/slerp_adjust.hpp"

namespace py = pybind11;
using namespace tea;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw Error(ErrorCode::InvalidVector, "expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

EmbeddingMatrix to_matrix(const Array& a, std::vector<std::string> labels = {},
                          MatrixKind kind = MatrixKind::embedding_set) {
  if (a.ndim() != 2) throw Error(ErrorCode::InvalidVector, "expected a 2-d array");
  return EmbeddingMatrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                         std::vector<double>(a.data(), a.data() + a.size()), std::move(labels), kind);
}

Array from_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array from_matrix(const EmbeddingMatrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.dim())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Array from_series(const CheckpointSeries& s) {
  Array out({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(s.rows()),
             static_cast<py::ssize_t>(s.dim())});
  double* dst = out.mutable_data();
  for (const auto& f : s.frames()) dst = std::copy(f.data().begin(), f.data().end(), dst);
  return out;
}

AdjustParams make_params(double alpha, double beta, const std::string& zero_norm) {
  AdjustParams p;
  p.alpha = alpha;
  p.beta = beta;
  if (zero_norm == "error") {
    p.zero_norm_policy = ZeroNormPolicy::error;
  } else if (zero_norm == "passthrough") {
    p.zero_norm_policy = ZeroNormPolicy::passthrough;
  } else {
    throw Error(ErrorCode::InvalidParameter, "zero_norm must be 'error' or 'passthrough'");
  }
  return p;
}

MetricConfig make_config(const std::string& metric, double temperature, const std::string& covariance,
                         double shrinkage, const std::string& similarity, bool include_self, bool squared,
                         const std::string& reference) {
  MetricConfig cfg;
  auto m = parse_metric(metric);
  if (!m) throw Error(ErrorCode::InvalidParameter, "unknown metric '" + metric + "'");
  cfg.metric = *m;
  cfg.temperature = temperature;
  if (covariance == "diagonal") {
    cfg.covariance_mode = CovarianceMode::diagonal;
  } else if (covariance == "full") {
    cfg.covariance_mode = CovarianceMode::full_shrinkage;
  } else {
    throw Error(ErrorCode::InvalidParameter, "covariance must be 'diagonal' or 'full'");
  }
  cfg.shrinkage_lambda = shrinkage;
  if (similarity == "cosine") {
    cfg.similarity = Similarity::cosine;
  } else if (similarity == "neg_l2") {
    cfg.similarity = Similarity::neg_l2;
  } else {
    throw Error(ErrorCode::InvalidParameter, "similarity must be 'cosine' or 'neg_l2'");
  }
  cfg.exclude_self = !include_self;
  cfg.squared_l2 = squared;
  if (reference == "second") {
    cfg.mahalanobis_reference = MahalanobisReference::second;
  } else if (reference == "first") {
    cfg.mahalanobis_reference = MahalanobisReference::first;
  } else {
    throw Error(ErrorCode::InvalidParameter, "reference must be 'first' or 'second'");
  }
  return cfg;
}

py::dict load(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir);
  const auto obj = read(dir);
  py::dict out;
  out["kind"] = std::string(to_string(manifest.kind));
  out["labels"] = manifest.labels;
  if (auto* m = std::get_if<EmbeddingMatrix>(&obj)) {
    out["data"] = from_matrix(*m);
  } else if (auto* p = std::get_if<PromptEmbedding>(&obj)) {
    out["data"] = from_matrix(p->positions());
  } else {
    const auto& s = std::get<CheckpointSeries>(obj);
    out["data"] = from_series(s);
    out["steps"] = s.steps();
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Embedding adjustment, set metrics and drift simulation.";

  static py::exception<Error> tea_error(m, "TeaError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(tea_error)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(tea_error.ptr(), inst.ptr());
    }
  });

  m.def(
      "adjust_token",
      [](const Array& v, const Array& c, double alpha, double beta) {
        return from_vector(adjust_token(to_vector(v), to_vector(c), make_params(alpha, beta, "error")).values());
      },
      py::arg("v_star"), py::arg("concept"), py::arg("alpha") = 0.2, py::arg("beta") = 1.5);

  m.def(
      "adjust_rows",
      [](const Array& input, const Array& reference, double alpha, double beta, const std::string& zero_norm) {
        return from_matrix(adjust_rows(to_matrix(input), to_matrix(reference), make_params(alpha, beta, zero_norm)));
      },
      py::arg("input"), py::arg("reference"), py::arg("alpha") = 0.2, py::arg("beta") = 1.5,
      py::arg("zero_norm") = "error");

  m.def(
      "adjust_prompt",
      [](const Array& p_star, const Array& p_c, double alpha, double beta, const std::string& zero_norm,
         std::optional<std::size_t> active_positions) {
        auto out = adjust_prompt(PromptEmbedding(to_matrix(p_star)), PromptEmbedding(to_matrix(p_c)),
                                 make_params(alpha, beta, zero_norm), active_positions);
        return from_matrix(out.positions());
      },
      py::arg("p_star"), py::arg("p_concept"), py::arg("alpha") = 0.2, py::arg("beta") = 1.5,
      py::arg("zero_norm") = "passthrough", py::arg("active_positions") = py::none());

  m.def(
      "beta_heuristic", [](const Array& v, const Array& c) { return beta_heuristic(to_vector(v), to_vector(c)); },
      py::arg("v_star"), py::arg("concept"));

  m.def(
      "inter_set_distance",
      [](const Array& p, const Array& q, const std::string& metric, double temperature,
         const std::string& covariance, double shrinkage, const std::string& similarity, bool include_self,
         bool squared, const std::string& reference) {
        return inter_set_distance(to_matrix(p), to_matrix(q),
                                  make_config(metric, temperature, covariance, shrinkage, similarity,
                                              include_self, squared, reference))
            .value;
      },
      py::arg("p"), py::arg("q"), py::arg("metric") = "l2", py::arg("temperature") = 1.0,
      py::arg("covariance") = "diagonal", py::arg("shrinkage") = 0.1, py::arg("similarity") = "cosine",
      py::arg("include_self") = false, py::arg("squared") = true, py::arg("reference") = "second");

  m.def(
      "intra_set_distance",
      [](const Array& p, const std::string& metric, double temperature, const std::string& covariance,
         double shrinkage, const std::string& similarity, bool include_self, bool squared) {
        return intra_set_distance(to_matrix(p), make_config(metric, temperature, covariance, shrinkage,
                                                            similarity, include_self, squared, "second"))
            .value;
      },
      py::arg("p"), py::arg("metric") = "l2", py::arg("temperature") = 1.0, py::arg("covariance") = "diagonal",
      py::arg("shrinkage") = 0.1, py::arg("similarity") = "cosine", py::arg("include_self") = false,
      py::arg("squared") = true);

  m.def("percentile_rank", &percentile_rank, py::arg("value"), py::arg("others"));

  m.def(
      "norm_histogram",
      [](const Array& vocab, std::vector<std::string> labels, const std::vector<std::string>& highlight,
         std::size_t bins, bool exclude_highlighted) {
        HistogramOptions opt;
        opt.bins = bins;
        opt.exclude_highlighted = exclude_highlighted;
        auto h = norm_histogram(to_matrix(vocab, std::move(labels), MatrixKind::vocab_matrix), highlight, opt);
        py::dict out;
        out["bin_edges"] = h.bin_edges;
        out["counts"] = h.counts;
        py::list hl;
        for (const auto& t : h.highlighted) {
          py::dict d;
          d["label"] = t.label;
          d["norm"] = t.norm;
          d["percentile"] = t.percentile;
          hl.append(d);
        }
        out["highlighted"] = hl;
        return out;
      },
      py::arg("vocab"), py::arg("labels"), py::arg("highlight"), py::arg("bins") = 50,
      py::arg("exclude_highlighted") = false);

  m.def(
      "simulate_token",
      [](const Array& base, std::size_t steps, double gamma, double omega, std::uint64_t seed, double noise) {
        DriftSpec spec;
        spec.base = EmbeddingVector(to_vector(base));
        spec.steps = steps;
        spec.norm_growth = gamma;
        spec.rotation_rate = omega;
        spec.plane_seed = seed;
        spec.noise_sigma = noise;
        spec.noise_seed = seed + 1;
        const auto sim = simulate_token(spec);
        return py::make_tuple(sim.series.steps(), from_series(sim.series));
      },
      py::arg("base"), py::arg("steps"), py::arg("gamma") = 0.0, py::arg("omega") = 0.0, py::arg("seed") = 0,
      py::arg("noise") = 0.0);

  m.def("load", &load, py::arg("dir"));

  m.def(
      "save_matrix",
      [](const std::filesystem::path& dir, const Array& data, std::vector<std::string> labels, bool vocab) {
        write(to_matrix(data, std::move(labels), vocab ? MatrixKind::vocab_matrix : MatrixKind::embedding_set),
              dir);
      },
      py::arg("dir"), py::arg("data"), py::arg("labels") = std::vector<std::string>{},
      py::arg("vocab") = false);

  m.def(
      "save_prompt",
      [](const std::filesystem::path& dir, const Array& data) { write(PromptEmbedding(to_matrix(data)), dir); },
      py::arg("dir"), py::arg("data"));

  m.def(
      "save_series",
      [](const std::filesystem::path& dir, const Array& data, std::vector<std::int64_t> steps,
         const std::vector<std::string>& labels) {
        if (data.ndim() != 3) throw Error(ErrorCode::InvalidVector, "expected a 3-d array");
        const auto k = static_cast<std::size_t>(data.shape(0));
        const auto n = static_cast<std::size_t>(data.shape(1));
        const auto d = static_cast<std::size_t>(data.shape(2));
        std::vector<EmbeddingMatrix> frames;
        for (std::size_t t = 0; t < k; ++t) {
          const double* src = data.data() + t * n * d;
          frames.emplace_back(n, d, std::vector<double>(src, src + n * d), labels);
        }
        write(CheckpointSeries(std::move(steps), std::move(frames)), dir);
      },
      py::arg("dir"), py::arg("data"), py::arg("steps"), py::arg("labels") = std::vector<std::string>{});

  m.def(
      "validate",
      [](const std::filesystem::path& dir) {
        read(dir);
        return render_manifest(read_manifest(dir));
      },
      py::arg("dir"), "Reads and checks a stored object; returns its manifest text.");
}
