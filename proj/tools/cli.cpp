#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <random>

#include "CLI11.hpp"
#include "tea/drift_metrics.hpp"
#include "tea/drift_sim.hpp"
#include "tea/io_formats.hpp"
#include "tea/norm_analysis.hpp"
#include "tea/prompt_sets.hpp"
#include "tea/report.hpp"
#include "tea/slerp_adjust.hpp"
#include "tea/sweep.hpp"

namespace tea::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for flag combinations CLI11 cannot express on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter:
      return kExitUsage;
    case ErrorCode::ZeroNormVector:
    case ErrorCode::AntipodalVectors:
    case ErrorCode::SingularCovariance:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

struct MetricFlags {
  std::string metric = "l2";
  double temperature = 1.0;
  std::string covariance = "diagonal";
  double shrinkage = 0.1;
  std::string similarity = "cosine";
  bool include_self = false;
  bool unsquared = false;
  std::string mahalanobis_reference = "second";

  void attach(CLI::App& app) {
    app.add_option("--metric", metric, "Distance family")
        ->check(CLI::IsMember({"l2", "hausdorff", "mahalanobis", "kl"}));
    app.add_option("--temperature", temperature, "Softmax temperature for kl")
        ->check(CLI::PositiveNumber);
    app.add_option("--covariance", covariance, "Mahalanobis covariance model")
        ->check(CLI::IsMember({"diagonal", "full"}));
    app.add_option("--shrinkage", shrinkage, "Shrinkage toward scaled identity (full covariance)")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--similarity", similarity, "Similarity inside the kl softmax")
        ->check(CLI::IsMember({"cosine", "neg_l2"}));
    app.add_flag("--include-self", include_self, "Keep the anchor in its own softmax row");
    app.add_flag("--unsquared", unsquared, "Average plain rather than squared L2 distances");
    app.add_option("--mahalanobis-reference", mahalanobis_reference,
                   "Set supplying mean and covariance for inter-set Mahalanobis")
        ->check(CLI::IsMember({"first", "second"}));
  }

  MetricConfig config() const {
    MetricConfig c;
    c.metric = *parse_metric(metric);
    c.temperature = temperature;
    c.covariance_mode = covariance == "full" ? CovarianceMode::full_shrinkage : CovarianceMode::diagonal;
    c.shrinkage_lambda = shrinkage;
    c.similarity = similarity == "neg_l2" ? Similarity::neg_l2 : Similarity::cosine;
    c.exclude_self = !include_self;
    c.squared_l2 = !unsquared;
    c.mahalanobis_reference =
        mahalanobis_reference == "first" ? MahalanobisReference::first : MahalanobisReference::second;
    return c;
  }
};

ReportFormat resolve_format(const std::string& flag, const fs::path& out) {
  if (flag == "json") return ReportFormat::json;
  if (flag == "csv") return ReportFormat::csv;
  return format_for_path(out);
}

// ---------------------------------------------------------------------------
// adjust

struct AdjustFlags {
  std::string input;
  std::string concept_label;
  std::string token;
  std::string reference;
  double alpha = 0.2;
  double beta = 1.5;
  bool beta_auto = false;
  std::string level = "token";
  std::string out;
  std::optional<std::size_t> active_positions;
  std::string zero_norm;
};

AdjustParams adjust_params(const AdjustFlags& f) {
  AdjustParams p = f.level == "prompt" ? AdjustParams::prompt_defaults() : AdjustParams::token_defaults();
  p.alpha = f.alpha;
  p.beta = f.beta;
  if (f.zero_norm == "error") p.zero_norm_policy = ZeroNormPolicy::error;
  if (f.zero_norm == "passthrough") p.zero_norm_policy = ZeroNormPolicy::passthrough;
  return p;
}

// Replaces one labelled row of `frame` with its adjustment toward another.
double adjust_labelled_row(EmbeddingMatrix& frame, const AdjustFlags& f, AdjustParams params) {
  const std::size_t v = frame.index_of(f.token);
  const std::size_t c = frame.index_of(f.concept_label);
  if (f.beta_auto) params.beta = beta_heuristic(frame.row(v), frame.row(c));
  frame.set_row(v, adjust_token(frame.row(v), frame.row(c), params).values());
  return params.beta;
}

int run_adjust(const AdjustFlags& f, std::ostream& out) {
  AdjustParams params = adjust_params(f);
  params.validate();

  if (f.level == "prompt") {
    if (f.reference.empty()) throw UsageError("--level prompt needs --reference");
    const auto star = read_prompt(f.input);
    const auto ref = read_prompt(f.reference);
    if (f.beta_auto) {
      params.beta = beta_heuristic(star.positions().data(), ref.positions().data());
    }
    const auto adjusted = adjust_prompt(star, ref, params, f.active_positions);
    write(adjusted, f.out);
    out << "adjusted " << adjusted.length() << " positions: alpha=" << format_real(params.alpha)
        << " beta=" << format_real(params.beta) << "\n";
    return kExitOk;
  }

  if (!f.concept_label.empty()) {
    if (f.token.empty()) throw UsageError("--concept needs --token naming the learned row");
    auto obj = read(f.input);
    if (auto* series = std::get_if<CheckpointSeries>(&obj)) {
      std::vector<EmbeddingMatrix> frames = series->frames();
      for (auto& frame : frames) adjust_labelled_row(frame, f, params);
      write(CheckpointSeries(series->steps(), std::move(frames)), f.out);
      out << "adjusted '" << f.token << "' toward '" << f.concept_label << "' in " << series->size()
          << " checkpoints: alpha=" << format_real(params.alpha) << "\n";
      return kExitOk;
    }
    EmbeddingMatrix matrix = read_matrix(f.input);
    const double beta = adjust_labelled_row(matrix, f, params);
    write(matrix, f.out);
    out << "adjusted '" << f.token << "' toward '" << f.concept_label
        << "': alpha=" << format_real(params.alpha) << " beta=" << format_real(beta) << "\n";
    return kExitOk;
  }

  if (f.reference.empty()) throw UsageError("adjust needs --concept or --reference");
  const auto input = read_matrix(f.input);
  const auto reference = read_matrix(f.reference);
  EmbeddingMatrix adjusted = input;
  if (f.beta_auto) {
    if (input.rows() != reference.rows()) {
      throw Error(ErrorCode::PairingMismatch, "input and reference row counts differ");
    }
    for (std::size_t i = 0; i < input.rows(); ++i) {
      AdjustParams row_params = params;
      row_params.beta = beta_heuristic(input.row(i), reference.row(i));
      adjusted.set_row(i, adjust_token(input.row(i), reference.row(i), row_params).values());
    }
  } else {
    adjusted = adjust_rows(input, reference, params);
  }
  write(adjusted, f.out);
  out << "adjusted " << adjusted.rows() << " rows: alpha=" << format_real(params.alpha)
      << (f.beta_auto ? std::string(" beta=auto") : " beta=" + format_real(params.beta)) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// drift

struct DriftFlags {
  std::string set_a;
  std::string set_b;
  std::vector<std::string> more_sets;
  bool intra = false;
  std::string out;
  std::string format = "auto";
  MetricFlags metric;
};

int run_drift(const DriftFlags& f, std::ostream& out) {
  std::vector<std::string> names{f.set_a, f.set_b};
  names.insert(names.end(), f.more_sets.begin(), f.more_sets.end());
  std::vector<EmbeddingMatrix> sets;
  for (const auto& n : names) sets.push_back(read_matrix(n));

  DriftReport report;
  report.set_names = names;
  report.config = f.metric.config();
  report.matrix = pairwise_set_matrix(sets, report.config, f.intra);
  emit_report(report, resolve_format(f.format, f.out), f.out);

  std::optional<ErrorCode> first_error;
  for (std::size_t i = 0; i < report.matrix.size; ++i) {
    for (std::size_t j = 0; j < report.matrix.size; ++j) {
      const auto& cell = report.matrix.at(i, j);
      if (cell.result) {
        out << (i == j ? "intra " : "inter ") << names[i] << " | " << names[j] << " : "
            << format_real(cell.result->value) << "\n";
      } else if (cell.error_code) {
        out << names[i] << " | " << names[j] << " : " << cell.error << "\n";
        if (!first_error) first_error = cell.error_code;
      }
    }
  }
  return first_error ? exit_code_for(*first_error) : kExitOk;
}

// ---------------------------------------------------------------------------
// norms

struct NormsFlags {
  std::string vocab;
  std::vector<std::string> highlight;
  std::size_t bins = 50;
  bool exclude_highlighted = false;
  std::string series;
  std::string token = kSimulatedTokenLabel;
  std::string concept_label = kSimulatedConceptLabel;
  std::string series_star;
  std::string series_ref;
  std::string out;
  std::string format = "auto";
};

int run_norms(const NormsFlags& f, std::ostream& out) {
  const int modes = !f.vocab.empty() + !f.series.empty() + !f.series_star.empty();
  if (modes != 1) throw UsageError("norms needs exactly one of --vocab, --series, --series-star");
  const auto format = resolve_format(f.format, f.out);

  if (!f.vocab.empty()) {
    const auto vocab = read_matrix(f.vocab);
    const auto hist = norm_histogram(vocab, f.highlight, {f.bins, f.exclude_highlighted});
    emit_report(hist, format, f.out);
    for (const auto& h : hist.highlighted) {
      out << h.label << ": norm " << format_real(h.norm) << ", percentile "
          << format_real(h.percentile) << "\n";
    }
    return kExitOk;
  }

  DriftTrajectory trajectory;
  if (!f.series.empty()) {
    trajectory = token_trajectory(read_series(f.series), f.token, f.concept_label);
  } else {
    if (f.series_ref.empty()) throw UsageError("--series-star needs --series-ref");
    trajectory = prompt_trajectory(read_series(f.series_star), read_series(f.series_ref));
  }
  emit_report(trajectory, format, f.out);
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    out << "step " << trajectory.steps[i] << ": norm " << format_real(trajectory.norm_ratio[i])
        << ", cosine " << format_real(trajectory.cosine[i]) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepFlags {
  std::string input;
  std::string reference;
  std::vector<double> alphas = SweepGrid{}.alphas;
  std::vector<double> betas = SweepGrid{}.betas;
  std::string out;
  std::string format = "auto";
  MetricFlags metric;
};

int run_sweep(const SweepFlags& f, std::ostream& out) {
  const auto input = read_matrix(f.input);
  const auto reference = read_matrix(f.reference);
  const auto results = sweep(input, reference, {f.alphas, f.betas}, f.metric.config());
  emit_report(results, resolve_format(f.format, f.out), f.out);
  for (const auto& r : results.rows) {
    out << "alpha=" << format_real(r.alpha) << " beta=" << format_real(r.beta) << " "
        << to_string(r.metric) << "=" << format_real(r.value) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
  double gamma = 0.0;
  double omega = 0.0;
  std::size_t steps = 10;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double max_angle = kMaxDriftAngle;
  std::size_t positions = 0;
  std::vector<std::size_t> drift_positions;
  std::string out;
};

int run_simulate(const SimulateFlags& f, std::ostream& out) {
  if (f.dim == 0) throw UsageError("--dim must be >= 1");
  std::mt19937_64 rng(f.seed + 2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> base(f.dim);
  for (double& x : base) x = gauss(rng);

  DriftSpec spec;
  spec.base = EmbeddingVector(base);
  spec.steps = f.steps;
  spec.norm_growth = f.gamma;
  spec.rotation_rate = f.omega;
  spec.max_angle = f.max_angle;
  spec.plane_seed = f.seed;
  spec.noise_sigma = f.noise;
  spec.noise_seed = f.seed + 1;

  std::vector<std::string> notes;
  if (f.positions == 0) {
    auto sim = simulate_token(spec);
    write(sim.series, f.out);
    notes = sim.notes;
    out << "wrote " << sim.series.size() << " checkpoints (labels '" << kSimulatedTokenLabel
        << "', '" << kSimulatedConceptLabel << "') to " << f.out << "\n";
  } else {
    std::vector<std::size_t> drifting = f.drift_positions;
    if (drifting.empty()) {
      for (std::size_t i = 0; i < f.positions; ++i) drifting.push_back(i);
    }
    auto sim = simulate_prompt(spec, f.positions, drifting);
    write(sim.drifting, fs::path(f.out) / "drifting");
    write(sim.reference, fs::path(f.out) / "reference");
    notes = sim.notes;
    out << "wrote drifting/ and reference/ series with " << sim.drifting.size()
        << " checkpoints to " << f.out << "\n";
  }
  for (const auto& n : notes) out << "note: " << n << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_validate(const std::string& dir, std::ostream& out) {
  const auto manifest = read_manifest(dir);
  (void)read(dir);
  out << "ok: " << to_string(manifest.kind) << " shape [";
  for (std::size_t i = 0; i < manifest.shape.size(); ++i) {
    out << (i ? ", " : "") << manifest.shape[i];
  }
  out << "]\n";
  return kExitOk;
}

struct PromptsFlags {
  std::string templates;
  std::string keyword;
  std::string concept_word;
  std::string out_a;
  std::string out_b;
};

int run_prompts(const PromptsFlags& f, std::ostream& out) {
  PromptSetSpec spec{load_templates(f.templates), f.keyword, f.concept_word, SetKind::contextual};
  const auto with_keyword = construct(spec, SlotFill::keyword);
  const auto with_concept = construct(spec, SlotFill::concept_word);
  write_prompts(with_keyword, f.out_a);
  write_prompts(with_concept, f.out_b);
  out << "wrote " << with_keyword.size() << " paired prompts\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding adjustment and drift diagnostics", "tea"};
  app.require_subcommand(1);

  AdjustFlags adjust;
  auto* adjust_cmd = app.add_subcommand("adjust", "Rescale and rotate embeddings toward a concept");
  adjust_cmd->add_option("--input", adjust.input, "Stored object to adjust")->required();
  auto* concept_opt =
      adjust_cmd->add_option("--concept", adjust.concept_label, "Label of the concept row");
  adjust_cmd->add_option("--token", adjust.token, "Label of the learned row (with --concept)");
  auto* reference_opt =
      adjust_cmd->add_option("--reference", adjust.reference, "Index-paired reference object");
  concept_opt->excludes(reference_opt);
  adjust_cmd->add_option("--alpha", adjust.alpha, "Rotation factor in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  auto* beta_opt = adjust_cmd->add_option("--beta", adjust.beta, "Target norm as a multiple of |c|")
                       ->check(CLI::PositiveNumber);
  adjust_cmd->add_flag("--beta-auto", adjust.beta_auto, "Midpoint heuristic for beta")
      ->excludes(beta_opt);
  adjust_cmd->add_option("--level", adjust.level, "token or prompt")
      ->check(CLI::IsMember({"token", "prompt"}));
  adjust_cmd->add_option("--active-positions", adjust.active_positions,
                         "Prompt level: adjust only the first N positions");
  adjust_cmd->add_option("--zero-norm", adjust.zero_norm, "error or passthrough")
      ->check(CLI::IsMember({"error", "passthrough"}));
  adjust_cmd->add_option("--out", adjust.out, "Output directory")->required();

  DriftFlags drift;
  auto* drift_cmd = app.add_subcommand("drift", "Pairwise set distances");
  drift_cmd->add_option("--set-a", drift.set_a, "First embedding set")->required();
  drift_cmd->add_option("--set-b", drift.set_b, "Second embedding set")->required();
  drift_cmd->add_option("--set-c", drift.more_sets, "Further sets (repeatable)");
  drift_cmd->add_flag("--intra", drift.intra, "Fill the diagonal with intra-set distances");
  drift_cmd->add_option("--out", drift.out, "Report file (.json or .csv)")->required();
  drift_cmd->add_option("--format", drift.format)->check(CLI::IsMember({"auto", "json", "csv"}));
  drift.metric.attach(*drift_cmd);

  NormsFlags norms;
  auto* norms_cmd = app.add_subcommand("norms", "Vocabulary norm histogram or drift trajectory");
  norms_cmd->add_option("--vocab", norms.vocab, "Vocabulary matrix");
  norms_cmd->add_option("--highlight", norms.highlight, "Tokens to rank")->delimiter(',');
  norms_cmd->add_option("--bins", norms.bins, "Histogram bins")->check(CLI::PositiveNumber);
  norms_cmd->add_flag("--exclude-highlighted", norms.exclude_highlighted);
  norms_cmd->add_option("--series", norms.series, "Token-level checkpoint series");
  norms_cmd->add_option("--token", norms.token, "Learned row label in --series");
  norms_cmd->add_option("--concept", norms.concept_label, "Concept row label in --series");
  norms_cmd->add_option("--series-star", norms.series_star, "Prompt-level series for the keyword");
  norms_cmd->add_option("--series-ref", norms.series_ref, "Prompt-level series for the concept");
  norms_cmd->add_option("--out", norms.out, "Report file (.json or .csv)")->required();
  norms_cmd->add_option("--format", norms.format)->check(CLI::IsMember({"auto", "json", "csv"}));

  SweepFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "Alpha/beta grid evaluation");
  sweep_cmd->add_option("--input", sweep_flags.input, "Set to adjust")->required();
  sweep_cmd->add_option("--reference", sweep_flags.reference, "Index-paired reference set")->required();
  sweep_cmd->add_option("--alphas", sweep_flags.alphas)->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--betas", sweep_flags.betas)->delimiter(',')->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep_flags.out, "Report file (.json or .csv)")->required();
  sweep_cmd->add_option("--format", sweep_flags.format)->check(CLI::IsMember({"auto", "json", "csv"}));
  sweep_flags.metric.attach(*sweep_cmd);

  SimulateFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Synthetic drift trajectory");
  sim_cmd->add_option("--gamma", sim.gamma, "Norm growth per step");
  sim_cmd->add_option("--omega", sim.omega, "Rotation per step (rad)");
  sim_cmd->add_option("--steps", sim.steps)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--dim", sim.dim)->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--noise", sim.noise, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--max-angle", sim.max_angle)->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--positions", sim.positions, "Prompt length; 0 simulates a single token");
  sim_cmd->add_option("--drift-positions", sim.drift_positions)->delimiter(',');
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();

  std::string validate_dir;
  auto* validate_cmd = app.add_subcommand("validate", "Check manifest and data integrity");
  validate_cmd->add_option("--dir", validate_dir)->required();

  PromptsFlags prompts;
  auto* prompts_cmd = app.add_subcommand("prompts", "Build paired keyword/concept prompt lists");
  prompts_cmd->add_option("--templates", prompts.templates)->required();
  prompts_cmd->add_option("--keyword", prompts.keyword)->required();
  prompts_cmd->add_option("--concept", prompts.concept_word)->required();
  prompts_cmd->add_option("--out-a", prompts.out_a, "Prompts with the keyword")->required();
  prompts_cmd->add_option("--out-b", prompts.out_b, "Prompts with the concept")->required();

  std::vector<const char*> raw;
  raw.reserve(argv.size());
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (adjust_cmd->parsed()) return run_adjust(adjust, out);
    if (drift_cmd->parsed()) return run_drift(drift, out);
    if (norms_cmd->parsed()) return run_norms(norms, out);
    if (sweep_cmd->parsed()) return run_sweep(sweep_flags, out);
    if (sim_cmd->parsed()) return run_simulate(sim, out);
    if (validate_cmd->parsed()) return run_validate(validate_dir, out);
    if (prompts_cmd->parsed()) return run_prompts(prompts, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return kExitUsage;
}

}  // namespace tea::cli
