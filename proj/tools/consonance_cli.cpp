// consonance: batch front end for feature dumps, model fits, feature
// importance and sampling.
//
// Exit codes: 0 success, 1 internal error, 2 input error.

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "consonance/corpus.hpp"
#include "consonance/features.hpp"
#include "consonance/importance.hpp"
#include "consonance/io.hpp"
#include "consonance/model.hpp"
#include "consonance/random.hpp"

namespace fs = std::filesystem;
using namespace consonance;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct CommonArgs {
  RunConfig config;
  std::string corpus;
  std::string format = "auto";
  std::string features = "all";
  std::string virtual_pitch = "similarity";
  std::string cache_dir;
  std::string output;
};

void add_model_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--rho", args.config.spectrum.rho, "Harmonic roll-off")->capture_default_str();
  cmd->add_option("--sigma", args.config.spectrum.sigma, "Gaussian smoothing SD in semitones")->capture_default_str();
  cmd->add_option("--harmonics", args.config.spectrum.n_harmonics, "Harmonics per tone")->capture_default_str();
  cmd->add_option("--bins", args.config.spectrum.n_bins, "Spectrum bins (multiple of 12)")->capture_default_str();
  cmd->add_option("--virtual-pitch", args.virtual_pitch, "Virtual pitch spectrum: similarity | literal")
      ->capture_default_str();
  cmd->add_option("--threads", args.config.threads, "OpenMP threads (0 = default)");
  cmd->add_option("--cache-dir", args.cache_dir, "Directory for spectrum and feature caches");
}

void add_corpus_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("corpus", args.corpus, "Corpus file (plain or JSONL)")->required();
  cmd->add_option("--format", args.format, "plain | jsonl | auto")->capture_default_str();
  cmd->add_flag("--keep-repeats", args.config.keep_repeats,
                "Skip removal of exact chord repetitions (for synthetic corpora)");
}

void finalize(CommonArgs& args) {
  args.config.mode = parse_virtual_pitch_mode(args.virtual_pitch);
  args.config.mask = parse_mask(args.features);
  if (!args.cache_dir.empty()) args.config.cache_dir = fs::path(args.cache_dir);
  try {
    args.config.spectrum.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (args.config.threads > 0) omp_set_num_threads(args.config.threads);
}

std::vector<Piece> load_pieces(const CommonArgs& args) {
  const fs::path path(args.corpus);
  const CorpusFormat format = args.format == "auto" ? guess_format(path) : parse_format(args.format);
  CorpusFile corpus = parse_corpus(path, format);
  std::vector<Piece> pieces;
  pieces.reserve(corpus.pieces.size());
  for (const Piece& p : corpus.pieces) pieces.push_back(args.config.keep_repeats ? p : preprocess(p));
  return pieces;
}

// Writes to the named file, or stdout when the name is empty or "-".
template <typename Writer>
void emit(const std::string& target, Writer&& write) {
  if (target.empty() || target == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(target);
  if (!out) throw InputError("cannot write " + target);
  write(out);
}

std::shared_ptr<const FeatureSet> build_features(const RunConfig& config) {
  return FeatureSet::create(config.feature_options());
}

int run_features(CommonArgs& args) {
  finalize(args);
  const std::vector<Piece> pieces = load_pieces(args);
  const auto features = build_features(args.config);
  emit(args.output, [&](std::ostream& out) { write_features_csv(out, pieces, *features, args.config); });
  return 0;
}

int run_fit(CommonArgs& args) {
  finalize(args);
  const std::vector<Piece> pieces = load_pieces(args);
  const auto features = build_features(args.config);
  FitOptions options;
  options.ridge = args.config.ridge;
  const FitResult result = fit(make_design(collapse(pieces), features), args.config.mask, options);
  emit(args.output, [&](std::ostream& out) { out << fit_result_json(result, args.config).dump(2) << '\n'; });
  std::cerr << "cross_entropy " << format_double(result.cross_entropy) << " nats/chord"
            << (result.converged ? "" : " (not converged)") << '\n';
  return 0;
}

int run_importance(CommonArgs& args, const std::string& output_dir, bool per_piece) {
  finalize(args);
  const std::vector<Piece> pieces = load_pieces(args);
  if (args.config.bootstrap > 0 && pieces.size() < 2) {
    throw InputError("bootstrap needs at least two pieces; pass --bootstrap 0 for point estimates");
  }
  const auto features = build_features(args.config);
  fs::create_directories(output_dir);

  FitOptions fit_options;
  fit_options.ridge = args.config.ridge;
  BootstrapResult result;
  if (args.config.bootstrap > 0) {
    BootstrapOptions options;
    options.replicates = args.config.bootstrap;
    options.seed = args.config.seed;
    options.level = args.config.level;
    options.fit = fit_options;
    result = bootstrap(pieces, features, options);
  } else {
    result.estimate = feature_importance(collapse(pieces), features, fit_options);
    result.level = args.config.level;
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < result.estimate.features.size(); ++j) {
      std::array<Interval, kNumMeasures> row;
      for (int m = 0; m < kNumMeasures; ++m) {
        row[static_cast<std::size_t>(m)] = {result.estimate.value(static_cast<int>(j), static_cast<Measure>(m)), nan, nan};
      }
      result.intervals.push_back(row);
    }
  }
  emit((fs::path(output_dir) / "importance.csv").string(),
       [&](std::ostream& out) { write_importance_csv(out, result, args.config); });
  emit((fs::path(output_dir) / "importance.json").string(),
       [&](std::ostream& out) { out << importance_json(result, args.config).dump(2) << '\n'; });
  if (result.flagged) {
    std::cerr << "warning: " << result.failed_replicates << " of " << result.replicates
              << " bootstrap replicates had non-converged fits\n";
  }

  if (per_piece) {
    FitOptions piece_options;
    piece_options.ridge = args.config.composition_ridge;
    const CompositionImportance comp = per_composition_importance(pieces, features, piece_options);
    emit((fs::path(output_dir) / "composition.csv").string(),
         [&](std::ostream& out) { write_composition_csv(out, comp, args.config); });
    emit((fs::path(output_dir) / "composition.json").string(),
         [&](std::ostream& out) { out << composition_json(comp, args.config).dump(2) << '\n'; });
    for (const std::string& id : comp.skipped) std::cerr << "skipped " << id << ": fewer than two chords\n";
  }
  return 0;
}

int run_sample(CommonArgs& args, const std::string& weights_path, int n, int length) {
  finalize(args);
  if (n < 1) throw InputError("--n must be at least 1");
  if (length < 1) throw InputError("--length must be at least 1");
  const WeightsFile weights = read_weights(weights_path);
  const auto features = build_features(args.config);
  const EnergyModel model(features, weights.weights, weights.mask);
  CorpusFile corpus;
  for (int i = 0; i < n; ++i) {
    Piece piece{"piece-" + std::to_string(i + 1), {}};
    for (PitchClassSet c : sample_sequence(model, length, stream_seed(args.config.seed, static_cast<std::uint64_t>(i)))) {
      piece.events.push_back({c, std::nullopt});
    }
    corpus.pieces.push_back(std::move(piece));
  }
  emit(args.output, [&](std::ostream& out) { write_corpus(out, corpus, CorpusFormat::kPlain); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consonance features and energy-based chord sequence models"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string output_dir = ".";
  bool per_piece = false;
  std::string weights_path;
  int n = 1, length = 20;

  CLI::App* features = app.add_subcommand("features", "Per-transition raw and standardized feature table (CSV)");
  add_corpus_flags(features, args);
  add_model_flags(features, args);
  features->add_option("-o,--output", args.output, "Output CSV (default stdout)");

  CLI::App* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit; writes the result as JSON");
  add_corpus_flags(fit_cmd, args);
  add_model_flags(fit_cmd, args);
  fit_cmd->add_option("--features", args.features, "Active features: all | none | comma-separated names")
      ->capture_default_str();
  fit_cmd->add_option("--ridge", args.config.ridge, "L2 penalty")->capture_default_str();
  fit_cmd->add_option("-o,--output", args.output, "Output JSON (default stdout)");

  CLI::App* importance = app.add_subcommand("importance", "Feature importance with bootstrap intervals");
  add_corpus_flags(importance, args);
  add_model_flags(importance, args);
  importance->add_option("--bootstrap", args.config.bootstrap, "Bootstrap replicates (0 = none)")
      ->capture_default_str();
  importance->add_option("--level", args.config.level, "Confidence level")->capture_default_str();
  importance->add_option("--seed", args.config.seed, "Random seed")->capture_default_str();
  importance->add_option("--ridge", args.config.ridge, "L2 penalty for corpus fits")->capture_default_str();
  importance->add_option("--composition-ridge", args.config.composition_ridge, "L2 penalty for per-piece fits")
      ->capture_default_str();
  importance->add_flag("--per-piece", per_piece, "Also fit each composition separately");
  importance->add_option("--output-dir", output_dir, "Directory for CSV/JSON outputs")->capture_default_str();

  CLI::App* sample = app.add_subcommand("sample", "Sample a plain-format corpus from a weights file");
  add_model_flags(sample, args);
  sample->add_option("--weights", weights_path, "Weights JSON (fit output or {feature: weight})")->required();
  sample->add_option("--n", n, "Number of pieces")->capture_default_str();
  sample->add_option("--length", length, "Chords per piece")->capture_default_str();
  sample->add_option("--seed", args.config.seed, "Random seed")->capture_default_str();
  sample->add_option("-o,--output", args.output, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (app.got_subcommand(features)) return run_features(args);
    if (app.got_subcommand(fit_cmd)) return run_fit(args);
    if (app.got_subcommand(importance)) return run_importance(args, output_dir, per_piece);
    if (app.got_subcommand(sample)) return run_sample(args, weights_path, n, length);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
