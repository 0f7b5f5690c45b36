#include "consonance/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace consonance {

using nlohmann::json;

namespace {

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double display_value(std::string_view feature, Measure m, double v) {
  return (m == Measure::kWeight && display_sign_reversed(feature)) ? -v : v;
}

json report_json(const ImportanceReport& r) {
  json out;
  out["level"] = r.level;
  if (!r.piece_id.empty()) out["piece_id"] = r.piece_id;
  out["null_cross_entropy"] = r.null_cross_entropy;
  out["full_cross_entropy"] = r.full_cross_entropy;
  out["non_converged_fits"] = r.non_converged;
  out["n_events"] = r.full_fit.n_events;
  json features = json::object();
  for (std::size_t j = 0; j < r.features.size(); ++j) {
    json f;
    for (int m = 0; m < kNumMeasures; ++m) {
      f[std::string(measure_name(static_cast<Measure>(m)))] = r.features[j].get(static_cast<Measure>(m));
    }
    f["display_weight"] = display_value(r.feature_names[j], Measure::kWeight, r.features[j].weight);
    features[r.feature_names[j]] = f;
  }
  out["features"] = features;
  return out;
}

}  // namespace

json RunConfig::to_json() const {
  json out;
  out["spectrum"] = {{"rho", spectrum.rho},
                     {"sigma", spectrum.sigma},
                     {"n_harmonics", spectrum.n_harmonics},
                     {"n_bins", spectrum.n_bins}};
  out["virtual_pitch_mode"] = std::string(to_string(mode));
  out["features"] = mask_to_string(mask);
  out["ridge"] = ridge;
  out["composition_ridge"] = composition_ridge;
  out["bootstrap"] = bootstrap;
  out["seed"] = seed;
  out["level"] = level;
  out["keep_repeats"] = keep_repeats;
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_json().dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return hex16(h);
}

FeatureSetOptions RunConfig::feature_options() const {
  FeatureSetOptions o;
  o.spectrum = spectrum;
  o.mode = mode;
  o.cache_dir = cache_dir;
  return o;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string mask_to_string(FeatureMask mask) {
  if (mask.empty()) return "none";
  std::string out;
  for (int j = 0; j < kNumFeatures; ++j) {
    if (!mask.has(j)) continue;
    if (!out.empty()) out += ',';
    out += feature_name(j);
  }
  return out;
}

FeatureMask parse_mask(std::string_view text) {
  if (text == "all") return FeatureMask::all(kNumFeatures);
  if (text == "none" || text.empty()) return FeatureMask::none();
  FeatureMask mask;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view name = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    mask = mask.with(feature_index(name));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return mask;
}

json fit_result_json(const FitResult& fit, const RunConfig& config) {
  json out;
  json weights = json::object();
  json display = json::object();
  for (int j = 0; j < kNumFeatures; ++j) {
    if (!fit.mask.has(j)) continue;
    const std::string name(feature_name(j));
    weights[name] = fit.weights[static_cast<std::size_t>(j)];
    display[name] = display_value(name, Measure::kWeight, fit.weights[static_cast<std::size_t>(j)]);
  }
  out["weights"] = weights;
  out["display_weights"] = display;
  out["cross_entropy"] = fit.cross_entropy;
  out["cost"] = fit.cost;
  out["n_events"] = fit.n_events;
  out["converged"] = fit.converged;
  out["iterations"] = fit.iterations;
  out["gradient_norm"] = fit.gradient_norm;
  out["ridge"] = fit.ridge;
  out["features"] = mask_to_string(fit.mask);
  out["config"] = config.to_json();
  out["config_hash"] = config.hash();
  return out;
}

WeightsFile read_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open weights file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": malformed JSON: " + e.what());
  }
  const json* weights = &doc;
  if (doc.is_object() && doc.contains("weights")) weights = &doc["weights"];
  if (!weights->is_object()) throw InputError(path.string() + ": expected a JSON object of weights");
  WeightsFile out;
  out.mask = FeatureMask::none();
  for (const auto& [name, value] : weights->items()) {
    int j = 0;
    try {
      j = feature_index(name);
    } catch (const InputError&) {
      throw InputError(path.string() + ": unknown feature '" + name + "'");
    }
    if (!value.is_number()) throw InputError(path.string() + ": weight for '" + name + "' is not a number");
    const double w = value.get<double>();
    if (!std::isfinite(w)) throw InputError(path.string() + ": weight for '" + name + "' is not finite");
    out.weights[static_cast<std::size_t>(j)] = w;
    out.mask = out.mask.with(j);
  }
  return out;
}

void write_features_csv(std::ostream& out, std::span<const Piece> pieces, const FeatureSet& features,
                        const RunConfig& config) {
  out << "# config_hash=" << config.hash() << '\n';
  out << "piece_id,position,prev,cur";
  for (int j = 0; j < kNumFeatures; ++j) out << ',' << feature_name(j);
  for (int j = 0; j < kNumFeatures; ++j) out << ',' << feature_name(j) << "_std";
  out << '\n';
  for (const Piece& piece : pieces) {
    std::optional<PitchClassSet> prev;
    for (std::size_t i = 0; i < piece.events.size(); ++i) {
      const PitchClassSet cur = piece.events[i].chord;
      const FeatureVector raw = features.raw_transition_features(prev, cur);
      const FeatureVector z = features.transition_features(prev, cur);
      out << quoted(piece.id) << ',' << i << ',' << quoted(prev ? format_chord(*prev) : "") << ','
          << quoted(format_chord(cur));
      for (double v : raw.values) out << ',' << format_double(v);
      for (double v : z.values) out << ',' << format_double(v);
      out << '\n';
      prev = cur;
    }
  }
}

void write_importance_csv(std::ostream& out, const BootstrapResult& result, const RunConfig& config) {
  out << "# config_hash=" << config.hash() << '\n';
  out << "feature,measure,estimate,lower,upper,display_estimate,display_lower,display_upper\n";
  const std::vector<std::string>& names = result.estimate.feature_names;
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (int m = 0; m < kNumMeasures; ++m) {
      const auto measure = static_cast<Measure>(m);
      const Interval& iv = result.interval(static_cast<int>(j), measure);
      const double de = display_value(names[j], measure, iv.estimate);
      double dl = display_value(names[j], measure, iv.lower);
      double du = display_value(names[j], measure, iv.upper);
      if (dl > du) std::swap(dl, du);
      out << names[j] << ',' << measure_name(measure) << ',' << format_double(iv.estimate) << ','
          << format_double(iv.lower) << ',' << format_double(iv.upper) << ',' << format_double(de) << ','
          << format_double(dl) << ',' << format_double(du) << '\n';
    }
  }
}

void write_composition_csv(std::ostream& out, const CompositionImportance& result, const RunConfig& config) {
  out << "# config_hash=" << config.hash() << '\n';
  out << "piece_id,feature,measure,value,display_value\n";
  for (const ImportanceReport& r : result.reports) {
    for (std::size_t j = 0; j < r.feature_names.size(); ++j) {
      for (int m = 0; m < kNumMeasures; ++m) {
        const auto measure = static_cast<Measure>(m);
        const double v = r.features[j].get(measure);
        out << quoted(r.piece_id) << ',' << r.feature_names[j] << ',' << measure_name(measure) << ','
            << format_double(v) << ',' << format_double(display_value(r.feature_names[j], measure, v)) << '\n';
      }
    }
  }
}

json importance_json(const BootstrapResult& result, const RunConfig& config) {
  json out;
  out["config"] = config.to_json();
  out["config_hash"] = config.hash();
  out["estimate"] = report_json(result.estimate);
  out["replicates"] = result.replicates;
  out["level"] = result.level;
  out["failed_replicates"] = result.failed_replicates;
  out["flagged"] = result.flagged;
  json rows = json::array();
  const std::vector<std::string>& names = result.estimate.feature_names;
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (int m = 0; m < kNumMeasures; ++m) {
      const auto measure = static_cast<Measure>(m);
      const Interval& iv = result.interval(static_cast<int>(j), measure);
      rows.push_back({{"feature", names[j]},
                      {"measure", std::string(measure_name(measure))},
                      {"estimate", iv.estimate},
                      {"lower", iv.lower},
                      {"upper", iv.upper}});
    }
  }
  out["intervals"] = rows;
  return out;
}

json composition_json(const CompositionImportance& result, const RunConfig& config) {
  json out;
  out["config"] = config.to_json();
  out["config_hash"] = config.hash();
  json reports = json::array();
  for (const ImportanceReport& r : result.reports) reports.push_back(report_json(r));
  out["pieces"] = reports;
  out["skipped"] = result.skipped;
  return out;
}

}  // namespace consonance
