#include "crs/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "crs/checksum.hpp"
#include "crs/errors.hpp"
#include "crs/strings.hpp"

namespace crs {

namespace {

enum class Stage { kSynth, kPreprocess, kModel, kNone };

struct Field {
  const char* key;
  Stage stage;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::size_t to_size(const std::string& v, const std::string& key) {
  const long long x = parse_int(v, key);
  if (x < 0) throw ConfigError(key + " must be >= 0");
  return static_cast<std::size_t>(x);
}

std::string dims_text(const Dims3& d) {
  return std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]);
}

Dims3 parse_dims(const std::string& v, const std::string& key) {
  const auto parts = split(v, ',');
  if (parts.size() != 3) throw ConfigError(key + " needs three comma-separated values");
  Dims3 d{};
  for (int a = 0; a < 3; ++a) d[a] = to_size(trim(parts[a]), key);
  return d;
}

std::string vec3_text(const Vec3& v) {
  return format_double(v[0]) + "," + format_double(v[1]) + "," + format_double(v[2]);
}

Vec3 parse_vec3(const std::string& v, const std::string& key) {
  const auto parts = split(v, ',');
  if (parts.size() != 3) throw ConfigError(key + " needs three comma-separated values");
  Vec3 out{};
  for (int a = 0; a < 3; ++a) out[a] = parse_double(trim(parts[a]), key);
  return out;
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  for (const auto& p : split(v, ',')) {
    const std::string t = trim(p);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

#define CRS_DOUBLE(name, stage, member)                                                              \
  Field {                                                                                            \
    name, stage, [](RunConfig& c, const std::string& v) { c.member = parse_double(v, name); },       \
        [](const RunConfig& c) { return format_double(c.member); }                                   \
  }
#define CRS_SIZE(name, stage, member)                                                                \
  Field {                                                                                            \
    name, stage, [](RunConfig& c, const std::string& v) { c.member = to_size(v, name); },            \
        [](const RunConfig& c) { return std::to_string(c.member); }                                  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", Stage::kSynth,
            [](RunConfig& c, const std::string& v) {
              const long long s = parse_int(v, "seed");
              if (s < 0) throw ConfigError("seed must be >= 0");
              c.seed = static_cast<std::uint64_t>(s);
            },
            [](const RunConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string("unset"); }},

      CRS_DOUBLE("preprocess.isotropic_mm", Stage::kPreprocess, preprocess.isotropic_mm),
      Field{"preprocess.grid", Stage::kPreprocess,
            [](RunConfig& c, const std::string& v) { c.preprocess.grid = parse_dims(v, "preprocess.grid"); },
            [](const RunConfig& c) { return dims_text(c.preprocess.grid); }},
      CRS_DOUBLE("preprocess.window_level", Stage::kPreprocess, preprocess.window_level),
      CRS_DOUBLE("preprocess.window_width", Stage::kPreprocess, preprocess.window_width),
      Field{"preprocess.connectivity", Stage::kPreprocess,
            [](RunConfig& c, const std::string& v) {
              c.preprocess.connectivity = static_cast<int>(parse_int(v, "preprocess.connectivity"));
            },
            [](const RunConfig& c) { return std::to_string(c.preprocess.connectivity); }},

      Field{"model.clinical_features", Stage::kModel,
            [](RunConfig& c, const std::string& v) {
              c.model.clinical_features.clear();
              for (const auto& f : parse_list(v)) c.model.clinical_features.push_back(parse_clinical_feature(f));
            },
            [](const RunConfig& c) {
              std::vector<std::string> names;
              for (auto f : c.model.clinical_features) names.push_back(to_string(f));
              return join(names, ",");
            }},
      Field{"model.ca125_scale", Stage::kModel,
            [](RunConfig& c, const std::string& v) { c.model.ca125_scale = parse_ca125_scale(v); },
            [](const RunConfig& c) { return to_string(c.model.ca125_scale); }},
      CRS_SIZE("model.hidden1", Stage::kModel, model.hidden1),
      CRS_SIZE("model.hidden2", Stage::kModel, model.hidden2),
      CRS_DOUBLE("model.dropout", Stage::kModel, model.dropout),
      CRS_SIZE("model.register_tokens", Stage::kModel, model.register_tokens),

      CRS_SIZE("train.max_epochs", Stage::kModel, train.max_epochs),
      CRS_SIZE("train.batch_size", Stage::kModel, train.batch_size),
      CRS_DOUBLE("train.peak_lr", Stage::kModel, train.peak_lr),
      CRS_DOUBLE("train.warmup_fraction", Stage::kModel, train.warmup_fraction),
      CRS_DOUBLE("train.beta1", Stage::kModel, train.adamw.beta1),
      CRS_DOUBLE("train.beta2", Stage::kModel, train.adamw.beta2),
      CRS_DOUBLE("train.epsilon", Stage::kModel, train.adamw.epsilon),
      CRS_DOUBLE("train.weight_decay", Stage::kModel, train.adamw.weight_decay),
      CRS_SIZE("train.patience", Stage::kModel, train.patience),
      CRS_DOUBLE("train.min_delta", Stage::kModel, train.min_delta),

      Field{"evaluate.policy", Stage::kNone,
            [](RunConfig& c, const std::string& v) {
              auto& p = c.evaluate.policy;
              if (v == "max_f1") p.kind = ThresholdPolicy::Kind::kMaxF1;
              else if (v == "precision_floor") p.kind = ThresholdPolicy::Kind::kPrecisionFloor;
              else if (v == "fixed") p.kind = ThresholdPolicy::Kind::kFixed;
              else throw ConfigError("evaluate.policy must be max_f1, precision_floor or fixed, got '" + v + "'");
            },
            [](const RunConfig& c) {
              switch (c.evaluate.policy.kind) {
                case ThresholdPolicy::Kind::kMaxF1: return std::string("max_f1");
                case ThresholdPolicy::Kind::kPrecisionFloor: return std::string("precision_floor");
                case ThresholdPolicy::Kind::kFixed: return std::string("fixed");
              }
              return std::string();
            }},
      CRS_DOUBLE("evaluate.precision_floor", Stage::kNone, evaluate.policy.precision_floor),
      CRS_DOUBLE("evaluate.fixed_threshold", Stage::kNone, evaluate.policy.fixed_threshold),
      Field{"evaluate.threshold", Stage::kNone,
            [](RunConfig& c, const std::string& v) {
              if (v.empty() || v == "none") c.evaluate.threshold.reset();
              else c.evaluate.threshold = parse_double(v, "evaluate.threshold");
            },
            [](const RunConfig& c) {
              return c.evaluate.threshold ? format_double(*c.evaluate.threshold) : std::string("none");
            }},
      Field{"evaluate.split", Stage::kNone,
            [](RunConfig& c, const std::string& v) { c.evaluate.split = parse_split(v); },
            [](const RunConfig& c) { return to_string(c.evaluate.split); }},
      CRS_SIZE("evaluate.resamples", Stage::kNone, evaluate.resamples),
      CRS_DOUBLE("evaluate.confidence", Stage::kNone, evaluate.confidence),
      CRS_SIZE("evaluate.bins", Stage::kNone, evaluate.bins),

      Field{"ablate.rows", Stage::kNone,
            [](RunConfig& c, const std::string& v) { c.ablate.rows = parse_list(v); },
            [](const RunConfig& c) { return join(c.ablate.rows, ","); }},
      Field{"ablate.split", Stage::kNone,
            [](RunConfig& c, const std::string& v) { c.ablate.split = parse_split(v); },
            [](const RunConfig& c) { return to_string(c.ablate.split); }},
      CRS_DOUBLE("ablate.baseline_l2", Stage::kNone, ablate.baseline_l2),

      CRS_SIZE("synth.n_patients", Stage::kSynth, synth.n_patients),
      CRS_SIZE("synth.n_external", Stage::kSynth, synth.n_external),
      CRS_DOUBLE("synth.val_fraction", Stage::kSynth, synth.val_fraction),
      CRS_DOUBLE("synth.test_fraction", Stage::kSynth, synth.test_fraction),
      Field{"synth.grid", Stage::kSynth,
            [](RunConfig& c, const std::string& v) { c.synth.grid = parse_dims(v, "synth.grid"); },
            [](const RunConfig& c) { return dims_text(c.synth.grid); }},
      Field{"synth.spacing", Stage::kSynth,
            [](RunConfig& c, const std::string& v) { c.synth.spacing = parse_vec3(v, "synth.spacing"); },
            [](const RunConfig& c) { return vec3_text(c.synth.spacing); }},
      CRS_SIZE("synth.lesions_min", Stage::kSynth, synth.lesions_min),
      CRS_SIZE("synth.lesions_max", Stage::kSynth, synth.lesions_max),
      CRS_DOUBLE("synth.radius_min_mm", Stage::kSynth, synth.radius_min_mm),
      CRS_DOUBLE("synth.radius_max_mm", Stage::kSynth, synth.radius_max_mm),
      CRS_DOUBLE("synth.background_hu", Stage::kSynth, synth.background_hu),
      CRS_DOUBLE("synth.lesion_hu_min", Stage::kSynth, synth.lesion_hu_min),
      CRS_DOUBLE("synth.lesion_hu_max", Stage::kSynth, synth.lesion_hu_max),
      CRS_DOUBLE("synth.age_mean", Stage::kSynth, synth.age_mean),
      CRS_DOUBLE("synth.age_sd", Stage::kSynth, synth.age_sd),
      CRS_DOUBLE("synth.age_min", Stage::kSynth, synth.age_min),
      CRS_DOUBLE("synth.age_max", Stage::kSynth, synth.age_max),
      CRS_DOUBLE("synth.ca125_median", Stage::kSynth, synth.ca125_median),
      CRS_DOUBLE("synth.ca125_log_sd", Stage::kSynth, synth.ca125_log_sd),
      CRS_DOUBLE("synth.volume_effect", Stage::kSynth, synth.volume_effect),
      CRS_DOUBLE("synth.ca125_effect", Stage::kSynth, synth.ca125_effect),
      CRS_DOUBLE("synth.age_effect", Stage::kSynth, synth.age_effect),
      CRS_DOUBLE("synth.noise", Stage::kSynth, synth.noise),
      CRS_DOUBLE("synth.prior", Stage::kSynth, synth.prior),
      CRS_DOUBLE("synth.volume_center_cm3", Stage::kSynth, synth.volume_center_cm3),
      CRS_DOUBLE("synth.volume_log_scale", Stage::kSynth, synth.volume_log_scale),
      CRS_DOUBLE("synth.external_hu_shift", Stage::kSynth, synth.external_hu_shift),
      CRS_DOUBLE("synth.external_ca125_scale", Stage::kSynth, synth.external_ca125_scale),
  };
  return table;
}

#undef CRS_DOUBLE
#undef CRS_SIZE

std::string canonical_for(const RunConfig& c, bool (*include)(Stage)) {
  std::ostringstream os;
  for (const Field& f : fields())
    if (include(f.stage)) os << f.key << '=' << f.get(c) << '\n';
  return os.str();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "paths.manifest") { paths.manifest = v; return; }
  if (key == "paths.encoder") { paths.encoder = v; return; }
  if (key == "paths.out") { paths.out = v; return; }
  if (key == "runtime.workers") { workers = to_size(v, key); return; }
  for (const Field& f : fields()) {
    if (key != f.key) continue;
    try {
      f.set(*this, v);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("invalid value for " + key + ": " + e.what());
    }
    return;
  }
  throw ConfigError("unknown configuration key: " + key);
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required (set 'seed' in the config or pass --seed)");
  return *seed;
}

void RunConfig::validate() const {
  const std::uint64_t s = require_seed();
  if (!(preprocess.isotropic_mm > 0.0)) throw ConfigError("preprocess.isotropic_mm must be > 0");
  for (auto d : preprocess.grid)
    if (d < 1) throw ConfigError("preprocess.grid dims must be >= 1");
  if (preprocess.grid[0] < 16 || preprocess.grid[1] < 16)
    throw ConfigError("preprocess.grid must be at least 16 x 16 in-plane");
  if (preprocess.grid[2] < kStackChannels) throw ConfigError("preprocess.grid needs at least 3 slices");
  if (!(preprocess.window_width > 0.0)) throw ConfigError("preprocess.window_width must be > 0");
  if (preprocess.connectivity != 6 && preprocess.connectivity != 18 && preprocess.connectivity != 26)
    throw ConfigError("preprocess.connectivity must be 6, 18 or 26");
  if (model.hidden1 < 1 || model.hidden2 < 1) throw ConfigError("model hidden widths must be >= 1");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  TrainConfig t = train;
  t.seed = s;
  t.validate();
  const auto& p = evaluate.policy;
  if (!(p.precision_floor > 0.0 && p.precision_floor <= 1.0))
    throw ConfigError("evaluate.precision_floor must lie in (0, 1]");
  if (!(p.fixed_threshold >= 0.0 && p.fixed_threshold <= 1.0))
    throw ConfigError("evaluate.fixed_threshold must lie in [0, 1]");
  if (evaluate.threshold && !(*evaluate.threshold >= 0.0 && *evaluate.threshold <= 1.0))
    throw ConfigError("evaluate.threshold must lie in [0, 1]");
  if (evaluate.resamples < 1) throw ConfigError("evaluate.resamples must be >= 1");
  if (!(evaluate.confidence > 0.0 && evaluate.confidence < 1.0))
    throw ConfigError("evaluate.confidence must lie in (0, 1)");
  if (evaluate.bins < 1) throw ConfigError("evaluate.bins must be >= 1");
  static const std::vector<std::string> known{"ct_only", "ct_age", "ct_ca125", "ct_age_ca125", "clinical_baseline"};
  if (ablate.rows.empty()) throw ConfigError("ablate.rows must name at least one configuration");
  for (const auto& r : ablate.rows)
    if (std::find(known.begin(), known.end(), r) == known.end())
      throw ConfigError("unknown ablation row '" + r + "' (expected one of " + join(known, ", ") + ")");
  if (!(ablate.baseline_l2 >= 0.0)) throw ConfigError("ablate.baseline_l2 must be >= 0");
  SynthConfig sc = synth;
  sc.seed = s;
  sc.validate();
}

std::string RunConfig::canonical() const {
  return canonical_for(*this, [](Stage) { return true; });
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical())).substr(0, 12); }

std::string RunConfig::synth_hash() const {
  return hex64(fnv1a(canonical_for(*this, [](Stage s) { return s == Stage::kSynth; }))).substr(0, 12);
}

std::string RunConfig::preprocess_hash() const {
  return hex64(fnv1a(canonical_for(*this, [](Stage s) { return s == Stage::kPreprocess; }))).substr(0, 12);
}

std::string RunConfig::model_hash() const {
  return hex64(fnv1a(canonical_for(*this, [](Stage s) { return s != Stage::kNone; }))).substr(0, 12);
}

HeadShape RunConfig::head_shape() const {
  HeadShape s;
  s.clinical_dim = model.clinical_features.size();
  s.hidden1 = model.hidden1;
  s.hidden2 = model.hidden2;
  s.dropout = model.dropout;
  return s;
}

RunConfig parse_config(const std::string& ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(ini_text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      c.set(section, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) c.set(section + "." + key, leaf.data());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace crs
