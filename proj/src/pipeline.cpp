#include "crs/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "crs/ablation.hpp"
#include "crs/checksum.hpp"
#include "crs/encoder.hpp"
#include "crs/head.hpp"
#include "crs/parallel.hpp"
#include "crs/rng.hpp"
#include "crs/rvol.hpp"
#include "crs/strings.hpp"
#include "crs/synth.hpp"
#include "crs/training.hpp"

namespace crs {

namespace fs = std::filesystem;

namespace {

std::string short_hash(const std::string& text) { return hex64(fnv1a(text)).substr(0, 12); }

Provenance base_provenance(const RunConfig& config, const std::string& command, const std::string& config_hash) {
  Provenance p;
  p.add("tool", "crs").add("version", kToolVersion).add("command", command).add("config_hash", config_hash);
  p.add("seed", std::to_string(config.require_seed()));
  return p;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Rows of a report CSV (comment lines skipped, header returned separately).
struct CsvRows {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvRows read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  CsvRows out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line, ',');
    if (out.header.empty()) out.header = std::move(cells);
    else out.rows.push_back(std::move(cells));
  }
  return out;
}

bool safe_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return id.find_first_of("/\\") == std::string::npos;
}

void prepare(const RunConfig& config) {
  config.validate();
  set_worker_count(config.workers);
}

// Patients with a cached slice stack, as written by cmd_preprocess.
struct CacheIndex {
  std::map<std::string, double> volume_cm3;
};

CacheIndex read_index(const RunPaths& paths) {
  const fs::path index = paths.cache_dir / "index.csv";
  if (!fs::exists(index))
    throw DataError("preprocessed cache not found at " + paths.cache_dir.string() +
                    "; run `crs preprocess` with the same configuration first");
  CacheIndex out;
  for (const auto& row : read_csv(index).rows) {
    if (row.size() != 2) throw DataError("malformed cache index " + index.string());
    out.volume_cm3[row[0]] = parse_double(row[1], "index volume_cm3");
  }
  return out;
}

fs::path stack_path(const RunPaths& paths, const std::string& id) { return paths.cache_dir / "stacks" / (id + ".rvol"); }

fs::path require_encoder(const RunPaths& paths) {
  if (!fs::exists(paths.encoder))
    throw DataError("encoder weights not found at " + paths.encoder.string() +
                    "; run `crs synth` to create seeded synthetic weights or set paths.encoder");
  return paths.encoder;
}

// Frozen-encoder CLS embeddings, cached per encoder checksum.
std::map<std::string, Embedding> load_embeddings(const RunPaths& paths, const std::vector<std::string>& ids,
                                                 std::ostream& log) {
  const fs::path encoder_path = require_encoder(paths);
  const std::string enc_sum = hex64(file_checksum(encoder_path));
  const fs::path cache = paths.cache_dir / ("embeddings-" + enc_sum + ".tarc");
  TensorArchive archive;
  if (fs::exists(cache)) archive = TensorArchive::load(cache);
  std::vector<std::string> missing;
  for (const auto& id : ids)
    if (!archive.contains(id)) missing.push_back(id);
  if (!missing.empty()) {
    log << "encoding " << missing.size() << " slice stacks\n";
    const EncoderParams encoder = load_encoder_params(encoder_path);
    std::vector<Embedding> computed(missing.size());
    parallel_for(missing.size(), [&](std::size_t i) {
      computed[i] = encode(read_stack(stack_path(paths, missing[i])), encoder);
    });
    for (std::size_t i = 0; i < missing.size(); ++i)
      archive.put(missing[i], {static_cast<std::uint32_t>(kEmbedDim)},
                  std::vector<float>(computed[i].begin(), computed[i].end()));
    archive.save(cache);
  }
  std::map<std::string, Embedding> out;
  for (const auto& id : ids) {
    const Tensor& t = archive.get(id, {static_cast<std::uint32_t>(kEmbedDim)});
    Embedding e{};
    std::copy(t.data.begin(), t.data.end(), e.begin());
    out[id] = e;
  }
  return out;
}

// Manifest entries that survived preprocessing, with their embeddings.
struct PreparedCohort {
  std::vector<CohortEntry> entries;
  std::map<std::string, Embedding> embeddings;
  CacheIndex index;
};

PreparedCohort prepare_cohort(const RunPaths& paths, std::ostream& log) {
  PreparedCohort pc;
  pc.index = read_index(paths);
  const Cohort cohort = read_manifest(paths.manifest);
  std::vector<std::string> ids;
  for (const auto& e : cohort.entries) {
    if (!pc.index.volume_cm3.count(e.record.patient_id)) continue;
    pc.entries.push_back(e);
    ids.push_back(e.record.patient_id);
  }
  pc.embeddings = load_embeddings(paths, ids, log);
  return pc;
}

std::vector<HeadExample> examples_for(const PreparedCohort& pc, const ClinicalStats& stats,
                                      const std::set<Split>& splits, std::vector<std::string>* ids = nullptr) {
  std::vector<HeadExample> out;
  for (const auto& e : pc.entries) {
    if (!splits.count(e.record.split)) continue;
    out.push_back({pc.embeddings.at(e.record.patient_id), stats.standardize(e.record), response_label(e.record.crs)});
    if (ids) ids->push_back(e.record.patient_id);
  }
  return out;
}

struct TrainedModel {
  Checkpoint checkpoint;
  TrainHistory history;
};

TrainedModel train_model(const RunConfig& config, const PreparedCohort& pc,
                         const std::vector<ClinicalFeature>& features) {
  std::vector<ClinicalRecord> records;
  for (const auto& e : pc.entries) records.push_back(e.record);
  TrainedModel m;
  m.checkpoint.stats = fit_clinical_stats(records, features, config.model.ca125_scale);
  const auto train = examples_for(pc, m.checkpoint.stats, {Split::kTrain});
  const auto val = examples_for(pc, m.checkpoint.stats, {Split::kVal});
  HeadShape shape = config.head_shape();
  shape.clinical_dim = features.size();
  TrainConfig tc = config.train;
  tc.seed = config.require_seed();
  TrainResult r = train_head(train, val, shape, tc);
  m.checkpoint.params = std::move(r.params);
  m.history = std::move(r.history);
  return m;
}

ScoredCohort score_split(const PreparedCohort& pc, const Checkpoint& ckpt, const std::set<Split>& splits) {
  std::vector<std::string> ids;
  const auto examples = examples_for(pc, ckpt.stats, splits, &ids);
  const auto scores = score_examples(ckpt.params, examples);
  ScoredCohort out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], scores[i], examples[i].label});
  return out;
}

std::string metric_text(const std::vector<MetricSummary>& s, Metric m) {
  for (const auto& x : s)
    if (x.metric == m) return format_fixed(x.point, 4);
  return "NA";
}

}  // namespace

PreprocessedPatient preprocess_patient(const CtVolume& volume, const LesionMask& mask,
                                       const PreprocessSettings& s) {
  validate(volume);
  validate(mask);
  const CtVolume iso = resample_isotropic(volume, s.isotropic_mm);
  const CtVolume grid = resize_to_grid(iso, s.grid);
  const CtVolume windowed = window_soft_tissue(grid, s.window_level, s.window_width);
  const LesionMask grid_mask = align_mask(mask, grid.geom);
  const auto slices = select_top_k(lesion_density_profile(grid_mask));
  const CtVolume masked = s.grid == kModelGrid ? apply_mask(windowed, grid_mask).volume
                                               : multiply_mask(windowed, grid_mask);
  PreprocessedPatient out;
  out.stack = stack_slices(masked, slices);
  out.morphology = measure_morphology(align_mask(mask, iso.geom), s.connectivity);
  return out;
}

MorphologyRecord patient_morphology(const Geometry& volume_geom, const LesionMask& mask,
                                    const PreprocessSettings& s) {
  validate(mask);
  return measure_morphology(align_mask(mask, isotropic_geometry(volume_geom, s.isotropic_mm)), s.connectivity);
}

RunPaths resolve_run_paths(const RunConfig& config) {
  RunPaths p;
  p.out = config.paths.out;
  p.cohort_dir = p.out / ("cohort-" + config.synth_hash());
  p.manifest = config.paths.manifest.empty() ? p.cohort_dir / "manifest.csv" : config.paths.manifest;
  p.encoder = config.paths.encoder.empty() ? p.cohort_dir / "encoder.tarc" : config.paths.encoder;
  if (!fs::exists(p.manifest)) {
    if (config.paths.manifest.empty())
      throw DataError("no manifest configured and no synthetic cohort at " + p.cohort_dir.string() +
                      "; run `crs synth` first or set paths.manifest");
    throw DataError("manifest not found: " + p.manifest.string());
  }
  p.manifest_checksum = hex64(file_checksum(p.manifest));
  p.cache_dir = p.out / ("cache-" + short_hash(config.preprocess_hash() + p.manifest_checksum));
  // A swapped encoder invalidates the head, so its checksum is part of the run key.
  const std::string encoder_key = fs::exists(p.encoder) ? hex64(file_checksum(p.encoder)) : "none";
  p.run_dir = p.out / ("run-" + short_hash(config.model_hash() + p.manifest_checksum + encoder_key));
  return p;
}

fs::path evaluation_dir(const RunConfig& config, const RunPaths& paths) {
  return paths.run_dir / ("eval-" + config.hash());
}

fs::path ablation_dir(const RunConfig& config, const RunPaths& paths) {
  return paths.run_dir / ("ablate-" + config.hash());
}

ExitCode cmd_synth(const RunConfig& config, std::ostream& log) {
  prepare(config);
  SynthConfig sc = config.synth;
  sc.seed = config.require_seed();
  const fs::path dir = fs::path(config.paths.out) / ("cohort-" + config.synth_hash());
  Provenance prov = base_provenance(config, "synth", config.synth_hash());
  const SynthCohort cohort = generate_cohort(sc, dir, prov.fields);
  EncoderParams::random(sc.seed).to_archive().save(dir / "encoder.tarc");
  std::size_t positives = 0;
  for (const auto& p : cohort.patients) positives += p.label;
  log << "synthesized " << cohort.patients.size() << " patients (" << positives << " CRS 3) in " << dir.string()
      << "\n";
  return ExitCode::kOk;
}

ExitCode cmd_preprocess(const RunConfig& config, std::ostream& log) {
  prepare(config);
  const RunPaths paths = resolve_run_paths(config);
  const Cohort cohort = read_manifest(paths.manifest);
  fs::create_directories(paths.cache_dir / "stacks");
  const std::string prep_hash = config.preprocess_hash();
  const std::size_t n = cohort.entries.size();
  std::vector<std::optional<MorphologyRow>> rows(n);
  std::vector<std::optional<Exclusion>> excluded(n);
  std::atomic<std::size_t> hits{0};

  parallel_for(n, [&](std::size_t i) {
    const CohortEntry& e = cohort.entries[i];
    const std::string& id = e.record.patient_id;
    try {
      if (!safe_id(id)) throw DataError("patient id is not usable as a file name");
      const fs::path vol_path = cohort.resolve(e.volume_path);
      const fs::path mask_path = cohort.resolve(e.mask_path);
      const std::string source = hex64(fnv1a(prep_hash + ":" + hex64(file_checksum(vol_path)) + ":" +
                                             hex64(file_checksum(mask_path))));
      const fs::path out = stack_path(paths, id);
      MorphologyRecord m;
      const auto meta = fs::exists(out) ? read_key_values(stack_meta_path(out)) : std::map<std::string, std::string>{};
      const auto it = meta.find("source");
      if (it != meta.end() && it->second == source) {
        m.volume_cm3 = parse_double(meta.at("volume_cm3"), "volume_cm3");
        m.surface_cm2 = parse_double(meta.at("surface_cm2"), "surface_cm2");
        m.largest_cc_fraction = parse_double(meta.at("largest_cc_fraction"), "largest_cc_fraction");
        m.component_count = static_cast<std::size_t>(parse_int(meta.at("component_count"), "component_count"));
        ++hits;
      } else {
        const PreprocessedPatient p = preprocess_patient(read_volume(vol_path), read_mask(mask_path), config.preprocess);
        m = p.morphology;
        write_stack(out, p.stack,
                    {{"patient_id", id},
                     {"source", source},
                     {"volume_cm3", format_double(m.volume_cm3)},
                     {"surface_cm2", format_double(m.surface_cm2)},
                     {"largest_cc_fraction", format_double(m.largest_cc_fraction)},
                     {"component_count", std::to_string(m.component_count)}});
      }
      rows[i] = MorphologyRow{id, e.record.crs, m};
    } catch (const std::exception& ex) {
      excluded[i] = Exclusion{id, "preprocess", ex.what()};
      if (safe_id(id)) {
        std::error_code ec;
        fs::remove(stack_path(paths, id), ec);
        fs::remove(stack_meta_path(stack_path(paths, id)), ec);
      }
    }
  });

  std::vector<MorphologyRow> kept;
  std::vector<Exclusion> dropped;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) kept.push_back(*rows[i]);
    if (excluded[i]) dropped.push_back(*excluded[i]);
  }
  Provenance prov = base_provenance(config, "preprocess", short_hash(prep_hash + paths.manifest_checksum));
  prov.add("grid", "isotropic " + format_double(config.preprocess.isotropic_mm) + " mm");
  prov.add("connectivity", std::to_string(config.preprocess.connectivity));
  prov.add("surface_area", "voxel face count; overestimates smooth surfaces");
  write_text_file(paths.cache_dir / "morphology.csv", morphology_csv(prov, kept));
  write_text_file(paths.cache_dir / "morphology_summary.csv", morphology_summary_csv(prov, kept));
  write_text_file(paths.cache_dir / "exclusions.csv", exclusions_csv(prov, dropped));
  std::ostringstream index;
  index << prov.header() << "patient_id,volume_cm3\n";
  for (const auto& r : kept) index << r.patient_id << ',' << format_double(r.record.volume_cm3) << "\n";
  write_text_file(paths.cache_dir / "index.csv", index.str());

  log << "preprocessed " << kept.size() << " of " << n << " patients (" << hits.load() << " from cache), "
      << dropped.size() << " excluded\n";
  for (const auto& d : dropped) log << "  excluded " << d.patient_id << ": " << d.reason << "\n";
  log << "cache: " << paths.cache_dir.string() << "\n";
  return ExitCode::kOk;
}

ExitCode cmd_morphology(const RunConfig& config, std::ostream& log) {
  prepare(config);
  const RunPaths paths = resolve_run_paths(config);
  const Cohort cohort = read_manifest(paths.manifest);
  const std::size_t n = cohort.entries.size();
  std::vector<std::optional<MorphologyRow>> rows(n);
  std::vector<std::optional<Exclusion>> excluded(n);
  parallel_for(n, [&](std::size_t i) {
    const CohortEntry& e = cohort.entries[i];
    try {
      const Geometry geom = read_rvol_header(cohort.resolve(e.volume_path)).geom;
      const MorphologyRecord m = patient_morphology(geom, read_mask(cohort.resolve(e.mask_path)), config.preprocess);
      rows[i] = MorphologyRow{e.record.patient_id, e.record.crs, m};
    } catch (const std::exception& ex) {
      excluded[i] = Exclusion{e.record.patient_id, "morphology", ex.what()};
    }
  });
  std::vector<MorphologyRow> kept;
  std::vector<Exclusion> dropped;
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i]) kept.push_back(*rows[i]);
    if (excluded[i]) dropped.push_back(*excluded[i]);
  }
  const std::string h = short_hash(config.preprocess_hash() + paths.manifest_checksum);
  const fs::path dir = paths.out / ("morphology-" + h);
  Provenance prov = base_provenance(config, "morphology", h);
  prov.add("grid", "isotropic " + format_double(config.preprocess.isotropic_mm) + " mm");
  prov.add("connectivity", std::to_string(config.preprocess.connectivity));
  prov.add("surface_area", "voxel face count; overestimates smooth surfaces");
  write_text_file(dir / "morphology.csv", morphology_csv(prov, kept));
  write_text_file(dir / "morphology_summary.csv", morphology_summary_csv(prov, kept));
  write_text_file(dir / "exclusions.csv", exclusions_csv(prov, dropped));
  log << "morphology for " << kept.size() << " of " << n << " patients, " << dropped.size() << " excluded -> "
      << dir.string() << "\n";
  return ExitCode::kOk;
}

ExitCode cmd_train(const RunConfig& config, std::ostream& log) {
  prepare(config);
  const RunPaths paths = resolve_run_paths(config);
  const std::uint64_t encoder_before = file_checksum(require_encoder(paths));
  const PreparedCohort pc = prepare_cohort(paths, log);
  const TrainedModel model = train_model(config, pc, config.model.clinical_features);
  if (file_checksum(paths.encoder) != encoder_before)
    throw DataError("encoder weights changed during training: " + paths.encoder.string());

  Provenance prov = base_provenance(config, "train", config.model_hash());
  prov.add("encoder_checksum", hex64(encoder_before));
  prov.add("best_epoch", std::to_string(model.history.best_epoch));
  prov.add("stop_reason", model.history.stop_reason);
  save_checkpoint(paths.run_dir / "model", model.checkpoint, prov.fields);
  write_text_file(paths.run_dir / "history.csv", history_csv(prov, model.history));

  const EpochRecord* best = nullptr;
  for (const auto& e : model.history.epochs)
    if (e.epoch == model.history.best_epoch) best = &e;
  log << "trained " << model.history.epochs.size() << " epochs (" << model.history.stop_reason << "), best epoch "
      << model.history.best_epoch;
  if (best)
    log << ", val_loss " << format_fixed(best->val_loss, 4) << ", val_auc "
        << (std::isnan(best->val_auc) ? std::string("NA") : format_fixed(best->val_auc, 4));
  log << "\ncheckpoint: " << (paths.run_dir / "model").string() << "\n";
  return ExitCode::kOk;
}

ExitCode cmd_evaluate(const RunConfig& config, std::ostream& log) {
  prepare(config);
  const RunPaths paths = resolve_run_paths(config);
  const fs::path model_dir = paths.run_dir / "model";
  if (!fs::exists(model_dir / "head.tarc"))
    throw DataError("no checkpoint at " + model_dir.string() + "; run `crs train` with the same configuration first");
  const Checkpoint ckpt = load_checkpoint(model_dir);
  const PreparedCohort pc = prepare_cohort(paths, log);
  const ScoredCohort cohort = score_split(pc, ckpt, {config.evaluate.split});
  if (cohort.empty()) throw DataError("no preprocessed patients in split " + to_string(config.evaluate.split));
  bool undefined = false;

  double tau = 0.5;
  std::string tau_label = "tau_policy";
  std::string tau_source;
  if (config.evaluate.threshold) {
    tau = *config.evaluate.threshold;
    tau_label = "tau_override";
    tau_source = "override";
  } else {
    const ScoredCohort fit = score_split(pc, ckpt, {Split::kTrain, Split::kVal});
    try {
      tau = optimize_threshold(fit, config.evaluate.policy);
      tau_source = config.evaluate.policy.name() + " on train+val";
    } catch (const UndefinedMetricError& e) {
      log << "threshold policy undefined: " << e.what() << "; reporting tau=0.5 only\n";
      undefined = true;
      tau_source = "undefined";
    }
  }

  BootstrapOptions bo;
  bo.resamples = config.evaluate.resamples;
  bo.seed = config.require_seed();
  bo.confidence = config.evaluate.confidence;
  bo.allow_undefined = true;
  const auto scores = scores_of(cohort);
  const auto labels = labels_of(cohort);
  std::vector<ThresholdReport> rows;
  auto add_row = [&](const std::string& label, double t) {
    rows.push_back({label, t, bootstrap(cohort, t, all_metrics(), bo), confusion(scores, labels, t)});
  };
  add_row("tau_0.5", 0.5);
  if (tau_source != "undefined") add_row(tau_label, tau);

  RocResult roc;
  try {
    roc = roc_auc(cohort);
  } catch (const UndefinedMetricError& e) {
    log << "AUC undefined: " << e.what() << "\n";
    undefined = true;
  }

  const fs::path dir = evaluation_dir(config, paths);
  Provenance prov = base_provenance(config, "evaluate", config.hash());
  prov.add("model_hash", config.model_hash());
  prov.add("split", to_string(config.evaluate.split));
  prov.add("policy", config.evaluate.policy.name());
  prov.add("threshold", tau_source == "undefined" ? std::string("NA") : format_double(tau));
  prov.add("threshold_source", tau_source);
  prov.add("bootstrap", std::to_string(bo.resamples) + " resamples, " + format_double(bo.confidence) + " percentile");
  write_text_file(dir / "metrics.csv", metrics_csv(prov, rows));
  write_text_file(dir / "confusion.csv", confusion_csv(prov, rows));
  write_text_file(dir / "roc.csv", roc_csv(prov, roc));
  write_text_file(dir / "reliability.csv", reliability_csv(prov, reliability(cohort, config.evaluate.bins)));
  write_text_file(dir / "scores.csv", scores_csv(prov, cohort));

  std::size_t pos = 0;
  for (int y : labels) pos += y;
  log << "split " << to_string(config.evaluate.split) << ": " << cohort.size() << " patients, " << pos
      << " CRS 3\n";
  for (const auto& r : rows) {
    const Confusion& c = r.confusion;
    log << r.label << " threshold=" << format_fixed(r.threshold, 4) << " auc=" << metric_text(r.summaries, Metric::kAuc)
        << " f1=" << metric_text(r.summaries, Metric::kF1)
        << " precision=" << metric_text(r.summaries, Metric::kPrecision)
        << " recall=" << metric_text(r.summaries, Metric::kRecall)
        << " accuracy=" << metric_text(r.summaries, Metric::kAccuracy) << " tp=" << c.tp << " tn=" << c.tn
        << " fp=" << c.fp << " fn=" << c.fn << "\n";
  }
  log << "reports: " << dir.string() << "\n";
  return undefined ? ExitCode::kUndefinedMetric : ExitCode::kOk;
}

ExitCode cmd_ablate(const RunConfig& config, std::ostream& log) {
  prepare(config);
  const RunPaths paths = resolve_run_paths(config);
  const PreparedCohort pc = prepare_cohort(paths, log);
  BootstrapOptions bo;
  bo.resamples = config.evaluate.resamples;
  bo.seed = config.require_seed();
  bo.confidence = config.evaluate.confidence;
  bo.allow_undefined = true;
  const std::vector<Metric> auc_only{Metric::kAuc};
  bool undefined = false;

  std::vector<AblationRow> rows;
  for (const auto& name : config.ablate.rows) {
    const AblationSpec spec = ablation_spec(name);
    AblationRow row;
    row.configuration = name;
    row.ct = spec.ct;
    for (auto f : spec.clinical) {
      row.age = row.age || f == ClinicalFeature::kAge;
      row.ca125 = row.ca125 || f == ClinicalFeature::kCa125;
    }
    row.volume = spec.baseline;
    ScoredCohort scored;
    if (spec.baseline) {
      std::vector<std::vector<double>> x;
      std::vector<int> y;
      for (const auto& e : pc.entries) {
        if (e.record.split != Split::kTrain) continue;
        x.push_back(baseline_features(e.record, pc.index.volume_cm3.at(e.record.patient_id)));
        y.push_back(response_label(e.record.crs));
      }
      const LogisticModel model = fit_logistic(x, y, config.ablate.baseline_l2);
      for (const auto& e : pc.entries) {
        if (e.record.split != config.ablate.split) continue;
        const auto f = baseline_features(e.record, pc.index.volume_cm3.at(e.record.patient_id));
        scored.push_back({e.record.patient_id, model.predict(f), response_label(e.record.crs)});
      }
    } else {
      const TrainedModel model = train_model(config, pc, spec.clinical);
      scored = score_split(pc, model.checkpoint, {config.ablate.split});
    }
    if (scored.empty()) throw DataError("no preprocessed patients in split " + to_string(config.ablate.split));
    row.auc = bootstrap(scored, 0.5, auc_only, bo).front();
    if (!row.auc.point) undefined = true;
    log << name << ": auc=" << format_fixed(row.auc.point, 4) << " [" << format_fixed(row.auc.ci_low, 4) << ", "
        << format_fixed(row.auc.ci_high, 4) << "]\n";
    rows.push_back(std::move(row));
  }
  const fs::path dir = ablation_dir(config, paths);
  Provenance prov = base_provenance(config, "ablate", config.hash());
  prov.add("split", to_string(config.ablate.split));
  prov.add("policy", config.evaluate.policy.name());
  prov.add("bootstrap", std::to_string(bo.resamples) + " resamples, " + format_double(bo.confidence) + " percentile");
  write_text_file(dir / "ablation.csv", ablation_csv(prov, rows));
  log << "report: " << (dir / "ablation.csv").string() << "\n";
  return undefined ? ExitCode::kUndefinedMetric : ExitCode::kOk;
}

ScoredCohort read_scores_csv(const fs::path& path) {
  const CsvRows csv = read_csv(path);
  ScoredCohort out;
  for (const auto& r : csv.rows) {
    if (r.size() != 3) throw DataError("malformed scores file " + path.string());
    out.push_back({r[0], parse_double(r[2], "score"), static_cast<int>(parse_int(r[1], "label"))});
  }
  return out;
}

}  // namespace crs
