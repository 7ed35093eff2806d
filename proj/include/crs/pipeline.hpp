#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "crs/config.hpp"
#include "crs/errors.hpp"
#include "crs/manifest.hpp"
#include "crs/morphology.hpp"
#include "crs/reports.hpp"
#include "crs/slice_select.hpp"

namespace crs {

struct PreprocessedPatient {
  SliceStack stack;
  MorphologyRecord morphology;  // measured on the isotropic grid
};

/// resample -> resize -> window -> mask -> top-3 slices. Morphology is taken
/// from the mask aligned to the isotropic grid.
PreprocessedPatient preprocess_patient(const CtVolume& volume, const LesionMask& mask,
                                       const PreprocessSettings& settings);

/// Morphology of a mask after alignment to the isotropic lattice of `volume_geom`.
MorphologyRecord patient_morphology(const Geometry& volume_geom, const LesionMask& mask,
                                    const PreprocessSettings& settings);

/// Where a run reads and writes. Directory names carry the hash of the
/// settings each stage depends on:
///   <out>/cohort-<h>/   synthetic cohort (when no manifest is configured)
///   <out>/cache-<h>/    slice stacks, morphology, embeddings
///   <out>/run-<h>/      checkpoint and history; eval-<h>/ and ablate-<h>/ reports
struct RunPaths {
  std::filesystem::path out;
  std::filesystem::path cohort_dir;
  std::filesystem::path manifest;
  std::filesystem::path encoder;
  std::filesystem::path cache_dir;
  std::filesystem::path run_dir;
  std::string manifest_checksum;
};

/// Throws ConfigError/DataError naming the missing input and the command that creates it.
RunPaths resolve_run_paths(const RunConfig& config);

ExitCode cmd_synth(const RunConfig& config, std::ostream& log);
ExitCode cmd_preprocess(const RunConfig& config, std::ostream& log);
ExitCode cmd_morphology(const RunConfig& config, std::ostream& log);
ExitCode cmd_train(const RunConfig& config, std::ostream& log);
ExitCode cmd_evaluate(const RunConfig& config, std::ostream& log);
ExitCode cmd_ablate(const RunConfig& config, std::ostream& log);

std::filesystem::path evaluation_dir(const RunConfig& config, const RunPaths& paths);
std::filesystem::path ablation_dir(const RunConfig& config, const RunPaths& paths);

/// Reads a scores.csv written by cmd_evaluate.
ScoredCohort read_scores_csv(const std::filesystem::path& path);

}  // namespace crs
