#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crs/clinical.hpp"

namespace crs {

/// One manifest row. Paths are stored as written and resolved against the
/// manifest's directory when relative.
struct CohortEntry {
  ClinicalRecord record;
  std::filesystem::path volume_path;
  std::filesystem::path mask_path;
};

struct Cohort {
  std::filesystem::path base_dir;
  std::vector<CohortEntry> entries;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::vector<ClinicalRecord> records() const;
};

inline constexpr const char* kManifestColumns = "patient_id,volume_path,mask_path,age,ca125,crs,split";

/// Reads a cohort manifest CSV. Lines starting with '#' are comments.
/// Throws DataError on an unreadable file, a wrong header, malformed rows or
/// duplicate patient ids.
Cohort read_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const std::vector<CohortEntry>& entries,
                    const std::vector<std::pair<std::string, std::string>>& provenance = {});

}  // namespace crs
