#include "crs/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crs/errors.hpp"
#include "crs/strings.hpp"

namespace crs {

std::filesystem::path Cohort::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<ClinicalRecord> Cohort::records() const {
  std::vector<ClinicalRecord> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.record);
  return out;
}

Cohort read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest: " + path.string());
  Cohort cohort;
  cohort.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != kManifestColumns)
        throw DataError("manifest header must be '" + std::string(kManifestColumns) + "', got '" + t + "'");
      header = true;
      continue;
    }
    const auto fields = split(t, ',');
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    if (fields.size() != 7) throw DataError(where + ": expected 7 fields");
    CohortEntry e;
    e.record.patient_id = trim(fields[0]);
    e.volume_path = trim(fields[1]);
    e.mask_path = trim(fields[2]);
    e.record.age = parse_double(trim(fields[3]), where + " age");
    e.record.ca125 = parse_double(trim(fields[4]), where + " ca125");
    e.record.crs = static_cast<int>(parse_int(trim(fields[5]), where + " crs"));
    e.record.split = parse_split(trim(fields[6]));
    if (e.record.patient_id.empty()) throw DataError(where + ": empty patient_id");
    validate(e.record);
    if (!seen.insert(e.record.patient_id).second)
      throw DataError(where + ": duplicate patient_id " + e.record.patient_id);
    cohort.entries.push_back(std::move(e));
  }
  if (!header) throw DataError("manifest has no header: " + path.string());
  return cohort;
}

void write_manifest(const std::filesystem::path& path, const std::vector<CohortEntry>& entries,
                    const std::vector<std::pair<std::string, std::string>>& provenance) {
  std::ostringstream os;
  for (const auto& [k, v] : provenance) os << "# " << k << "=" << v << "\n";
  os << kManifestColumns << "\n";
  for (const auto& e : entries) {
    os << e.record.patient_id << ',' << e.volume_path.generic_string() << ',' << e.mask_path.generic_string() << ','
       << format_double(e.record.age) << ',' << format_double(e.record.ca125) << ',' << e.record.crs << ','
       << to_string(e.record.split) << "\n";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path.string());
  out << os.str();
}

}  // namespace crs
