#include "crs/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crs/errors.hpp"
#include "crs/strings.hpp"

namespace crs {

namespace {

std::string fixed(std::optional<double> v) { return format_fixed(v, 6); }

// Report cells must not break the CSV layout.
std::string cell(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

Provenance& Provenance::add(std::string key, std::string value) {
  fields.emplace_back(std::move(key), std::move(value));
  return *this;
}

std::string Provenance::header() const {
  std::string out;
  for (const auto& [k, v] : fields) out += "# " + k + "=" + cell(v) + "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string metrics_csv(const Provenance& prov, const std::vector<ThresholdReport>& rows) {
  std::ostringstream os;
  os << prov.header() << "row,threshold";
  for (Metric m : all_metrics()) {
    const std::string n = to_string(m);
    os << ',' << n << ',' << n << "_median," << n << "_ci_low," << n << "_ci_high";
  }
  os << "\n";
  for (const auto& r : rows) {
    os << r.label << ',' << format_fixed(r.threshold, 6);
    for (Metric m : all_metrics()) {
      const auto it = std::find_if(r.summaries.begin(), r.summaries.end(),
                                   [m](const MetricSummary& s) { return s.metric == m; });
      if (it == r.summaries.end()) {
        os << ",NA,NA,NA,NA";
        continue;
      }
      os << ',' << fixed(it->point) << ',' << fixed(it->median) << ',' << fixed(it->ci_low) << ','
         << fixed(it->ci_high);
    }
    os << "\n";
  }
  return os.str();
}

std::string confusion_csv(const Provenance& prov, const std::vector<ThresholdReport>& rows) {
  std::ostringstream os;
  os << prov.header() << "row,threshold,tp,tn,fp,fn,tp_pct,tn_pct,fp_pct,fn_pct\n";
  for (const auto& r : rows) {
    const Confusion& c = r.confusion;
    os << r.label << ',' << format_fixed(r.threshold, 6) << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn
       << ',' << format_fixed(c.tp_pct(), 2) << ',' << format_fixed(c.tn_pct(), 2) << ','
       << format_fixed(c.fp_pct(), 2) << ',' << format_fixed(c.fn_pct(), 2) << "\n";
  }
  return os.str();
}

std::string roc_csv(const Provenance& prov, const RocResult& roc) {
  std::ostringstream os;
  os << prov.header() << "fpr,tpr,threshold\n";
  for (const auto& p : roc.curve)
    os << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
       << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << "\n";
  return os.str();
}

std::string reliability_csv(const Provenance& prov, const std::vector<ReliabilityBin>& bins) {
  std::ostringstream os;
  os << prov.header() << "bin_lo,bin_hi,mean_score,frac_pos,count\n";
  for (const auto& b : bins)
    os << format_double(b.lo) << ',' << format_double(b.hi) << ',' << fixed(b.mean_score) << ','
       << fixed(b.fraction_positive) << ',' << b.count << "\n";
  return os.str();
}

std::string scores_csv(const Provenance& prov, const ScoredCohort& cohort) {
  std::ostringstream os;
  os << prov.header() << "patient_id,label,score\n";
  for (const auto& p : cohort) os << cell(p.patient_id) << ',' << p.label << ',' << format_double(p.score) << "\n";
  return os.str();
}

std::string history_csv(const Provenance& prov, const TrainHistory& history) {
  std::ostringstream os;
  os << prov.header() << "epoch,lr,train_loss,val_loss,val_auc\n";
  for (const auto& e : history.epochs)
    os << e.epoch << ',' << format_double(e.lr) << ',' << format_double(e.train_loss) << ','
       << format_double(e.val_loss) << ',' << (std::isnan(e.val_auc) ? std::string("NA") : format_double(e.val_auc))
       << "\n";
  return os.str();
}

std::string morphology_csv(const Provenance& prov, const std::vector<MorphologyRow>& rows) {
  std::ostringstream os;
  os << prov.header() << "patient_id,crs,volume_cm3,surface_cm2,largest_cc_fraction,component_count\n";
  for (const auto& r : rows)
    os << cell(r.patient_id) << ',' << r.crs << ',' << format_fixed(r.record.volume_cm3, 4) << ','
       << format_fixed(r.record.surface_cm2, 4) << ',' << format_fixed(r.record.largest_cc_fraction, 6) << ','
       << r.record.component_count << "\n";
  return os.str();
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string morphology_summary_csv(const Provenance& prov, const std::vector<MorphologyRow>& rows) {
  std::ostringstream os;
  os << prov.header() << "feature,crs1,crs2,crs3\n";
  auto column = [&](int grade, auto get) {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.crs == grade) v.push_back(get(r.record));
    return v;
  };
  os << "n";
  for (int g = 1; g <= 3; ++g) os << ',' << column(g, [](const MorphologyRecord&) { return 0.0; }).size();
  os << "\n";
  auto line = [&](const char* name, auto get, int digits) {
    os << name;
    for (int g = 1; g <= 3; ++g) {
      const auto v = column(g, get);
      os << ',' << (v.empty() ? std::string("NA") : format_fixed(median(v), digits));
    }
    os << "\n";
  };
  line("volume_cm3_median", [](const MorphologyRecord& m) { return m.volume_cm3; }, 4);
  line("surface_cm2_median", [](const MorphologyRecord& m) { return m.surface_cm2; }, 4);
  line("largest_cc_fraction_median", [](const MorphologyRecord& m) { return m.largest_cc_fraction; }, 6);
  return os.str();
}

std::string ablation_csv(const Provenance& prov, const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << prov.header() << "configuration,ct,age,ca125,volume,auc,auc_median,auc_ci_low,auc_ci_high\n";
  for (const auto& r : rows)
    os << r.configuration << ',' << yes_no(r.ct) << ',' << yes_no(r.age) << ',' << yes_no(r.ca125) << ','
       << yes_no(r.volume) << ',' << fixed(r.auc.point) << ',' << fixed(r.auc.median) << ','
       << fixed(r.auc.ci_low) << ',' << fixed(r.auc.ci_high) << "\n";
  return os.str();
}

std::string exclusions_csv(const Provenance& prov, const std::vector<Exclusion>& rows) {
  std::ostringstream os;
  os << prov.header() << "patient_id,stage,reason\n";
  for (const auto& r : rows) os << cell(r.patient_id) << ',' << r.stage << ',' << cell(r.reason) << "\n";
  return os.str();
}

}  // namespace crs
