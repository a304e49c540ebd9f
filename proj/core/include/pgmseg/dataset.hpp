#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgmseg/pipeline.hpp"

namespace pgmseg {

enum class Metric { BboxError, Overlap };
enum class InitKind { BoundingBox, Trimap, Prior };

std::string_view to_string(Metric metric);

/// One manifest line, tab-separated:
///
///   id  image  groundtruth  kind  init  [metric]
///
/// kind is bbox | trimap | prior and init is the matching file (bbox text
/// file, 0/128/255 trimap PNG, or grayscale prior map). metric is bbox_error
/// or overlap; it defaults to bbox_error for bbox entries and overlap
/// otherwise. Relative paths resolve against the manifest's directory.
/// Blank lines and lines starting with '#' are skipped.
struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path groundtruth;
  InitKind kind = InitKind::BoundingBox;
  std::filesystem::path init;
  Metric metric = Metric::BboxError;
};

/// Throws std::invalid_argument naming the offending line.
std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir);

struct EvalRecord {
  std::string image_id;
  Metric metric = Metric::BboxError;
  double value = 0.0;
  std::string config;
};

struct EvalOutcome {
  std::string image_id;
  /// Empty when the entry failed.
  std::optional<EvalRecord> record;
  std::string error;
};

struct DatasetReport {
  /// Manifest order.
  std::vector<EvalOutcome> outcomes;

  std::vector<EvalRecord> records() const;
  std::size_t error_count() const;
  /// Arithmetic mean over successful records; nullopt when there are none.
  std::optional<double> mean() const;
  std::optional<double> mean(Metric metric) const;
};

/// Segments and scores one entry.
EvalRecord evaluate_entry(const ManifestEntry& entry, const SegConfig& config);

/// Runs every entry (up to `threads` at once). Failing entries become error
/// outcomes; the run continues. Throws std::invalid_argument when the
/// manifest is unreadable or has no entries.
DatasetReport run_dataset(const std::filesystem::path& manifest, const SegConfig& config,
                          unsigned threads = 1, std::ostream* progress = nullptr);

/// "id<TAB>metric<TAB>value" per record, "id<TAB>error<TAB>message" per
/// failure, then "# mean" summary lines.
void write_report(std::ostream& out, const DatasetReport& report);

}  // namespace pgmseg
