#include "pgmseg/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "pgmseg/evaluation.hpp"
#include "pgmseg/image_io.hpp"

namespace pgmseg {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// Smallest rectangle holding every non-BACKGROUND pixel.
BoundingBox unknown_extent(const TriMap& t) {
  int x0 = t.size.width, y0 = t.size.height, x1 = -1, y1 = -1;
  for (int y = 0; y < t.size.height; ++y) {
    for (int x = 0; x < t.size.width; ++x) {
      if (t.labels[static_cast<std::size_t>(y) * t.size.width + x] == TrimapLabel::Background) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw std::invalid_argument("trimap has no unknown region");
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace

std::string_view to_string(Metric metric) {
  return metric == Metric::BboxError ? "bbox_error" : "overlap";
}

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_tabs(line);
    const auto fail = [&](const std::string& why) {
      return std::invalid_argument("manifest line " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() < 5 || f.size() > 6) throw fail("expected 5 or 6 tab-separated fields");
    ManifestEntry e;
    e.id = f[0];
    e.image = resolve(base_dir, f[1]);
    e.groundtruth = resolve(base_dir, f[2]);
    if (f[3] == "bbox") {
      e.kind = InitKind::BoundingBox;
    } else if (f[3] == "trimap") {
      e.kind = InitKind::Trimap;
    } else if (f[3] == "prior") {
      e.kind = InitKind::Prior;
    } else {
      throw fail("unknown init kind '" + f[3] + "'");
    }
    e.init = resolve(base_dir, f[4]);
    e.metric = e.kind == InitKind::BoundingBox ? Metric::BboxError : Metric::Overlap;
    if (f.size() == 6) {
      if (f[5] == "bbox_error") {
        e.metric = Metric::BboxError;
      } else if (f[5] == "overlap") {
        e.metric = Metric::Overlap;
      } else {
        throw fail("unknown metric '" + f[5] + "'");
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<EvalRecord> DatasetReport::records() const {
  std::vector<EvalRecord> r;
  for (const auto& o : outcomes) {
    if (o.record) r.push_back(*o.record);
  }
  return r;
}

std::size_t DatasetReport::error_count() const {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const EvalOutcome& o) { return !o.record; }));
}

std::optional<double> DatasetReport::mean() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (!o.record) continue;
    s += o.record->value;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

std::optional<double> DatasetReport::mean(Metric metric) const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (!o.record || o.record->metric != metric) continue;
    s += o.record->value;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

EvalRecord evaluate_entry(const ManifestEntry& entry, const SegConfig& config) {
  const LabImage image = srgb_to_lab(io::read_rgb(entry.image));
  const SegMask truth = decode_mask(io::read_gray(entry.groundtruth));
  if (truth.size != image.size) throw std::invalid_argument("ground truth size differs from image");

  TriMap trimap;
  switch (entry.kind) {
    case InitKind::BoundingBox:
      trimap = trimap_from_bbox(image.size, io::read_bbox_file(entry.init));
      break;
    case InitKind::Trimap:
      trimap = trimap_from_gray(io::read_gray(entry.init));
      break;
    case InitKind::Prior: {
      const auto prior = io::read_prior_map(entry.init);
      if (prior.size != image.size) throw std::invalid_argument("prior map size differs from image");
      trimap = trimap_from_prior(image.size, prior.foreground_prob, config.p0);
      break;
    }
  }

  const SegMask mask = segment(image, trimap, config).mask;
  EvalRecord rec;
  rec.image_id = entry.id;
  rec.metric = entry.metric;
  rec.config = config.summary();
  if (entry.metric == Metric::BboxError) {
    rec.value = bbox_error(mask, truth, trimap.box ? *trimap.box : unknown_extent(trimap));
  } else {
    rec.value = overlap_score(mask, truth).value;
  }
  return rec;
}

DatasetReport run_dataset(const std::filesystem::path& manifest, const SegConfig& config,
                          unsigned threads, std::ostream* progress) {
  config.validate();
  std::ifstream in(manifest);
  if (!in) throw std::invalid_argument("cannot open manifest: " + manifest.string());
  const auto entries = parse_manifest(in, manifest.parent_path());
  if (entries.empty()) throw std::invalid_argument("manifest has no entries");

  DatasetReport report;
  report.outcomes.resize(entries.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      EvalOutcome& out = report.outcomes[i];
      out.image_id = entries[i].id;
      try {
        out.record = evaluate_entry(entries[i], config);
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      if (progress) {
        std::lock_guard lock(log_mutex);
        *progress << entries[i].id << (out.record ? std::string(" done") : " failed: " + out.error) << '\n';
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(entries.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return report;
}

void write_report(std::ostream& out, const DatasetReport& report) {
  const auto flags = out.flags();
  out << std::setprecision(10);
  for (const auto& o : report.outcomes) {
    if (o.record) {
      out << o.image_id << '\t' << to_string(o.record->metric) << '\t' << o.record->value << '\n';
    } else {
      out << o.image_id << "\terror\t" << o.error << '\n';
    }
  }
  for (Metric m : {Metric::BboxError, Metric::Overlap}) {
    if (const auto v = report.mean(m)) out << "# mean\t" << to_string(m) << '\t' << *v << '\n';
  }
  if (const auto v = report.mean()) out << "# mean\tall\t" << *v << '\n';
  out.flags(flags);
}

}  // namespace pgmseg
