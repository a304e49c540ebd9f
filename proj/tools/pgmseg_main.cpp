// pgmseg: foreground/background segmentation from a bounding box, trimap or
// prior map, and dataset evaluation.
//
//   pgmseg segment --image in.png --bbox "x y w h" --out mask.png
//   pgmseg eval --manifest list.tsv
//
// Exit status: 0 success, 1 partial failure, 2 invalid invocation.

#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "pgmseg/dataset.hpp"
#include "pgmseg/image_io.hpp"
#include "pgmseg/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct ModelFlags {
  std::string mode = "semi";
  std::string solver = "pgm";
  pgmseg::SegConfig config;
};

void add_model_flags(CLI::App& app, ModelFlags& f) {
  auto& c = f.config;
  app.add_option("--mode", f.mode, "semi | auto | gb")->check(CLI::IsMember({"semi", "auto", "gb"}))->capture_default_str();
  app.add_option("--solver", f.solver, "sgm | pgm")->check(CLI::IsMember({"sgm", "pgm"}))->capture_default_str();
  app.add_option("--kf", c.kf, "foreground GMM components")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--kb", c.kb, "background GMM components")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--m", c.m, "most similar neighbors per superpixel")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lambda", c.lambda, "unary weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--iters", c.refine_iters, "refinement iterations")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--runs", c.runs, "reruns fused by majority vote")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--sp-size", c.target_sp_size, "target superpixel size in pixels")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", c.seed, "master seed")->capture_default_str();
  app.add_option("--p0", c.p0, "prior-map background threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
}

pgmseg::SegConfig resolve(const ModelFlags& f) {
  pgmseg::SegConfig c = f.config;
  c.mode = pgmseg::parse_mode(f.mode);
  c.solver = pgmseg::parse_solver(f.solver);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Foreground/background segmentation by probabilistic graph matching"};
  app.require_subcommand(1);

  ModelFlags seg_flags;
  std::string image_path, bbox_text, trimap_path, prior_path, out_path;
  std::string labels_path, matrix_path;
  bool verbose = false;
  auto* seg = app.add_subcommand("segment", "segment one image");
  seg->add_option("--image", image_path, "input PNG/JPEG")->required()->check(CLI::ExistingFile);
  auto* bbox_opt = seg->add_option("--bbox", bbox_text, "bounding box \"x y w h\"");
  auto* trimap_opt = seg->add_option("--trimap", trimap_path, "trimap PNG (0/128/255)")->check(CLI::ExistingFile);
  auto* prior_opt = seg->add_option("--prior", prior_path, "foreground-probability map (gray/255)")->check(CLI::ExistingFile);
  bbox_opt->excludes(trimap_opt)->excludes(prior_opt);
  trimap_opt->excludes(prior_opt);
  seg->add_option("--out", out_path, "output mask PNG (0/255)")->required();
  seg->add_option("--labels-out", labels_path, "debug superpixel label map PNG (first run)");
  seg->add_option("--dump-matrix", matrix_path, "debug assignment matrix, coordinate text (first run, last iteration)");
  seg->add_flag("-v,--verbose", verbose, "per-iteration progress on stderr");
  add_model_flags(*seg, seg_flags);

  ModelFlags eval_flags;
  std::string manifest_path, records_path;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* ev = app.add_subcommand("eval", "evaluate a manifest of images");
  ev->add_option("--manifest", manifest_path, "tab-separated manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--records", records_path, "write records here instead of stdout");
  ev->add_option("--threads", threads, "entries processed concurrently")->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_flag("-v,--verbose", verbose, "per-entry progress on stderr");
  add_model_flags(*ev, eval_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*seg) {
    pgmseg::SegConfig config;
    pgmseg::TriMap trimap;
    pgmseg::LabImage image;
    try {
      config = resolve(seg_flags);
      image = pgmseg::srgb_to_lab(pgmseg::io::read_rgb(image_path));
      if (!bbox_text.empty()) {
        trimap = pgmseg::trimap_from_bbox(image.size, pgmseg::parse_bbox(bbox_text));
      } else if (!trimap_path.empty()) {
        trimap = pgmseg::trimap_from_gray(pgmseg::io::read_gray(trimap_path));
      } else if (!prior_path.empty()) {
        const auto prior = pgmseg::io::read_prior_map(prior_path);
        if (prior.size != image.size) throw std::invalid_argument("prior map size differs from image");
        trimap = pgmseg::trimap_from_prior(image.size, prior.foreground_prob, config.p0);
      } else {
        throw std::invalid_argument("one of --bbox, --trimap or --prior is required");
      }
      if (trimap.size != image.size) throw std::invalid_argument("trimap size differs from image");
    } catch (const std::exception& e) {
      std::cerr << "pgmseg segment: " << e.what() << '\n';
      return kExitUsage;
    }

    try {
      pgmseg::AssignmentMatrix matrix;
      pgmseg::SuperpixelPartition partition;
      pgmseg::RunHooks hooks;
      hooks.progress = verbose ? &std::cerr : nullptr;
      hooks.final_matrix = matrix_path.empty() ? nullptr : &matrix;
      hooks.partition = labels_path.empty() ? nullptr : &partition;
      const auto result = pgmseg::segment(image, trimap, config, hooks);
      pgmseg::io::write_gray(out_path, pgmseg::encode_mask(result.mask));
      if (!labels_path.empty()) pgmseg::io::write_rgb(labels_path, pgmseg::render_label_map(partition));
      if (!matrix_path.empty()) {
        std::ofstream out(matrix_path);
        pgmseg::write_coordinates(out, matrix);
      }
      if (result.degenerate_runs > 0) {
        std::cerr << "warning: " << result.degenerate_runs << " of " << config.runs
                  << " runs collapsed to a single class\n";
      }
    } catch (const std::exception& e) {
      std::cerr << "pgmseg segment: " << e.what() << '\n';
      return kExitPartial;
    }
    return kExitOk;
  }

  try {
    const auto config = resolve(eval_flags);
    const auto report = pgmseg::run_dataset(manifest_path, config, threads, verbose ? &std::cerr : nullptr);
    if (records_path.empty()) {
      pgmseg::write_report(std::cout, report);
    } else {
      std::ofstream out(records_path);
      if (!out) throw std::invalid_argument("cannot write " + records_path);
      pgmseg::write_report(out, report);
    }
    return report.error_count() == 0 ? kExitOk : kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "pgmseg eval: " << e.what() << '\n';
    return kExitUsage;
  }
}
