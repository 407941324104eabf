#pragma once

// File-level pipeline steps behind the `pseudorgbd` command line tool. Each
// step reads and writes only the documented formats, so the steps can run
// standalone or chained by `run_pipeline`.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pseudorgbd/fusion.hpp"
#include "pseudorgbd/geometry.hpp"

namespace pseudorgbd {

struct EncodeOptions {
  fs::path input;       // directory of .ten/.pgm depth files, or a manifest .json
  fs::path intrinsics;  // JSON {fx, fy, cx, cy, width, height}
  fs::path out;
  DepthConvention ten_convention{DepthConvention::kRelativeInverseDepth};  // for .ten files in a directory
  GravityConfig gravity;
  HhaConfig hha;
};

/// One PPM per depth image plus gravity_log.csv. Returns the number of images encoded.
int cmd_encode(const EncodeOptions& options, std::ostream& log);

struct GridOptions {
  fs::path viewpoints;
  int rows{10};
  int cols{10};
  fs::path out;
};

void cmd_grid(const GridOptions& options, std::ostream& log);

struct LabelOptions {
  fs::path grid;
  fs::path viewpoints;
  fs::path out;
};

void cmd_label(const LabelOptions& options, std::ostream& log);

enum class TrainTarget { kRgb, kHha, kFusion };
std::string to_string(TrainTarget target);
TrainTarget train_target_from_string(const std::string& s);

struct TrainOptions {
  fs::path manifest;
  fs::path labels;
  TrainTarget target{TrainTarget::kFusion};
  fs::path grid;   // preferred source of the class count
  int classes{0};  // used when no grid is given
  fs::path out;
  TrainConfig config;
};

/// Writes the model directory and <out>/loss_history.csv.
void cmd_train(const TrainOptions& options, std::ostream& log);

struct EvalOptions {
  fs::path manifest;
  fs::path labels;
  fs::path rgb_model;
  fs::path hha_model;
  fs::path fusion_model;
  fs::path train_labels;  // optional, enables the seen/unseen split
  fs::path out;
};

/// Writes report.txt, report.json and confusion.csv; returns the fusion top-1.
double cmd_eval(const EvalOptions& options, std::ostream& log);

struct SynthOptions {
  fs::path spec;
  fs::path out;
};

void cmd_synth(const SynthOptions& options, std::ostream& log);

struct PipelineOptions {
  fs::path data;        // fixture tree with train/ and test/ manifests
  fs::path synth_spec;  // when set, generate the fixture into <out>/data first
  fs::path out;
  int rows{10};
  int cols{10};
  GravityConfig gravity;
  HhaConfig hha;
  TrainConfig config;
};

/// Encode, grid, label, train (rgb, hha, fusion) and eval in order. Returns the fusion top-1.
double run_pipeline(const PipelineOptions& options, std::ostream& log);

/// Parses argv and dispatches. Exit codes: 0 success, 1 usage error, 2 data or
/// contract error (a one-line JSON error record goes to `err`).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pseudorgbd
