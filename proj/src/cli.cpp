#include <CLI11.hpp>
#include <map>
#include <ostream>

#include "pseudorgbd/commands.hpp"
#include "pseudorgbd/data_io.hpp"

namespace pseudorgbd {

namespace {

void add_gravity_flags(CLI::App* cmd, GravityConfig& g) {
  cmd->add_option("--gravity-iterations", g.max_iterations, "Maximum gravity update steps")->capture_default_str();
  cmd->add_option("--gravity-coarse-iterations", g.coarse_iterations, "Steps using the coarse angle threshold")
      ->capture_default_str();
  cmd->add_option("--gravity-coarse-threshold", g.coarse_threshold, "Coarse split threshold d (radians)")
      ->capture_default_str();
  cmd->add_option("--gravity-fine-threshold", g.fine_threshold, "Fine split threshold d (radians)")
      ->capture_default_str();
  cmd->add_option("--gravity-tolerance", g.tolerance, "Stop when g moves less than this (radians)")
      ->capture_default_str();
  cmd->add_option("--gravity-roughness-ratio", g.roughness_ratio,
                  "Drop normals rougher than this multiple of the median; <= 0 keeps all")
      ->capture_default_str();
}

void add_hha_flags(CLI::App* cmd, HhaConfig& h) {
  cmd->add_option("--height-range", h.height_range, "Height mapped to 255 (scene units)")->capture_default_str();
  cmd->add_option("--normal-window", h.normal_window, "Odd normal-fit window size in pixels")->capture_default_str();
  cmd->add_option("--normal-method", h.normal_method, "Normal estimator")
      ->transform(
          CLI::CheckedTransformer(std::map<std::string, NormalMethod>{{"inverse_depth", NormalMethod::kInverseDepthFit},
                                                                      {"pca", NormalMethod::kPca}})
              .description(""))
      ->option_text("{inverse_depth,pca} [inverse_depth]");
  cmd->add_option("--median-depth", h.median_depth, "Median depth anchor for relative inverse depth")
      ->capture_default_str();
  cmd->add_option("--disparity-low", h.disparity_low_percentile, "Disparity percentile mapped to 0")
      ->capture_default_str();
  cmd->add_option("--disparity-high", h.disparity_high_percentile, "Disparity percentile mapped to 255")
      ->capture_default_str();
  cmd->add_option("--floor-percentile", h.floor_percentile, "Percentile of the gravity projection taken as floor")
      ->capture_default_str();
  cmd->add_flag("--single-channel", h.single_channel, "Replicate disparity into all three channels");
}

void add_train_flags(CLI::App* cmd, TrainConfig& c, std::string& optimizer) {
  cmd->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--learning-rate", c.learning_rate, "SGD step size")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Seed for initialization and shuffling")->capture_default_str();
  cmd->add_option("--optimizer", optimizer, "sgd or momentum")
      ->capture_default_str()
      ->check(CLI::IsMember({"sgd", "momentum"}));
  cmd->add_option("--momentum", c.momentum, "Momentum coefficient")->capture_default_str();
  cmd->add_option("--hidden", c.hidden, "Hidden layer sizes")->capture_default_str()->expected(0, -1);
  cmd->add_option("--init-gain", c.init_gain, "Scale of the fan-in uniform initialization")->capture_default_str();
}

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pseudorgbd: pseudo RGB-D place classification toolkit"};
  app.set_config("--config", "", "key=value config file; command line flags take precedence");
  app.require_subcommand(1);

  EncodeOptions encode;
  std::string convention = "relative_inverse";
  auto* enc = app.add_subcommand("encode", "Encode depth images as HHA PPMs and log gravity estimates");
  enc->add_option("--input", encode.input, "Depth directory (.ten/.pgm) or manifest .json")->required();
  enc->add_option("--intrinsics", encode.intrinsics, "Camera intrinsics JSON")->required()->check(CLI::ExistingFile);
  enc->add_option("--out", encode.out, "Output directory")->required();
  enc->add_option("--convention", convention, "Convention of .ten files in a directory")
      ->capture_default_str()
      ->check(CLI::IsMember({"metric", "relative_inverse"}));
  add_gravity_flags(enc, encode.gravity);
  add_hha_flags(enc, encode.hha);

  GridOptions grid;
  auto* grd = app.add_subcommand("grid", "Build the place grid from training viewpoints");
  grd->add_option("--viewpoints", grid.viewpoints, "CSV sample_id,x,y")->required()->check(CLI::ExistingFile);
  grd->add_option("--rows", grid.rows, "Grid rows")->capture_default_str();
  grd->add_option("--cols", grid.cols, "Grid columns")->capture_default_str();
  grd->add_option("--out", grid.out, "Grid JSON output")->required();

  LabelOptions label;
  auto* lbl = app.add_subcommand("label", "Assign place-class labels to viewpoints");
  lbl->add_option("--grid", label.grid, "Grid JSON")->required()->check(CLI::ExistingFile);
  lbl->add_option("--viewpoints", label.viewpoints, "CSV sample_id,x,y")->required()->check(CLI::ExistingFile);
  lbl->add_option("--out", label.out, "Labels CSV output")->required();

  TrainOptions train;
  std::string target = "fusion";
  std::string train_optimizer = "momentum";
  auto* trn = app.add_subcommand("train", "Train an RGB head, an HHA head or the fusion MLP on embeddings");
  trn->add_option("--manifest", train.manifest, "Training manifest JSON")->required()->check(CLI::ExistingFile);
  trn->add_option("--labels", train.labels, "Labels CSV")->required()->check(CLI::ExistingFile);
  trn->add_option("--modality", target, "rgb, hha or fusion")
      ->capture_default_str()
      ->check(CLI::IsMember({"rgb", "hha", "fusion"}));
  trn->add_option("--grid", train.grid, "Grid JSON (class count = rows * cols)")->check(CLI::ExistingFile);
  trn->add_option("--classes", train.classes, "Class count when no grid is given");
  trn->add_option("--out", train.out, "Model output directory")->required();
  add_train_flags(trn, train.config, train_optimizer);

  EvalOptions eval;
  auto* evl = app.add_subcommand("eval", "Top-1 ablation report: fusion vs. RGB-Net, HHA-Net and naive averaging");
  evl->add_option("--manifest", eval.manifest, "Test manifest JSON")->required()->check(CLI::ExistingFile);
  evl->add_option("--labels", eval.labels, "Test labels CSV")->required()->check(CLI::ExistingFile);
  evl->add_option("--rgb-model", eval.rgb_model, "RGB head directory")->required()->check(CLI::ExistingDirectory);
  evl->add_option("--hha-model", eval.hha_model, "HHA head directory")->required()->check(CLI::ExistingDirectory);
  evl->add_option("--fusion-model", eval.fusion_model, "Fusion model directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  evl->add_option("--train-labels", eval.train_labels, "Training labels CSV (reports unseen-class accuracy)")
      ->check(CLI::ExistingFile);
  evl->add_option("--out", eval.out, "Report output directory")->required();

  SynthOptions synth;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic fixture tree from a JSON spec");
  syn->add_option("--spec", synth.spec, "Fixture spec JSON")->required()->check(CLI::ExistingFile);
  syn->add_option("--out", synth.out, "Output directory")->required();

  PipelineOptions pipe;
  std::string pipe_optimizer = "momentum";
  auto* pip = app.add_subcommand("pipeline", "Run encode, grid, label, train (rgb, hha, fusion) and eval in order");
  pip->add_option("--data", pipe.data, "Fixture tree with train/ and test/ manifests")->check(CLI::ExistingDirectory);
  pip->add_option("--synth", pipe.synth_spec, "Generate the fixture from this spec first")->check(CLI::ExistingFile);
  pip->add_option("--out", pipe.out, "Output directory")->required();
  pip->add_option("--rows", pipe.rows, "Grid rows")->capture_default_str();
  pip->add_option("--cols", pipe.cols, "Grid columns")->capture_default_str();
  add_gravity_flags(pip, pipe.gravity);
  add_hha_flags(pip, pipe.hha);
  add_train_flags(pip, pipe.config, pipe_optimizer);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << "{\"error\":" << json_escape(e.what()) << ",\"exit_code\":1}\n";
    return 1;
  }

  try {
    if (*enc) {
      encode.ten_convention = depth_convention_from_string(convention);
      cmd_encode(encode, out);
    } else if (*grd) {
      cmd_grid(grid, out);
    } else if (*lbl) {
      cmd_label(label, out);
    } else if (*trn) {
      train.target = train_target_from_string(target);
      train.config.optimizer = optimizer_from_string(train_optimizer);
      cmd_train(train, out);
    } else if (*evl) {
      cmd_eval(eval, out);
    } else if (*syn) {
      cmd_synth(synth, out);
    } else if (*pip) {
      if (pipe.data.empty() == pipe.synth_spec.empty()) {
        err << "{\"error\":\"pipeline: give exactly one of --data or --synth\",\"exit_code\":1}\n";
        return 1;
      }
      pipe.config.optimizer = optimizer_from_string(pipe_optimizer);
      run_pipeline(pipe, out);
    }
  } catch (const std::exception& e) {
    err << "{\"error\":" << json_escape(e.what()) << ",\"exit_code\":2}\n";
    return 2;
  }
  return 0;
}

}  // namespace pseudorgbd
