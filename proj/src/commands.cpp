#include "pseudorgbd/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "pseudorgbd/data_io.hpp"
#include "pseudorgbd/eval.hpp"
#include "pseudorgbd/places.hpp"
#include "pseudorgbd/synth.hpp"

namespace pseudorgbd {

using nlohmann::json;

namespace {

struct DepthInput {
  std::string name;
  fs::path path;
  DepthConvention convention;
};

std::vector<DepthInput> collect_depth_inputs(const EncodeOptions& o) {
  std::vector<DepthInput> inputs;
  if (fs::is_directory(o.input)) {
    for (const auto& entry : fs::directory_iterator(o.input)) {
      const auto ext = entry.path().extension().string();
      if (!entry.is_regular_file() || (ext != ".ten" && ext != ".pgm")) continue;
      inputs.push_back({entry.path().stem().string(), entry.path(),
                        ext == ".pgm" ? DepthConvention::kMetricDepth : o.ten_convention});
    }
    std::sort(inputs.begin(), inputs.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  } else if (o.input.extension() == ".json") {
    const DatasetManifest m = read_manifest(o.input);
    const DepthConvention convention = m.depth_convention.value_or(DepthConvention::kMetricDepth);
    for (const auto& e : m.entries) {
      if (!e.depth.empty()) inputs.push_back({e.sample_id, m.resolve(e.depth), convention});
    }
  } else {
    throw DataError("encode: input '" + o.input.string() + "' is neither a directory nor a manifest");
  }
  return inputs;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::vector<int> class_histogram(const std::vector<LabeledSample>& labels, int classes) {
  std::vector<int> hist(static_cast<std::size_t>(classes), 0);
  for (const auto& l : labels) {
    if (l.label < 0 || l.label >= classes) {
      throw DataError("label " + std::to_string(l.label) + " of '" + l.sample_id + "' outside " +
                      std::to_string(classes) + " classes");
    }
    ++hist[static_cast<std::size_t>(l.label)];
  }
  return hist;
}

void print_histogram(const std::vector<int>& hist, std::ostream& log) {
  const auto unseen = std::count(hist.begin(), hist.end(), 0);
  log << "class histogram (" << hist.size() << " classes, " << unseen << " empty):";
  for (std::size_t c = 0; c < hist.size(); ++c) log << (c % 20 == 0 ? "\n  " : " ") << hist[c];
  log << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

}  // namespace

int cmd_encode(const EncodeOptions& o, std::ostream& log) {
  o.gravity.validate();
  o.hha.validate();
  if (!fs::exists(o.input)) throw DataError("encode: input '" + o.input.string() + "' does not exist");
  const std::vector<DepthInput> inputs = collect_depth_inputs(o);
  if (inputs.empty()) throw DataError("encode: no inputs in '" + o.input.string() + "'");
  const CameraIntrinsics<double> intr = read_intrinsics(o.intrinsics);
  fs::create_directories(o.out);

  std::string csv =
      "name,gx,gy,gz,iterations,final_angle_change,normals_used,degenerate_split,constant_depth,floor_offset\n";
  for (const auto& in : inputs) {
    EncodedDepth encoded;
    try {
      encoded = encode_depth(read_depth(in.path, in.convention), intr, o.gravity, o.hha);
    } catch (const Error& e) {
      throw DataError("encode: '" + in.path.string() + "': " + e.what());
    }
    write_ppm(o.out / (in.name + ".ppm"), encoded.hha);
    const auto& g = encoded.gravity;
    csv += in.name + "," + fmt("%.17g", g.g.x()) + "," + fmt("%.17g", g.g.y()) + "," + fmt("%.17g", g.g.z()) + "," +
           std::to_string(g.iterations_run) + "," + fmt("%.17g", g.final_angle_change) + "," +
           std::to_string(g.normals_used) + "," + (g.degenerate_split ? "1" : "0") + "," +
           (encoded.hha.constant_depth ? "1" : "0") + "," + fmt("%.17g", encoded.hha.floor_offset) + "\n";
    if (g.degenerate_split) log << "warning: " << in.name << ": empty normal split during gravity estimation\n";
    if (encoded.hha.constant_depth) log << "warning: " << in.name << ": constant depth, disparity set to 128\n";
  }
  write_text(o.out / "gravity_log.csv", csv);
  log << "encoded " << inputs.size() << " depth image(s) into " << o.out.string() << "\n";
  return static_cast<int>(inputs.size());
}

void cmd_grid(const GridOptions& o, std::ostream& log) {
  const PlaceGrid grid = build_grid(read_viewpoints_csv(o.viewpoints), o.rows, o.cols);
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  write_grid(o.out, grid);
  log << "grid " << grid.rows << "x" << grid.cols << " over [" << grid.min_x << ", " << grid.max_x << "] x ["
      << grid.min_y << ", " << grid.max_y << "] -> " << o.out.string() << "\n";
}

void cmd_label(const LabelOptions& o, std::ostream& log) {
  const PlaceGrid grid = read_grid(o.grid);
  const LabeledDataset labeled = label_dataset(grid, read_viewpoints_csv(o.viewpoints));
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  write_labels_csv(o.out, labeled.labels);
  log << "labeled " << labeled.labels.size() << " viewpoint(s) -> " << o.out.string() << "\n";
  print_histogram(labeled.histogram, log);
}

std::string to_string(TrainTarget target) {
  switch (target) {
    case TrainTarget::kRgb:
      return "rgb";
    case TrainTarget::kHha:
      return "hha";
    case TrainTarget::kFusion:
      return "fusion";
  }
  return "fusion";
}

TrainTarget train_target_from_string(const std::string& s) {
  if (s == "rgb") return TrainTarget::kRgb;
  if (s == "hha") return TrainTarget::kHha;
  if (s == "fusion") return TrainTarget::kFusion;
  throw ContractError("unknown modality '" + s + "' (expected rgb, hha or fusion)");
}

void cmd_train(const TrainOptions& o, std::ostream& log) {
  o.config.validate();
  int classes = o.classes;
  if (!o.grid.empty()) classes = read_grid(o.grid).num_classes();
  if (classes < 2) throw ContractError("train: the class count must come from --grid or --classes (>= 2)");

  const DatasetManifest manifest = read_manifest(o.manifest);
  const std::vector<LabeledSample> all_labels = read_labels_csv(o.labels);
  Eigen::MatrixXf inputs;
  std::vector<std::string> ids;
  if (o.target == TrainTarget::kFusion) {
    JoinedEmbeddings joined =
        join_pairs(load_embeddings(manifest, Modality::kRgb), load_embeddings(manifest, Modality::kHha));
    inputs = std::move(joined.vectors);
    ids = std::move(joined.ids);
  } else {
    EmbeddingSet set = load_embeddings(manifest, o.target == TrainTarget::kRgb ? Modality::kRgb : Modality::kHha);
    inputs = std::move(set.vectors);
    ids = std::move(set.ids);
  }
  const std::vector<int> labels = labels_for(ids, all_labels);
  class_histogram(all_labels, classes);

  const TrainResult<float> result = train_classifier<float>(inputs, labels, classes, o.config);
  json header{{"modality", to_string(o.target)},
              {"classes", classes},
              {"seed", o.config.seed},
              {"config", o.config.to_json()},
              {"train_samples", ids.size()}};
  save_model(o.out, result.model, header);
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    csv += std::to_string(e + 1) + "," + fmt("%.17g", result.loss_history[e]) + "\n";
  }
  write_text(o.out / "loss_history.csv", csv);

  const auto predictions = predict_batch<float>(result.model, inputs, ids);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i].argmax_class == labels[i] ? 1 : 0;
  log << "trained " << to_string(o.target) << " model " << "[" << inputs.rows();
  for (int h : o.config.hidden) log << ", " << h;
  log << ", " << classes << "] on " << ids.size() << " samples: final loss " << fmt("%.4f", result.loss_history.back())
      << ", training top-1 " << fmt("%.1f", 100.0 * static_cast<double>(correct) / static_cast<double>(ids.size()))
      << "% -> " << o.out.string() << "\n";
}

double cmd_eval(const EvalOptions& o, std::ostream& log) {
  const DatasetManifest manifest = read_manifest(o.manifest);
  const JoinedEmbeddings test =
      join_pairs(load_embeddings(manifest, Modality::kRgb), load_embeddings(manifest, Modality::kHha));
  const MlpModel<float> rgb = load_model(o.rgb_model);
  const MlpModel<float> hha = load_model(o.hha_model);
  const MlpModel<float> fusion = load_model(o.fusion_model);
  if (rgb.input_dim() != test.rgb_dim || hha.input_dim() != test.vectors.rows() - test.rgb_dim ||
      fusion.input_dim() != test.vectors.rows()) {
    throw ContractError("eval: model input sizes do not match the test embeddings");
  }
  const std::vector<LabeledSample> truth_all = read_labels_csv(o.labels);
  const std::vector<int> truth_ids = labels_for(test.ids, truth_all);
  std::vector<LabeledSample> truth;
  for (std::size_t i = 0; i < test.ids.size(); ++i) truth.push_back({test.ids[i], truth_ids[i]});

  std::vector<int> train_hist;
  if (!o.train_labels.empty()) train_hist = class_histogram(read_labels_csv(o.train_labels), fusion.num_classes());

  const EvalReport report = ablation_report<float>(rgb, hha, fusion, test, truth, train_hist);
  fs::create_directories(o.out);
  const std::string table = render_table(report);
  write_text(o.out / "report.txt", table);
  write_text(o.out / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(o.out / "confusion.csv", confusion_to_csv(report));
  log << table;
  return report.top1;
}

void cmd_synth(const SynthOptions& o, std::ostream& log) {
  std::ifstream in(o.spec);
  if (!in) throw DataError("synth: cannot open spec '" + o.spec.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("synth: '" + o.spec.string() + "' is not valid JSON: " + e.what());
  }
  const FixtureSpec spec = fixture_spec_from_json(doc);
  write_fixture(spec, o.out);
  log << "wrote synthetic fixture '" << spec.name << "' (" << spec.embeddings.classes << " classes, "
      << spec.embeddings.train_per_class << "/" << spec.embeddings.test_per_class
      << " train/test samples per class) -> " << o.out.string() << "\n";
}

double run_pipeline(const PipelineOptions& o, std::ostream& log) {
  fs::create_directories(o.out);
  fs::path data = o.data;
  if (!o.synth_spec.empty()) {
    data = o.out / "data";
    log << "[synth]\n";
    cmd_synth({o.synth_spec, data}, log);
  }
  if (data.empty()) throw ContractError("pipeline: need --data or --synth");
  const fs::path train_manifest = data / "train" / "manifest.json";
  const fs::path test_manifest = data / "test" / "manifest.json";

  for (const char* split : {"train", "test"}) {
    const fs::path manifest_path = data / split / "manifest.json";
    const DatasetManifest m = read_manifest(manifest_path);
    const bool has_depth =
        std::any_of(m.entries.begin(), m.entries.end(), [](const auto& e) { return !e.depth.empty(); });
    if (!has_depth) continue;
    log << "[encode " << split << "]\n";
    EncodeOptions enc;
    enc.input = manifest_path;
    enc.intrinsics = data / "intrinsics.json";
    enc.out = o.out / "hha" / split;
    enc.gravity = o.gravity;
    enc.hha = o.hha;
    cmd_encode(enc, log);
  }

  // Viewpoint CSVs are derived from the manifests so --data may point at any manifest pair.
  for (const char* split : {"train", "test"}) {
    write_viewpoints_csv(o.out / (std::string(split) + "_viewpoints.csv"),
                         read_manifest(data / split / "manifest.json", false).viewpoints());
  }
  log << "[grid]\n";
  cmd_grid({o.out / "train_viewpoints.csv", o.rows, o.cols, o.out / "grid.json"}, log);
  log << "[label train]\n";
  cmd_label({o.out / "grid.json", o.out / "train_viewpoints.csv", o.out / "train_labels.csv"}, log);
  log << "[label test]\n";
  cmd_label({o.out / "grid.json", o.out / "test_viewpoints.csv", o.out / "test_labels.csv"}, log);

  for (TrainTarget target : {TrainTarget::kRgb, TrainTarget::kHha, TrainTarget::kFusion}) {
    log << "[train " << to_string(target) << "]\n";
    TrainOptions t;
    t.manifest = train_manifest;
    t.labels = o.out / "train_labels.csv";
    t.target = target;
    t.grid = o.out / "grid.json";
    t.out = o.out / "models" / to_string(target);
    t.config = o.config;
    cmd_train(t, log);
  }

  log << "[eval]\n";
  EvalOptions e;
  e.manifest = test_manifest;
  e.labels = o.out / "test_labels.csv";
  e.rgb_model = o.out / "models" / "rgb";
  e.hha_model = o.out / "models" / "hha";
  e.fusion_model = o.out / "models" / "fusion";
  e.train_labels = o.out / "train_labels.csv";
  e.out = o.out / "report";
  return cmd_eval(e, log);
}

}  // namespace pseudorgbd
