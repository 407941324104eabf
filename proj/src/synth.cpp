#include "pseudorgbd/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace pseudorgbd {

using nlohmann::json;

void SceneSpec::validate() const {
  intrinsics.validate();
  if (!(gravity.norm() > 0) || !gravity.allFinite()) throw ContractError("scene: gravity must be a non-zero vector");
  if (has_ground && !(camera_height > 0)) throw ContractError("scene: camera_height must be positive");
  for (const auto& w : walls) {
    if (!(w.normal.norm() > 0) || !w.normal.allFinite() || !std::isfinite(w.offset)) {
      throw ContractError("scene: degenerate wall plane");
    }
  }
  if (!(noise_sigma >= 0)) throw ContractError("scene: noise_sigma must be >= 0");
}

RenderedScene render_depth(const SceneSpec& spec) {
  spec.validate();
  const auto& intr = spec.intrinsics;
  std::vector<Plane> planes;
  const Eigen::Vector3d g = spec.gravity.normalized();
  if (spec.has_ground) planes.push_back({g, spec.camera_height});
  for (const auto& w : spec.walls) planes.push_back({w.normal.normalized(), w.offset / w.normal.norm()});

  RenderedScene out;
  out.gravity = g;
  out.camera_height = spec.has_ground ? spec.camera_height : 0.0;
  out.depth.convention = DepthConvention::kMetricDepth;
  out.depth.values = ImageMatrix<double>::Zero(intr.height, intr.width);
  out.normals = Points3<double>::Zero(3, static_cast<Eigen::Index>(intr.width) * intr.height);
  out.plane_id.assign(static_cast<std::size_t>(intr.width) * intr.height, -1);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Eigen::Vector3d ray((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      int best_id = -1;
      for (std::size_t k = 0; k < planes.size(); ++k) {
        const double denom = planes[k].normal.dot(ray);
        if (denom == 0) continue;
        const double t = planes[k].offset / denom;
        if (t > 0 && t < best) {
          best = t;
          best_id = static_cast<int>(k);
        }
      }
      // Noise is drawn for every pixel so the stream does not depend on coverage.
      const double eps = noise(rng);
      if (best_id < 0) continue;
      const Eigen::Index i = static_cast<Eigen::Index>(v) * intr.width + u;
      const Eigen::Vector3d& n = planes[static_cast<std::size_t>(best_id)].normal;
      out.depth.values(v, u) = spec.noise_sigma > 0 ? best * (1.0 + spec.noise_sigma * eps) : best;
      out.normals.col(i) = n.dot(ray) < 0 ? n : Eigen::Vector3d(-n);
      out.plane_id[static_cast<std::size_t>(i)] = best_id;
    }
  }
  return out;
}

namespace {

// Orthonormal pair spanning the plane perpendicular to g, the first as close to +z as possible.
std::pair<Eigen::Vector3d, Eigen::Vector3d> horizontal_basis(const Eigen::Vector3d& g) {
  Eigen::Vector3d forward = Eigen::Vector3d::UnitZ() - g.dot(Eigen::Vector3d::UnitZ()) * g;
  if (forward.norm() < 1e-9) forward = Eigen::Vector3d::UnitX() - g.dot(Eigen::Vector3d::UnitX()) * g;
  forward.normalize();
  return {forward, g.cross(forward).normalized()};
}

}  // namespace

SceneSpec random_room_scene(std::uint64_t seed, const CameraIntrinsics<double>& intrinsics, double max_tilt_deg,
                            int walls, double noise_sigma) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneSpec spec;
  spec.intrinsics = intrinsics;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed * 7919 + 17;
  spec.camera_height = 1.0 + unit(rng);

  const double tilt = unit(rng) * max_tilt_deg * std::numbers::pi / 180.0;
  const double axis_angle = unit(rng) * 2.0 * std::numbers::pi;
  const Eigen::Vector3d axis(std::cos(axis_angle), 0.0, std::sin(axis_angle));
  spec.gravity = Eigen::AngleAxisd(tilt, axis) * Eigen::Vector3d::UnitY();

  const auto [forward, side] = horizontal_basis(spec.gravity);
  // The camera faces a corner so two walls stay in view.
  const double first = -std::numbers::pi / 4 + (unit(rng) - 0.5) * 0.6;
  for (int k = 0; k < walls; ++k) {
    const double phi = first + k * std::numbers::pi / 2;
    const Eigen::Vector3d n = std::cos(phi) * forward + std::sin(phi) * side;
    spec.walls.push_back({n, 4.0 + 6.0 * unit(rng)});
  }
  return spec;
}

SceneSpec rotate_scene(const SceneSpec& spec, const Eigen::Matrix3d& rotation) {
  SceneSpec out = spec;
  out.gravity = rotation * spec.gravity;
  for (auto& w : out.walls) w.normal = rotation * w.normal;
  return out;
}

std::string to_string(Complementarity mode) { return mode == Complementarity::kBoth ? "both" : "split"; }

Complementarity complementarity_from_string(const std::string& s) {
  if (s == "both") return Complementarity::kBoth;
  if (s == "split") return Complementarity::kSplit;
  throw DataError("invalid spec field 'mode': expected both or split, got '" + s + "'");
}

void EmbeddingSpec::validate() const {
  auto bad = [](const char* field, const char* why) {
    throw DataError(std::string("invalid spec field '") + field + "': " + why);
  };
  if (classes < 2) bad("classes", "must be >= 2");
  if (train_per_class < 1) bad("train_per_class", "must be >= 1");
  if (test_per_class < 1) bad("test_per_class", "must be >= 1");
  if (dim < 2) bad("dim", "must be >= 2");
  if (!(separation > 0) || !std::isfinite(separation)) bad("separation", "must be > 0");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma)) bad("noise_sigma", "must be >= 0");
  if (!(domain_shift >= 0) || !std::isfinite(domain_shift)) bad("domain_shift", "must be >= 0");
}

namespace {

// `count` points in R^dim with pairwise distance >= separation, by rejection
// sampling from an isotropic Gaussian that widens when crowded.
Eigen::MatrixXd separated_means(int count, int dim, double separation, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double scale = 1.5 * separation / std::sqrt(static_cast<double>(dim));
  Eigen::MatrixXd means(dim, count);
  int accepted = 0;
  int failures = 0;
  while (accepted < count) {
    Eigen::VectorXd candidate(dim);
    for (int d = 0; d < dim; ++d) candidate(d) = scale * normal(rng);
    bool ok = true;
    for (int j = 0; j < accepted && ok; ++j) ok = (means.col(j) - candidate).norm() >= separation;
    if (ok) {
      means.col(accepted++) = candidate;
      failures = 0;
    } else if (++failures > 200) {
      scale *= 1.25;
      failures = 0;
    }
  }
  return means;
}

std::string sample_id(const char* split, int cls, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d_%03d", split, cls, index);
  return buf;
}

}  // namespace

SyntheticEmbeddings generate_embeddings(const EmbeddingSpec& spec) {
  spec.validate();
  std::mt19937_64 mean_rng(spec.seed);
  std::mt19937_64 sample_rng(spec.seed ^ 0xA5A5A5A5DEADBEEFULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int half = spec.classes / 2;
  SyntheticEmbeddings out;
  for (int m = 0; m < 2; ++m) {
    // One extra mean serves as the collapse point for uninformative classes.
    const Eigen::MatrixXd drawn = separated_means(spec.classes + 1, spec.dim, spec.separation, mean_rng);
    Eigen::MatrixXd means = drawn.leftCols(spec.classes);
    if (spec.mode == Complementarity::kSplit) {
      for (int c = 0; c < spec.classes; ++c) {
        const bool informative = m == 0 ? c < half : c >= half;
        if (!informative) means.col(c) = drawn.col(spec.classes);
      }
    }
    (m == 0 ? out.rgb_means : out.hha_means) = means;
  }

  Eigen::VectorXd shift = Eigen::VectorXd::Zero(spec.dim);
  if (spec.domain_shift > 0) {
    for (int d = 0; d < spec.dim; ++d) shift(d) = normal(mean_rng);
    shift *= spec.domain_shift / shift.norm();
  }

  auto fill = [&](const char* split, int per_class, const Eigen::VectorXd& offset, EmbeddingSet& rgb, EmbeddingSet& hha,
                  std::vector<int>& labels) {
    rgb.modality = Modality::kRgb;
    hha.modality = Modality::kHha;
    const Eigen::Index n = static_cast<Eigen::Index>(spec.classes) * per_class;
    rgb.vectors.resize(spec.dim, n);
    hha.vectors.resize(spec.dim, n);
    Eigen::Index col = 0;
    for (int c = 0; c < spec.classes; ++c) {
      for (int s = 0; s < per_class; ++s, ++col) {
        const std::string id = sample_id(split, c, s);
        rgb.ids.push_back(id);
        hha.ids.push_back(id);
        labels.push_back(c);
        for (int d = 0; d < spec.dim; ++d) {
          rgb.vectors(d, col) =
              static_cast<float>(out.rgb_means(d, c) + offset(d) + spec.noise_sigma * normal(sample_rng));
        }
        for (int d = 0; d < spec.dim; ++d) {
          hha.vectors(d, col) =
              static_cast<float>(out.hha_means(d, c) + offset(d) + spec.noise_sigma * normal(sample_rng));
        }
      }
    }
  };
  fill("train", spec.train_per_class, Eigen::VectorXd::Zero(spec.dim), out.train_rgb, out.train_hha, out.train_labels);
  fill("test", spec.test_per_class, shift, out.test_rgb, out.test_hha, out.test_labels);
  return out;
}

std::vector<Viewpoint> generate_viewpoints(const WorkspaceSpec& ws, const std::vector<std::string>& ids,
                                           const std::vector<int>& labels, std::uint64_t seed, bool pin_corners) {
  if (ids.size() != labels.size()) throw ContractError("generate_viewpoints: ids and labels differ in length");
  const double cw = (ws.max_x - ws.min_x) / ws.cols;
  const double ch = (ws.max_y - ws.min_y) / ws.rows;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> inner(0.25, 0.75);
  std::vector<Viewpoint> out;
  out.reserve(ids.size());
  bool pinned_first = false;
  bool pinned_last = false;
  const int last = ws.rows * ws.cols - 1;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c > last) throw ContractError("generate_viewpoints: label outside the workspace grid");
    const double fx = inner(rng);
    const double fy = inner(rng);
    Viewpoint v{ids[i], ws.min_x + ((c % ws.cols) + fx) * cw, ws.min_y + ((c / ws.cols) + fy) * ch};
    if (pin_corners && c == 0 && !pinned_first) {
      v.x = ws.min_x;
      v.y = ws.min_y;
      pinned_first = true;
    } else if (pin_corners && c == last && !pinned_last) {
      v.x = ws.max_x;
      v.y = ws.max_y;
      pinned_last = true;
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError("invalid spec field '" + prefix + key + "': wrong type");
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw DataError(std::string("invalid spec field '") + key + "': expected an object");
  return doc.at(key);
}

}  // namespace

FixtureSpec fixture_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("fixture spec must be a JSON object");
  FixtureSpec s;
  s.name = get_or<std::string>(doc, "name", s.name, "");
  s.seed = get_or<std::uint64_t>(doc, "seed", s.seed, "");

  const json& ws = section(doc, "workspace");
  s.workspace.rows = get_or(ws, "rows", s.workspace.rows, "workspace.");
  s.workspace.cols = get_or(ws, "cols", s.workspace.cols, "workspace.");
  s.workspace.min_x = get_or(ws, "min_x", s.workspace.min_x, "workspace.");
  s.workspace.min_y = get_or(ws, "min_y", s.workspace.min_y, "workspace.");
  s.workspace.max_x = get_or(ws, "max_x", s.workspace.max_x, "workspace.");
  s.workspace.max_y = get_or(ws, "max_y", s.workspace.max_y, "workspace.");
  if (s.workspace.rows < 1) throw DataError("invalid spec field 'workspace.rows': must be >= 1");
  if (s.workspace.cols < 1) throw DataError("invalid spec field 'workspace.cols': must be >= 1");
  if (!(s.workspace.max_x > s.workspace.min_x))
    throw DataError("invalid spec field 'workspace.max_x': must exceed min_x");
  if (!(s.workspace.max_y > s.workspace.min_y))
    throw DataError("invalid spec field 'workspace.max_y': must exceed min_y");

  const json& em = section(doc, "embeddings");
  EmbeddingSpec& e = s.embeddings;
  e.classes = s.workspace.rows * s.workspace.cols;
  e.train_per_class = get_or(em, "train_per_class", e.train_per_class, "embeddings.");
  e.test_per_class = get_or(em, "test_per_class", e.test_per_class, "embeddings.");
  e.dim = get_or(em, "dim", e.dim, "embeddings.");
  e.separation = get_or(em, "separation", e.separation, "embeddings.");
  e.noise_sigma = get_or(em, "noise_sigma", e.noise_sigma, "embeddings.");
  e.mode = complementarity_from_string(get_or<std::string>(em, "mode", to_string(e.mode), "embeddings."));
  e.domain_shift = get_or(em, "domain_shift", e.domain_shift, "embeddings.");
  e.seed = s.seed;
  e.validate();

  const json& sc = section(doc, "scenes");
  SceneSetSpec& sp = s.scenes;
  sp.count = get_or(sc, "count", sp.count, "scenes.");
  sp.width = get_or(sc, "width", sp.width, "scenes.");
  sp.height = get_or(sc, "height", sp.height, "scenes.");
  sp.focal = get_or(sc, "focal", sp.focal, "scenes.");
  sp.camera_height = get_or(sc, "camera_height", sp.camera_height, "scenes.");
  sp.max_tilt_deg = get_or(sc, "max_tilt_deg", sp.max_tilt_deg, "scenes.");
  sp.noise_sigma = get_or(sc, "noise_sigma", sp.noise_sigma, "scenes.");
  sp.convention =
      depth_convention_from_string(get_or<std::string>(sc, "convention", to_string(sp.convention), "scenes."));
  if (sp.count < 0) throw DataError("invalid spec field 'scenes.count': must be >= 0");
  if (sp.width < 8 || sp.height < 8) throw DataError("invalid spec field 'scenes.width': images must be at least 8x8");
  if (!(sp.focal > 0)) throw DataError("invalid spec field 'scenes.focal': must be > 0");
  if (!(sp.noise_sigma >= 0)) throw DataError("invalid spec field 'scenes.noise_sigma': must be >= 0");
  if (!(sp.max_tilt_deg >= 0 && sp.max_tilt_deg < 40)) {
    throw DataError("invalid spec field 'scenes.max_tilt_deg': must lie in [0, 40)");
  }
  return s;
}

json fixture_spec_to_json(const FixtureSpec& s) {
  return json{{"name", s.name},
              {"seed", s.seed},
              {"workspace",
               {{"rows", s.workspace.rows},
                {"cols", s.workspace.cols},
                {"min_x", s.workspace.min_x},
                {"min_y", s.workspace.min_y},
                {"max_x", s.workspace.max_x},
                {"max_y", s.workspace.max_y}}},
              {"embeddings",
               {{"train_per_class", s.embeddings.train_per_class},
                {"test_per_class", s.embeddings.test_per_class},
                {"dim", s.embeddings.dim},
                {"separation", s.embeddings.separation},
                {"noise_sigma", s.embeddings.noise_sigma},
                {"mode", to_string(s.embeddings.mode)},
                {"domain_shift", s.embeddings.domain_shift}}},
              {"scenes",
               {{"count", s.scenes.count},
                {"width", s.scenes.width},
                {"height", s.scenes.height},
                {"focal", s.scenes.focal},
                {"camera_height", s.scenes.camera_height},
                {"max_tilt_deg", s.scenes.max_tilt_deg},
                {"noise_sigma", s.scenes.noise_sigma},
                {"convention", to_string(s.scenes.convention)}}}};
}

namespace {

void write_split(const FixtureSpec& spec, const fs::path& dir, Split split, const EmbeddingSet& rgb,
                 const EmbeddingSet& hha, const std::vector<int>& labels, const CameraIntrinsics<double>& intr) {
  fs::create_directories(dir / "embeddings" / "rgb");
  fs::create_directories(dir / "embeddings" / "hha");
  fs::create_directories(dir / "depth");
  const std::uint64_t split_seed = spec.seed * 2 + (split == Split::kTrain ? 0 : 1);
  const auto viewpoints = generate_viewpoints(spec.workspace, rgb.ids, labels, split_seed, split == Split::kTrain);
  write_viewpoints_csv(dir / "viewpoints.csv", viewpoints);

  DatasetManifest manifest;
  manifest.name = spec.name;
  manifest.split = split;
  manifest.embedding_dim = spec.embeddings.dim;
  if (spec.scenes.count > 0) manifest.depth_convention = spec.scenes.convention;
  manifest.provenance = {{"generator", "synth"}, {"seed", spec.seed}};
  for (std::size_t i = 0; i < rgb.ids.size(); ++i) {
    const std::string& id = rgb.ids[i];
    ManifestEntry e;
    e.sample_id = id;
    e.x = viewpoints[i].x;
    e.y = viewpoints[i].y;
    e.rgb_embedding = "embeddings/rgb/" + id + ".ten";
    e.hha_embedding = "embeddings/hha/" + id + ".ten";
    write_tensor(dir / e.rgb_embedding, tensor_from_vector(rgb.vectors.col(static_cast<Eigen::Index>(i))));
    write_tensor(dir / e.hha_embedding, tensor_from_vector(hha.vectors.col(static_cast<Eigen::Index>(i))));
    if (static_cast<int>(i) < spec.scenes.count) {
      SceneSpec scene =
          random_room_scene(split_seed * 1000 + i, intr, spec.scenes.max_tilt_deg, 4, spec.scenes.noise_sigma);
      scene.camera_height = spec.scenes.camera_height;
      DepthImage<double> depth = render_depth(scene).depth;
      if (spec.scenes.convention == DepthConvention::kRelativeInverseDepth) {
        depth.values = depth.values.unaryExpr([](double d) { return d > 0 ? 1.0 / d : 0.0; });
        depth.convention = DepthConvention::kRelativeInverseDepth;
      }
      e.depth = "depth/" + id + ".ten";
      write_depth_tensor(dir / e.depth, depth);
    }
    manifest.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.json", manifest);
}

}  // namespace

void write_fixture(const FixtureSpec& requested, const fs::path& out_dir) {
  FixtureSpec spec = requested;
  spec.embeddings.classes = spec.workspace.rows * spec.workspace.cols;
  spec.embeddings.validate();
  fs::create_directories(out_dir);
  CameraIntrinsics<double> intr;
  intr.fx = intr.fy = spec.scenes.focal;
  intr.cx = (spec.scenes.width - 1) / 2.0;
  intr.cy = (spec.scenes.height - 1) / 2.0;
  intr.width = spec.scenes.width;
  intr.height = spec.scenes.height;
  write_intrinsics(out_dir / "intrinsics.json", intr);
  {
    std::ofstream f(out_dir / "fixture_spec.json");
    f << fixture_spec_to_json(spec).dump(2) << "\n";
  }
  const SyntheticEmbeddings data = generate_embeddings(spec.embeddings);
  write_split(spec, out_dir / "train", Split::kTrain, data.train_rgb, data.train_hha, data.train_labels, intr);
  write_split(spec, out_dir / "test", Split::kTest, data.test_rgb, data.test_hha, data.test_labels, intr);
}

}  // namespace pseudorgbd
