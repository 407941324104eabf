#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "pseudorgbd/data_io.hpp"

namespace pseudorgbd {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, expected a header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw DataError(path.string() + ": header must be '" + expected + "'");
  }
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

template <typename T>
T parse_number(const std::string& text, const fs::path& path, const std::string& sample_id) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(path.string() + ": cannot parse '" + text + "' for sample '" + sample_id + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

template <typename T>
T field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

std::vector<Viewpoint> read_viewpoints_csv(const fs::path& path) {
  std::vector<Viewpoint> out;
  for (const auto& row : read_csv(path, {"sample_id", "x", "y"})) {
    out.push_back({row[0], parse_number<double>(row[1], path, row[0]), parse_number<double>(row[2], path, row[0])});
  }
  return out;
}

void write_viewpoints_csv(const fs::path& path, const std::vector<Viewpoint>& viewpoints) {
  std::string text = "sample_id,x,y\n";
  for (const auto& v : viewpoints) text += v.sample_id + "," + format_double(v.x) + "," + format_double(v.y) + "\n";
  write_text(path, text);
}

std::vector<LabeledSample> read_labels_csv(const fs::path& path) {
  std::vector<LabeledSample> out;
  for (const auto& row : read_csv(path, {"sample_id", "label"})) {
    out.push_back({row[0], parse_number<int>(row[1], path, row[0])});
  }
  return out;
}

void write_labels_csv(const fs::path& path, const std::vector<LabeledSample>& labels) {
  std::string text = "sample_id,label\n";
  for (const auto& l : labels) text += l.sample_id + "," + std::to_string(l.label) + "\n";
  write_text(path, text);
}

json grid_to_json(const PlaceGrid& grid) {
  return json{{"min_x", grid.min_x}, {"min_y", grid.min_y}, {"max_x", grid.max_x},
              {"max_y", grid.max_y}, {"rows", grid.rows},   {"cols", grid.cols}};
}

PlaceGrid grid_from_json(const json& doc) {
  PlaceGrid g;
  g.min_x = field<double>(doc, "min_x");
  g.min_y = field<double>(doc, "min_y");
  g.max_x = field<double>(doc, "max_x");
  g.max_y = field<double>(doc, "max_y");
  g.rows = field<int>(doc, "rows");
  g.cols = field<int>(doc, "cols");
  g.validate();
  return g;
}

void write_grid(const fs::path& path, const PlaceGrid& grid) { write_text(path, grid_to_json(grid).dump(2) + "\n"); }

PlaceGrid read_grid(const fs::path& path) {
  try {
    return grid_from_json(read_json(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json intrinsics_to_json(const CameraIntrinsics<double>& intr) {
  return json{{"fx", intr.fx}, {"fy", intr.fy},       {"cx", intr.cx},
              {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

CameraIntrinsics<double> intrinsics_from_json(const json& doc) {
  CameraIntrinsics<double> intr;
  intr.fx = field<double>(doc, "fx");
  intr.fy = field<double>(doc, "fy");
  intr.cx = field<double>(doc, "cx");
  intr.cy = field<double>(doc, "cy");
  intr.width = field<int>(doc, "width");
  intr.height = field<int>(doc, "height");
  intr.validate();
  return intr;
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics<double>& intr) {
  write_text(path, intrinsics_to_json(intr).dump(2) + "\n");
}

CameraIntrinsics<double> read_intrinsics(const fs::path& path) {
  try {
    return intrinsics_from_json(read_json(path));
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_string(DepthConvention convention) {
  return convention == DepthConvention::kMetricDepth ? "metric" : "relative_inverse";
}

DepthConvention depth_convention_from_string(const std::string& s) {
  if (s == "metric") return DepthConvention::kMetricDepth;
  if (s == "relative_inverse") return DepthConvention::kRelativeInverseDepth;
  throw DataError("unknown depth convention '" + s + "' (expected metric or relative_inverse)");
}

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "' (expected train or test)");
}

std::string to_string(Modality modality) { return modality == Modality::kRgb ? "rgb" : "hha"; }

std::vector<Viewpoint> DatasetManifest::viewpoints() const {
  std::vector<Viewpoint> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back({e.sample_id, e.x, e.y});
  return out;
}

namespace {

constexpr const char* kArtifactKeys[] = {"rgb", "depth", "hha", "rgb_embedding", "hha_embedding"};

std::string* artifact(ManifestEntry& e, std::string_view key) {
  if (key == "rgb") return &e.rgb;
  if (key == "depth") return &e.depth;
  if (key == "hha") return &e.hha;
  if (key == "rgb_embedding") return &e.rgb_embedding;
  return &e.hha_embedding;
}

}  // namespace

json manifest_to_json(const DatasetManifest& manifest) {
  json doc = json::object();
  doc["name"] = manifest.name;
  doc["split"] = to_string(manifest.split);
  if (manifest.depth_convention) doc["depth_convention"] = to_string(*manifest.depth_convention);
  if (manifest.embedding_dim) doc["embedding_dim"] = *manifest.embedding_dim;
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j = {{"sample_id", e.sample_id}, {"x", e.x}, {"y", e.y}};
    ManifestEntry copy = e;
    for (const char* key : kArtifactKeys) {
      if (const std::string* p = artifact(copy, key); !p->empty()) j[key] = *p;
    }
    entries.push_back(std::move(j));
  }
  doc["entries"] = std::move(entries);
  if (!manifest.provenance.empty()) doc["provenance"] = manifest.provenance;
  return doc;
}

DatasetManifest manifest_from_json(const json& doc) {
  DatasetManifest m;
  m.name = field<std::string>(doc, "name");
  m.split = split_from_string(field<std::string>(doc, "split"));
  if (doc.contains("depth_convention")) {
    m.depth_convention = depth_convention_from_string(field<std::string>(doc, "depth_convention"));
  }
  if (doc.contains("embedding_dim")) m.embedding_dim = field<int>(doc, "embedding_dim");
  if (doc.contains("provenance")) m.provenance = doc.at("provenance");
  const json& entries = doc.contains("entries") ? doc.at("entries") : throw DataError("missing field 'entries'");
  if (!entries.is_array()) throw DataError("field 'entries' must be an array");
  std::unordered_set<std::string> ids;
  for (const auto& j : entries) {
    ManifestEntry e;
    e.sample_id = field<std::string>(j, "sample_id");
    if (e.sample_id.empty()) throw DataError("manifest entry with empty sample_id");
    if (!ids.insert(e.sample_id).second) throw DataError("duplicate sample_id '" + e.sample_id + "' in manifest");
    e.x = field<double>(j, "x");
    e.y = field<double>(j, "y");
    for (const char* key : kArtifactKeys) {
      if (j.contains(key)) *artifact(e, key) = field<std::string>(j, key);
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string dump_manifest(const DatasetManifest& manifest) { return manifest_to_json(manifest).dump(2) + "\n"; }

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_text(path, dump_manifest(manifest));
}

DatasetManifest read_manifest(const fs::path& path, bool check_files) {
  DatasetManifest m;
  try {
    m = manifest_from_json(read_json(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  m.base_dir = path.parent_path();
  if (check_files) {
    for (auto& e : m.entries) {
      for (const char* key : kArtifactKeys) {
        const std::string& rel = *artifact(e, key);
        if (!rel.empty() && !fs::exists(m.resolve(rel))) {
          throw DataError(path.string() + ": sample '" + e.sample_id + "' references missing " + key + " file '" + rel +
                          "'");
        }
      }
    }
  }
  return m;
}

}  // namespace pseudorgbd
