#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pseudorgbd/geometry.hpp"
#include "pseudorgbd/places.hpp"

namespace pseudorgbd {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// TEN tensor files
//
//   offset 0   "PFT1"
//   offset 4   u8 dtype (0 = float32, the only accepted value)
//   offset 5   u8 ndim in [1, 4]
//   offset 6   ndim x u32 little-endian dims
//   then       product(dims) little-endian float32 values, row-major
// ---------------------------------------------------------------------------

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
  bool operator==(const Tensor& other) const;  // bitwise on values, so NaN payloads compare too
};

inline constexpr char kTensorMagic[4] = {'P', 'F', 'T', '1'};
inline constexpr std::size_t kMaxTensorRank = 4;

std::size_t tensor_file_size(const Tensor& tensor);
void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in);
void write_tensor(const fs::path& path, const Tensor& tensor);
Tensor read_tensor(const fs::path& path);

Tensor tensor_from_vector(const Eigen::Ref<const Eigen::VectorXf>& v);
template <typename Scalar>
Tensor tensor_from_matrix(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(static_cast<float>(m(r, c)));
  return t;
}

// ---------------------------------------------------------------------------
// Netpbm: P6 8-bit RGB (HHA images) and P5 16-bit big-endian gray (millimeter depth)
// ---------------------------------------------------------------------------

using Gray16 = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void write_ppm(std::ostream& out, const HhaImage& image);
HhaImage read_ppm(std::istream& in);
void write_ppm(const fs::path& path, const HhaImage& image);
HhaImage read_ppm(const fs::path& path);

/// Always written with maxval 65535. Readers also accept 8-bit PGMs.
void write_pgm16(std::ostream& out, const Gray16& image);
Gray16 read_pgm16(std::istream& in);
void write_pgm16(const fs::path& path, const Gray16& image);
Gray16 read_pgm16(const fs::path& path);

/// 0 mm is invalid; depths are rounded to the nearest millimeter and saturate at 65535.
Gray16 depth_to_millimeters(const DepthImage<double>& depth);
DepthImage<double> depth_from_millimeters(const Gray16& mm);

/// Dispatches on extension: ".pgm" is metric millimeters; ".ten" is a [H, W]
/// float tensor interpreted with `ten_convention`.
DepthImage<double> read_depth(const fs::path& path, DepthConvention ten_convention);
void write_depth_tensor(const fs::path& path, const DepthImage<double>& depth);

// ---------------------------------------------------------------------------
// CSV and JSON documents
// ---------------------------------------------------------------------------

/// Header `sample_id,x,y`.
std::vector<Viewpoint> read_viewpoints_csv(const fs::path& path);
void write_viewpoints_csv(const fs::path& path, const std::vector<Viewpoint>& viewpoints);

/// Header `sample_id,label`.
std::vector<LabeledSample> read_labels_csv(const fs::path& path);
void write_labels_csv(const fs::path& path, const std::vector<LabeledSample>& labels);

nlohmann::json grid_to_json(const PlaceGrid& grid);
PlaceGrid grid_from_json(const nlohmann::json& doc);
void write_grid(const fs::path& path, const PlaceGrid& grid);
PlaceGrid read_grid(const fs::path& path);

nlohmann::json intrinsics_to_json(const CameraIntrinsics<double>& intr);
CameraIntrinsics<double> intrinsics_from_json(const nlohmann::json& doc);
void write_intrinsics(const fs::path& path, const CameraIntrinsics<double>& intr);
CameraIntrinsics<double> read_intrinsics(const fs::path& path);

std::string to_string(DepthConvention convention);
DepthConvention depth_convention_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

enum class Split { kTrain, kTest };
std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string sample_id;
  double x{0};
  double y{0};
  // Paths are relative to the manifest's directory; empty when absent.
  std::string rgb;
  std::string depth;
  std::string hha;
  std::string rgb_embedding;
  std::string hha_embedding;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::string name;
  Split split{Split::kTrain};
  std::optional<DepthConvention> depth_convention;
  std::optional<int> embedding_dim;
  std::vector<ManifestEntry> entries;
  nlohmann::json provenance = nlohmann::json::object();  // free-form, preserved verbatim
  fs::path base_dir;                                     // not serialized

  fs::path resolve(const std::string& relative) const { return base_dir / relative; }
  std::vector<Viewpoint> viewpoints() const;
};

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& doc);
std::string dump_manifest(const DatasetManifest& manifest);
void write_manifest(const fs::path& path, const DatasetManifest& manifest);
/// Validates unique ids and, when `check_files`, that every referenced file exists.
DatasetManifest read_manifest(const fs::path& path, bool check_files = true);

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

enum class Modality { kRgb, kHha };
std::string to_string(Modality modality);

struct EmbeddingSet {
  Modality modality{Modality::kRgb};
  std::vector<std::string> ids;
  Eigen::MatrixXf vectors;  // dim x N, one column per record

  Eigen::Index dim() const { return vectors.rows(); }
  std::size_t size() const { return ids.size(); }
};

/// One record per manifest entry in manifest order. Every file must be a
/// rank-1 tensor of the common dimension with finite values.
EmbeddingSet load_embeddings(const DatasetManifest& manifest, Modality modality);

struct JoinedEmbeddings {
  std::vector<std::string> ids;
  Eigen::MatrixXf vectors;  // (rgb_dim + hha_dim) x N, RGB rows first
  Eigen::Index rgb_dim{0};
};

/// Concatenates RGB then HHA per sample, in the RGB set's order.
JoinedEmbeddings join_pairs(const EmbeddingSet& rgb, const EmbeddingSet& hha);

}  // namespace pseudorgbd
