#pragma once

// Analytic piecewise-planar depth scenes and clustered embedding datasets with
// known ground truth. These are the desk-scale oracles for the geometry and
// fusion code, and `write_fixture` lays them out as a runnable dataset.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "pseudorgbd/data_io.hpp"
#include "pseudorgbd/geometry.hpp"

namespace pseudorgbd {

/// Points p with normal . p = offset, camera frame.
struct Plane {
  Eigen::Vector3d normal;
  double offset{0};
};

struct SceneSpec {
  CameraIntrinsics<double> intrinsics;
  bool has_ground{true};
  double camera_height{1.5};                          // ground is g . p = camera_height
  Eigen::Vector3d gravity{Eigen::Vector3d::UnitY()};  // camera frame, points down
  std::vector<Plane> walls;
  double noise_sigma{0};  // per-pixel Gaussian depth noise as a fraction of depth
  std::uint64_t seed{0};

  void validate() const;
};

struct RenderedScene {
  DepthImage<double> depth;
  Points3<double> normals;    // analytic camera-facing normal per pixel, zero where invalid
  std::vector<int> plane_id;  // -1 invalid, 0 ground (when present), walls follow
  Eigen::Vector3d gravity;
  double camera_height{0};
};

/// Nearest positive ray-plane intersection per pixel; rays missing every plane are invalid (0).
RenderedScene render_depth(const SceneSpec& spec);

/// Ground plus `walls` vertical walls (normals perpendicular to gravity) at
/// right angles, with gravity tilted up to `max_tilt_deg` away from +y. The
/// camera faces a corner, so with two or more walls both sides of it are in
/// view. Four walls close the room and every pixel is valid.
SceneSpec random_room_scene(std::uint64_t seed, const CameraIntrinsics<double>& intrinsics, double max_tilt_deg,
                            int walls, double noise_sigma = 0.0);

/// Applies a rotation to every plane and the gravity direction.
SceneSpec rotate_scene(const SceneSpec& spec, const Eigen::Matrix3d& rotation);

enum class Complementarity {
  kBoth,   // both modalities separate every class
  kSplit,  // modality A (RGB) separates the first half of the classes, B (HHA) the second
};

std::string to_string(Complementarity mode);
Complementarity complementarity_from_string(const std::string& s);

struct EmbeddingSpec {
  int classes{100};
  int train_per_class{10};
  int test_per_class{5};
  int dim{32};
  double separation{10.0};  // minimum pairwise distance between class means
  double noise_sigma{1.0};
  Complementarity mode{Complementarity::kBoth};
  double domain_shift{0.0};  // norm of a fixed offset added to every test vector
  std::uint64_t seed{0};

  void validate() const;
};

struct SyntheticEmbeddings {
  EmbeddingSet train_rgb;
  EmbeddingSet train_hha;
  EmbeddingSet test_rgb;
  EmbeddingSet test_hha;
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  Eigen::MatrixXd rgb_means;  // dim x classes, after collapsing uninformative classes
  Eigen::MatrixXd hha_means;
};

/// Samples are class-major: ids "<split>_<class>_<index>".
SyntheticEmbeddings generate_embeddings(const EmbeddingSpec& spec);

/// Rectangle split into rows x cols cells; class c sits in row c / cols, column c % cols.
struct WorkspaceSpec {
  int rows{10};
  int cols{10};
  double min_x{0};
  double min_y{0};
  double max_x{100};
  double max_y{100};
};

/// One viewpoint per label, inside the middle half of its cell. When
/// `pin_corners`, the first sample of class 0 and of the last class are moved
/// to the workspace corners so a grid built from them reproduces the workspace.
std::vector<Viewpoint> generate_viewpoints(const WorkspaceSpec& workspace, const std::vector<std::string>& ids,
                                           const std::vector<int>& labels, std::uint64_t seed, bool pin_corners);

struct SceneSetSpec {
  int count{2};  // depth images per split
  int width{64};
  int height{48};
  double focal{60.0};
  double camera_height{1.5};
  double max_tilt_deg{10.0};
  double noise_sigma{0.0};
  DepthConvention convention{DepthConvention::kMetricDepth};
};

struct FixtureSpec {
  std::string name{"synthetic"};
  std::uint64_t seed{0};
  WorkspaceSpec workspace;
  EmbeddingSpec embeddings;  // classes derived from the workspace grid
  SceneSetSpec scenes;
};

/// Parses and validates; DataError messages name the offending field.
FixtureSpec fixture_spec_from_json(const nlohmann::json& doc);
nlohmann::json fixture_spec_to_json(const FixtureSpec& spec);

/// Writes intrinsics.json, fixture_spec.json and, per split, viewpoints.csv,
/// manifest.json, embeddings/{rgb,hha}/<id>.ten and depth/<id>.ten. The class
/// count always comes from the workspace grid.
void write_fixture(const FixtureSpec& spec, const fs::path& out_dir);

}  // namespace pseudorgbd
