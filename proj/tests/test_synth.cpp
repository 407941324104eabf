#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "pseudorgbd/data_io.hpp"
#include "pseudorgbd/places.hpp"
#include "pseudorgbd/synth.hpp"
#include "support.hpp"

namespace prd = pseudorgbd;
namespace ts = testing_support;

TEST_CASE("a single ground plane renders depth h / (g . ray)") {
  prd::SceneSpec spec;
  spec.intrinsics = ts::centered_intrinsics(32, 24, 30.0);
  spec.camera_height = 2.0;
  const auto scene = prd::render_depth(spec);
  const auto& intr = spec.intrinsics;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const double ray_y = (v - intr.cy) / intr.fy;
      const std::size_t i = static_cast<std::size_t>(v * intr.width + u);
      if (ray_y > 0) {
        CHECK(scene.depth.values(v, u) == doctest::Approx(2.0 / ray_y).epsilon(1e-12));
        CHECK(scene.plane_id[i] == 0);
        CHECK(scene.normals.col(static_cast<Eigen::Index>(i)).isApprox(Eigen::Vector3d(0, -1, 0)));
      } else {
        CHECK(scene.depth.values(v, u) == 0.0);
        CHECK(scene.plane_id[i] == -1);
      }
    }
  }
}

TEST_CASE("rendered points lie on their planes and normals face the camera") {
  const auto intr = ts::centered_intrinsics(40, 30, 35.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = prd::random_room_scene(seed, intr, 15.0, 4);
    const auto scene = prd::render_depth(spec);
    CHECK(std::count(scene.plane_id.begin(), scene.plane_id.end(), -1) == 0);
    for (int v = 0; v < intr.height; ++v) {
      for (int u = 0; u < intr.width; ++u) {
        const std::size_t i = static_cast<std::size_t>(v * intr.width + u);
        const Eigen::Vector3d ray((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
        const Eigen::Vector3d p = scene.depth.values(v, u) * ray;
        const int id = scene.plane_id[i];
        const Eigen::Vector3d n = id == 0 ? spec.gravity.normalized() : spec.walls[std::size_t(id - 1)].normal;
        const double offset = id == 0 ? spec.camera_height : spec.walls[std::size_t(id - 1)].offset;
        CHECK(std::abs(n.dot(p) - offset) <= 1e-9 * std::max(1.0, p.norm()));
        CHECK(scene.normals.col(static_cast<Eigen::Index>(i)).dot(ray) < 0);
      }
    }
  }
}

TEST_CASE("room scenes keep walls vertical and tilt bounded") {
  const auto intr = ts::centered_intrinsics(16, 12, 12.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = prd::random_room_scene(seed, intr, 10.0, 3);
    CHECK(std::abs(spec.gravity.norm() - 1.0) <= 1e-12);
    CHECK(ts::angle_deg(spec.gravity, Eigen::Vector3d::UnitY()) <= 10.0 + 1e-9);
    REQUIRE(spec.walls.size() == 3);
    for (const auto& w : spec.walls) CHECK(std::abs(w.normal.dot(spec.gravity)) <= 1e-12);
    CHECK(std::abs(spec.walls[0].normal.dot(spec.walls[1].normal)) <= 1e-12);
  }
}

TEST_CASE("rotating a scene rotates its rendering consistently") {
  const auto intr = ts::centered_intrinsics(24, 18, 20.0);
  const auto spec = prd::random_room_scene(3, intr, 5.0, 4);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const auto rotated = prd::rotate_scene(spec, r);
  CHECK(rotated.gravity.isApprox(r * spec.gravity));
  CHECK(rotated.walls[2].offset == spec.walls[2].offset);
  CHECK(prd::render_depth(rotated).depth.values.allFinite());
}

TEST_CASE("render noise is reproducible and relative to depth") {
  const auto intr = ts::centered_intrinsics(24, 18, 20.0);
  const auto clean = prd::render_depth(prd::random_room_scene(4, intr, 5.0, 4, 0.0));
  const auto noisy = prd::render_depth(prd::random_room_scene(4, intr, 5.0, 4, 0.01));
  CHECK(noisy.depth.values == prd::render_depth(prd::random_room_scene(4, intr, 5.0, 4, 0.01)).depth.values);
  const Eigen::ArrayXXd rel = (noisy.depth.values - clean.depth.values).array() / clean.depth.values.array();
  const double rms = std::sqrt(rel.square().mean());
  CHECK(rms == doctest::Approx(0.01).epsilon(0.2));
}

TEST_CASE("scene validation") {
  prd::SceneSpec spec;
  spec.intrinsics = ts::centered_intrinsics(8, 8, 8.0);
  spec.gravity = Eigen::Vector3d::Zero();
  CHECK_THROWS_AS(prd::render_depth(spec), prd::ContractError);
  spec.gravity = Eigen::Vector3d::UnitY();
  spec.camera_height = -1;
  CHECK_THROWS_AS(prd::render_depth(spec), prd::ContractError);
}

TEST_CASE("embedding ids are class-major and unique") {
  prd::EmbeddingSpec spec;
  spec.classes = 4;
  spec.train_per_class = 3;
  spec.test_per_class = 2;
  spec.dim = 5;
  const auto data = prd::generate_embeddings(spec);
  CHECK(data.train_rgb.ids.front() == "train_0000_000");
  CHECK(data.train_rgb.ids[3] == "train_0001_000");
  CHECK(data.test_hha.ids.back() == "test_0003_001");
  CHECK(data.train_rgb.ids == data.train_hha.ids);
  CHECK(data.train_labels == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  CHECK(data.train_rgb.vectors.rows() == 5);
  CHECK(data.test_rgb.vectors.cols() == 8);
  std::set<std::string> all(data.train_rgb.ids.begin(), data.train_rgb.ids.end());
  all.insert(data.test_rgb.ids.begin(), data.test_rgb.ids.end());
  CHECK(all.size() == 20);
}

TEST_CASE("class means respect the separation") {
  prd::EmbeddingSpec spec;
  spec.classes = 30;
  spec.dim = 4;
  spec.separation = 3.0;
  spec.seed = 9;
  const auto data = prd::generate_embeddings(spec);
  for (int a = 0; a < 30; ++a) {
    for (int b = a + 1; b < 30; ++b) {
      CHECK((data.rgb_means.col(a) - data.rgb_means.col(b)).norm() >= 3.0);
      CHECK((data.hha_means.col(a) - data.hha_means.col(b)).norm() >= 3.0);
    }
  }
}

TEST_CASE("split mode collapses each modality on the other half") {
  prd::EmbeddingSpec spec;
  spec.classes = 10;
  spec.mode = prd::Complementarity::kSplit;
  spec.seed = 12;
  const auto data = prd::generate_embeddings(spec);
  for (int c = 6; c < 10; ++c) CHECK(data.rgb_means.col(c) == data.rgb_means.col(5));
  for (int c = 1; c < 5; ++c) CHECK(data.hha_means.col(c) == data.hha_means.col(0));
  CHECK((data.rgb_means.col(0) - data.rgb_means.col(5)).norm() >= spec.separation);
  CHECK((data.hha_means.col(5) - data.hha_means.col(9)).norm() >= spec.separation);
}

TEST_CASE("domain shift moves only the test split") {
  prd::EmbeddingSpec spec;
  spec.classes = 3;
  spec.noise_sigma = 0;
  spec.domain_shift = 2.5;
  spec.dim = 6;
  const auto data = prd::generate_embeddings(spec);
  CHECK((data.train_rgb.vectors.col(0).cast<double>() - data.rgb_means.col(0)).norm() <= 1e-5);
  const double moved = (data.test_rgb.vectors.col(0).cast<double>() - data.rgb_means.col(0)).norm();
  CHECK(moved == doctest::Approx(2.5).epsilon(1e-5));
}

TEST_CASE("embedding generation is deterministic and validated") {
  prd::EmbeddingSpec spec;
  spec.classes = 5;
  spec.seed = 77;
  CHECK(prd::generate_embeddings(spec).train_hha.vectors == prd::generate_embeddings(spec).train_hha.vectors);
  spec.classes = 1;
  CHECK_THROWS_WITH_AS(prd::generate_embeddings(spec), doctest::Contains("'classes'"), prd::DataError);
  CHECK_THROWS_AS(prd::complementarity_from_string("half"), prd::DataError);
}

TEST_CASE("viewpoints land in their class cell") {
  prd::WorkspaceSpec ws;
  ws.rows = 3;
  ws.cols = 4;
  ws.min_x = -10;
  ws.max_x = 30;
  ws.min_y = 5;
  ws.max_y = 11;
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (int c = 0; c < 12; ++c) {
    for (int k = 0; k < 5; ++k) {
      ids.push_back(std::to_string(c) + "_" + std::to_string(k));
      labels.push_back(c);
    }
  }
  const auto points = prd::generate_viewpoints(ws, ids, labels, 3, true);
  const auto grid = prd::build_grid(points, 3, 4);
  CHECK(grid.min_x == ws.min_x);
  CHECK(grid.max_y == ws.max_y);
  for (std::size_t i = 0; i < points.size(); ++i) CHECK(prd::classify_viewpoint(grid, points[i]) == labels[i]);
  CHECK_THROWS_AS(prd::generate_viewpoints(ws, {"a"}, {12}, 0, false), prd::ContractError);
}

TEST_CASE("fixture spec JSON round-trips and names bad fields") {
  prd::FixtureSpec spec;
  spec.name = "tiny";
  spec.seed = 4;
  spec.workspace.rows = 2;
  spec.embeddings.mode = prd::Complementarity::kSplit;
  spec.scenes.convention = prd::DepthConvention::kRelativeInverseDepth;
  const auto back = prd::fixture_spec_from_json(prd::fixture_spec_to_json(spec));
  CHECK(prd::fixture_spec_to_json(back) == prd::fixture_spec_to_json(spec));
  CHECK(back.embeddings.classes == 20);

  auto doc = prd::fixture_spec_to_json(spec);
  doc["workspace"]["rows"] = 0;
  CHECK_THROWS_WITH_AS(prd::fixture_spec_from_json(doc), doctest::Contains("'workspace.rows'"), prd::DataError);
  doc = prd::fixture_spec_to_json(spec);
  doc["scenes"]["focal"] = "wide";
  CHECK_THROWS_WITH_AS(prd::fixture_spec_from_json(doc), doctest::Contains("'scenes.focal'"), prd::DataError);
  CHECK_THROWS_AS(prd::fixture_spec_from_json(nlohmann::json::array()), prd::DataError);
}

TEST_CASE("write_fixture produces loadable splits") {
  ts::TempDir dir("fixture");
  prd::FixtureSpec spec;
  spec.seed = 8;
  spec.workspace.rows = 2;
  spec.workspace.cols = 3;
  spec.embeddings.train_per_class = 2;
  spec.embeddings.test_per_class = 1;
  spec.embeddings.dim = 4;
  spec.scenes.count = 1;
  spec.scenes.width = 16;
  spec.scenes.height = 12;
  prd::write_fixture(spec, dir.path());
  const auto train = prd::read_manifest(dir / "train/manifest.json");
  CHECK(train.entries.size() == 12);
  CHECK_FALSE(train.entries[0].depth.empty());
  CHECK(train.entries[1].depth.empty());
  const auto rgb = prd::load_embeddings(train, prd::Modality::kRgb);
  CHECK(rgb.vectors.rows() == 4);
  const auto depth = prd::read_depth(dir / "train" / train.entries[0].depth, prd::DepthConvention::kMetricDepth);
  CHECK(depth.values.rows() == 12);
  CHECK((depth.values.array() > 0).all());
  const auto test_points = prd::read_viewpoints_csv(dir / "test/viewpoints.csv");
  CHECK(test_points.size() == 6);
  CHECK(std::filesystem::exists(dir / "intrinsics.json"));
}
