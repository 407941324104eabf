#pragma once

// Independent oracles and small fixtures shared by the test binaries.

#include <unistd.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>

#include "pseudorgbd/geometry.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// Fresh directory under the system temp area, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("pseudorgbd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline pseudorgbd::CameraIntrinsics<double> centered_intrinsics(int width, int height, double focal) {
  pseudorgbd::CameraIntrinsics<double> intr;
  intr.fx = intr.fy = focal;
  intr.cx = (width - 1) / 2.0;
  intr.cy = (height - 1) / 2.0;
  intr.width = width;
  intr.height = height;
  return intr;
}

/// Gravity objective written with angles, term by term.
inline double gravity_objective_angles(const pseudorgbd::Points3<double>& parallel,
                                       const pseudorgbd::Points3<double>& perpendicular, const Eigen::Vector3d& g) {
  double total = 0;
  for (Eigen::Index i = 0; i < perpendicular.cols(); ++i) {
    const double a = std::acos(std::clamp(perpendicular.col(i).dot(g) / g.norm(), -1.0, 1.0));
    total += std::cos(a) * std::cos(a);
  }
  for (Eigen::Index i = 0; i < parallel.cols(); ++i) {
    const double a = std::acos(std::clamp(parallel.col(i).dot(g) / g.norm(), -1.0, 1.0));
    total += std::sin(a) * std::sin(a);
  }
  return total;
}

/// Brute-force sphere search: `samples` uniform unit vectors, followed by the
/// same number in a small cap around the best uniform sample. Evaluates the
/// objective through its per-normal expansion cos^2 = (n.g)^2, sin^2 = 1 - (n.g)^2
/// accumulated into a quadratic form, which is exact for unit normals.
struct SphereSearch {
  Eigen::Vector3d best;
  double best_value;
};

inline SphereSearch brute_force_gravity(const pseudorgbd::Points3<double>& parallel,
                                        const pseudorgbd::Points3<double>& perpendicular, int samples,
                                        std::uint64_t seed) {
  Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
  for (Eigen::Index i = 0; i < perpendicular.cols(); ++i) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) q(r, c) += perpendicular(r, i) * perpendicular(c, i);
  }
  for (Eigen::Index i = 0; i < parallel.cols(); ++i) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) q(r, c) -= parallel(r, i) * parallel(c, i);
  }
  const double constant = static_cast<double>(parallel.cols());
  auto value = [&](const Eigen::Vector3d& g) { return g.dot(q * g) + constant; };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SphereSearch out{Eigen::Vector3d::UnitY(), value(Eigen::Vector3d::UnitY())};
  for (int s = 0; s < samples; ++s) {
    Eigen::Vector3d g(normal(rng), normal(rng), normal(rng));
    g.normalize();
    const double v = value(g);
    if (v < out.best_value) out = {g, v};
  }
  const Eigen::Vector3d center = out.best;
  for (int s = 0; s < samples; ++s) {
    Eigen::Vector3d g = center + 0.01 * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    g.normalize();
    const double v = value(g);
    if (v < out.best_value) out = {g, v};
  }
  return out;
}

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return Eigen::Vector3d(normal(rng), normal(rng), normal(rng)).normalized();
}

inline double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
}

/// Angle to the axis, ignoring sign.
inline double axis_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& axis) {
  const double d = angle_deg(a, axis);
  return std::min(d, 180.0 - d);
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_{std::chrono::steady_clock::now()};
};

}  // namespace testing_support
