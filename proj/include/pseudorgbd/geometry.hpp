#pragma once

// Depth back-projection, windowed surface normals, iterative gravity estimation and
// HHA (disparity, height, angle) encoding. Everything here is templated on the
// scalar type and is a pure function of its inputs.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pseudorgbd/error.hpp"

namespace pseudorgbd {

enum class DepthConvention {
  kMetricDepth,           // meters (or consistent scene units), larger is farther
  kRelativeInverseDepth,  // unitless, larger is nearer
};

enum class NormalMethod {
  kInverseDepthFit,  // least-squares plane in inverse depth over the window
  kPca,              // smallest principal axis of the window's 3-D points
};

template <typename Scalar>
using ImageMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx{1};
  Scalar fy{1};
  Scalar cx{0};
  Scalar cy{0};
  int width{1};
  int height{1};

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ContractError("intrinsics: focal lengths must be positive");
    if (width < 1 || height < 1) throw ContractError("intrinsics: image size must be positive");
    if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height)) {
      throw ContractError("intrinsics: principal point outside the image");
    }
  }

  template <typename Other>
  CameraIntrinsics<Other> cast() const {
    return {
        static_cast<Other>(fx), static_cast<Other>(fy), static_cast<Other>(cx), static_cast<Other>(cy), width, height};
  }
};

template <typename Scalar>
inline bool is_valid_depth(Scalar value) {
  return std::isfinite(value) && value > Scalar(0);
}

/// Row-major H x W depth field. A pixel is valid iff its value is finite and positive.
template <typename Scalar>
struct DepthImage {
  ImageMatrix<Scalar> values;
  DepthConvention convention{DepthConvention::kMetricDepth};

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }
  bool valid(Eigen::Index v, Eigen::Index u) const { return is_valid_depth(values(v, u)); }

  Eigen::Index valid_count() const {
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) n += is_valid_depth(values.data()[i]) ? 1 : 0;
    return n;
  }
};

/// Per-pixel 3-D points in camera frame, indexed v * width + u.
template <typename Scalar>
struct OrganizedPoints {
  Points3<Scalar> points;
  std::vector<std::uint8_t> valid;
  Eigen::Index width{0};
  Eigen::Index height{0};
};

struct NormalDiagnostics {
  std::size_t sparse{0};      // fewer than 3 valid pixels in the window
  std::size_t degenerate{0};  // covariance rank < 2
};

template <typename Scalar>
struct NormalMap {
  Points3<Scalar> normals;  // one column per pixel; zero where invalid
  std::vector<std::uint8_t> valid;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> roughness;  // plane-fit residual score per pixel
  NormalDiagnostics diagnostics;
};

template <typename Scalar>
struct OrientedPointCloud {
  Points3<Scalar> points;
  Points3<Scalar> normals;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> roughness;
  std::vector<Eigen::Index> pixel_index;
  NormalDiagnostics diagnostics;

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
};

template <typename Scalar>
struct GravityEstimate {
  Eigen::Matrix<Scalar, 3, 1> g{Scalar(0), Scalar(1), Scalar(0)};
  int iterations_run{0};
  Scalar final_angle_change{0};
  bool degenerate_split{false};  // some iteration saw both normal sets empty
  Eigen::Index normals_used{0};
};

struct GravityConfig {
  double coarse_threshold{std::numbers::pi / 4};
  double fine_threshold{std::numbers::pi / 12};
  int coarse_iterations{5};
  int max_iterations{10};
  double tolerance{1e-3};  // radians
  // Normals rougher than this multiple of the median roughness (creases,
  // depth edges) are left out of the estimate. Non-positive keeps every normal.
  double roughness_ratio{3.0};

  void validate() const {
    auto ok = [](double d) { return d > 0 && d < std::numbers::pi / 2; };
    if (!ok(coarse_threshold) || !ok(fine_threshold)) {
      throw ContractError("gravity: thresholds must lie in (0, pi/2)");
    }
    if (max_iterations < 1) throw ContractError("gravity: max_iterations must be >= 1");
    if (coarse_iterations < 0) throw ContractError("gravity: coarse_iterations must be >= 0");
    if (!(tolerance >= 0)) throw ContractError("gravity: tolerance must be >= 0");
    if (std::isnan(roughness_ratio)) throw ContractError("gravity: roughness_ratio must not be NaN");
  }
};

struct HhaConfig {
  double height_range{10.0};  // h_max, scene units
  double disparity_low_percentile{1.0};
  double disparity_high_percentile{99.0};
  double floor_percentile{1.0};
  int normal_window{5};
  NormalMethod normal_method{NormalMethod::kInverseDepthFit};
  double median_depth{5.0};    // anchor used when normalizing relative inverse depth
  bool single_channel{false};  // replicate disparity into all three channels

  void validate() const {
    if (!(height_range > 0)) throw ContractError("hha: height_range must be positive");
    if (!(disparity_low_percentile >= 0 && disparity_low_percentile < disparity_high_percentile &&
          disparity_high_percentile <= 100)) {
      throw ContractError("hha: disparity percentiles must satisfy 0 <= low < high <= 100");
    }
    if (!(floor_percentile >= 0 && floor_percentile <= 100)) {
      throw ContractError("hha: floor_percentile must lie in [0, 100]");
    }
    if (normal_window < 3 || normal_window % 2 == 0) {
      throw ContractError("hha: normal_window must be odd and >= 3");
    }
    if (!(median_depth > 0)) throw ContractError("hha: median_depth must be positive");
  }
};

/// 3-channel 8-bit image; channel 0 disparity, 1 height above ground, 2 angle with gravity.
struct HhaImage {
  using Channel = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::array<Channel, 3> channels;
  double floor_offset{0};      // gravity-axis height of the recovered floor, -(g . p)
  bool constant_depth{false};  // disparity percentile window collapsed

  Eigen::Index width() const { return channels[0].cols(); }
  Eigen::Index height() const { return channels[0].rows(); }
};

namespace detail {

inline std::uint8_t quantize_unit(double x) {
  const double scaled = std::floor(std::clamp(x, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> unit_y() {
  return Eigen::Matrix<Scalar, 3, 1>(Scalar(0), Scalar(1), Scalar(0));
}

}  // namespace detail

/// Angle in [0, pi] between two (not necessarily unit) vectors. Uses atan2 so it
/// stays accurate near 0 and pi.
template <typename DerivedA, typename DerivedB>
auto angle_between(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar c = a.dot(b);
  const Scalar s = a.cross(b).norm();
  return std::atan2(s, c);
}

/// Linearly interpolated percentile (p in [0, 100]) of an unsorted sample.
template <typename Scalar>
Scalar percentile(std::vector<Scalar> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const Scalar frac = static_cast<Scalar>(pos - static_cast<double>(lo));
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Median with the two-middle average for even counts.
template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  if (values.empty()) throw DataError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const Scalar upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const Scalar lower = *std::max_element(values.begin(), values.begin() + mid);
  return (lower + upper) / Scalar(2);
}

/// Pixel (u, v) with depth d maps to ((u - cx) d / fx, (v - cy) d / fy, d).
template <typename Scalar>
OrganizedPoints<Scalar> backproject_points(const DepthImage<Scalar>& depth, const CameraIntrinsics<Scalar>& intr) {
  intr.validate();
  if (depth.width() != intr.width || depth.height() != intr.height) {
    throw ContractError("backproject: depth is " + std::to_string(depth.width()) + "x" +
                        std::to_string(depth.height()) + " but intrinsics declare " + std::to_string(intr.width) + "x" +
                        std::to_string(intr.height));
  }
  if (depth.convention != DepthConvention::kMetricDepth) {
    throw ContractError("backproject: relative inverse depth must be normalized first");
  }
  OrganizedPoints<Scalar> out;
  out.width = depth.width();
  out.height = depth.height();
  out.points = Points3<Scalar>::Zero(3, depth.values.size());
  out.valid.assign(static_cast<std::size_t>(depth.values.size()), 0);
  for (Eigen::Index v = 0; v < out.height; ++v) {
    for (Eigen::Index u = 0; u < out.width; ++u) {
      const Scalar d = depth.values(v, u);
      if (!is_valid_depth(d)) continue;
      const Eigen::Index i = v * out.width + u;
      out.points.col(i) << (Scalar(u) - intr.cx) * d / intr.fx, (Scalar(v) - intr.cy) * d / intr.fy, d;
      out.valid[static_cast<std::size_t>(i)] = 1;
    }
  }
  return out;
}

namespace detail {

enum class WindowFit { kOk, kDegenerate };

// Smallest-eigenvalue eigenvector of the neighbourhood covariance. Roughness is
// the surface variation l0 / (l0 + l1 + l2).
template <typename Scalar>
WindowFit pca_normal(const Points3<Scalar>& points, const std::vector<Eigen::Index>& neighbors,
                     Eigen::Matrix<Scalar, 3, 1>& normal, Scalar& roughness) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  Vec3 mean = Vec3::Zero();
  for (auto j : neighbors) mean += points.col(j);
  mean /= static_cast<Scalar>(neighbors.size());
  Mat3 cov = Mat3::Zero();
  for (auto j : neighbors) {
    const Vec3 q = points.col(j) - mean;
    cov.noalias() += q * q.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3& lambda = solver.eigenvalues();
  if (!(lambda(2) > 0) || lambda(1) <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() * lambda(2)) {
    return WindowFit::kDegenerate;
  }
  normal = solver.eigenvectors().col(0).normalized();
  roughness = lambda(0) / lambda.sum();
  return WindowFit::kOk;
}

// A plane n . p = o seen through a pinhole satisfies 1/z = (n / o) . (x/z, y/z, 1),
// so a least-squares fit of inverse depth over normalized image coordinates
// gives the normal directly. Depth noise only enters the fitted variable.
// Roughness is the RMS fit residual relative to the mean inverse depth.
template <typename Scalar>
WindowFit inverse_depth_normal(const Points3<Scalar>& points, const std::vector<Eigen::Index>& neighbors,
                               Eigen::Matrix<Scalar, 3, 1>& normal, Scalar& roughness) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const auto n = static_cast<Scalar>(neighbors.size());
  // Center the image coordinates so the normal equations stay well conditioned.
  Vec3 mean = Vec3::Zero();
  for (auto j : neighbors) {
    const Scalar z = points(2, j);
    mean += Vec3(points(0, j) / z, points(1, j) / z, Scalar(1) / z);
  }
  mean /= n;
  Mat3 ata = Mat3::Zero();
  Vec3 atb = Vec3::Zero();
  for (auto j : neighbors) {
    const Scalar z = points(2, j);
    const Vec3 q(points(0, j) / z - mean(0), points(1, j) / z - mean(1), Scalar(1));
    const Scalar w = Scalar(1) / z - mean(2);
    ata.noalias() += q * q.transpose();
    atb += q * w;
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> spectrum(ata, Eigen::EigenvaluesOnly);
  const Vec3& lambda = spectrum.eigenvalues();
  if (!(lambda(2) > 0) || lambda(0) <= Scalar(64) * std::numeric_limits<Scalar>::epsilon() * lambda(2)) {
    return WindowFit::kDegenerate;
  }
  const Vec3 coef = ata.ldlt().solve(atb);
  Scalar sq = 0;
  for (auto j : neighbors) {
    const Scalar z = points(2, j);
    const Scalar r = (Scalar(1) / z - mean(2)) - coef(0) * (points(0, j) / z - mean(0)) -
                     coef(1) * (points(1, j) / z - mean(1)) - coef(2);
    sq += r * r;
  }
  // Undo the centering: 1/z = a x + b y + (c + mean_w - a mean_x - b mean_y).
  const Vec3 plane(coef(0), coef(1), coef(2) + mean(2) - coef(0) * mean(0) - coef(1) * mean(1));
  if (!(plane.norm() > 0) || !plane.allFinite()) return WindowFit::kDegenerate;
  normal = plane.normalized();
  roughness = std::sqrt(sq / n) / mean(2);
  return WindowFit::kOk;
}

}  // namespace detail

/// Per-pixel normals over a square window, flipped to face the camera
/// (n . -p >= 0), with a per-pixel roughness score (0 on an exact plane).
template <typename Scalar>
NormalMap<Scalar> estimate_normals(const OrganizedPoints<Scalar>& grid, int window,
                                   NormalMethod method = NormalMethod::kInverseDepthFit) {
  if (window < 3 || window % 2 == 0) throw ContractError("estimate_normals: window must be odd and >= 3");
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  const Eigen::Index half = window / 2;

  NormalMap<Scalar> out;
  out.normals = Points3<Scalar>::Zero(3, grid.points.cols());
  out.valid.assign(grid.valid.size(), 0);
  out.roughness = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(grid.points.cols());
  std::vector<Eigen::Index> neighbors;
  neighbors.reserve(static_cast<std::size_t>(window * window));

  for (Eigen::Index v = 0; v < grid.height; ++v) {
    for (Eigen::Index u = 0; u < grid.width; ++u) {
      const Eigen::Index center = v * grid.width + u;
      if (!grid.valid[static_cast<std::size_t>(center)]) continue;
      neighbors.clear();
      for (Eigen::Index nv = std::max<Eigen::Index>(0, v - half); nv <= std::min(grid.height - 1, v + half); ++nv) {
        for (Eigen::Index nu = std::max<Eigen::Index>(0, u - half); nu <= std::min(grid.width - 1, u + half); ++nu) {
          const Eigen::Index j = nv * grid.width + nu;
          if (grid.valid[static_cast<std::size_t>(j)]) neighbors.push_back(j);
        }
      }
      if (neighbors.size() < 3) {
        ++out.diagnostics.sparse;
        continue;
      }
      Vec3 n;
      Scalar roughness{0};
      const detail::WindowFit fit = method == NormalMethod::kPca
                                        ? detail::pca_normal(grid.points, neighbors, n, roughness)
                                        : detail::inverse_depth_normal(grid.points, neighbors, n, roughness);
      if (fit == detail::WindowFit::kDegenerate) {
        ++out.diagnostics.degenerate;
        continue;
      }
      if (n.dot(grid.points.col(center)) > 0) n = -n;
      out.normals.col(center) = n;
      out.roughness(center) = roughness;
      out.valid[static_cast<std::size_t>(center)] = 1;
    }
  }
  return out;
}

/// Back-projects every valid pixel and keeps those that received a normal.
template <typename Scalar>
OrientedPointCloud<Scalar> backproject(const DepthImage<Scalar>& depth, const CameraIntrinsics<Scalar>& intr,
                                       int window = 5, NormalMethod method = NormalMethod::kInverseDepthFit) {
  const OrganizedPoints<Scalar> grid = backproject_points(depth, intr);
  const NormalMap<Scalar> normals = estimate_normals(grid, window, method);

  OrientedPointCloud<Scalar> cloud;
  cloud.diagnostics = normals.diagnostics;
  const auto count = static_cast<Eigen::Index>(std::count(normals.valid.begin(), normals.valid.end(), 1));
  if (count == 0) throw DataError("backproject: no valid pixels with a usable neighbourhood (empty cloud)");
  cloud.points.resize(3, count);
  cloud.normals.resize(3, count);
  cloud.roughness.resize(count);
  cloud.pixel_index.reserve(static_cast<std::size_t>(count));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < grid.points.cols(); ++i) {
    if (!normals.valid[static_cast<std::size_t>(i)]) continue;
    cloud.points.col(k) = grid.points.col(i);
    cloud.normals.col(k) = normals.normals.col(i);
    cloud.roughness(k) = normals.roughness(i);
    cloud.pixel_index.push_back(i);
    ++k;
  }
  return cloud;
}

template <typename Scalar>
struct GravitySplit {
  Points3<Scalar> parallel;
  Points3<Scalar> perpendicular;
};

/// Parallel: angle < d or > pi - d. Perpendicular: |angle - pi/2| < d. The rest is discarded.
template <typename Scalar>
GravitySplit<Scalar> split_by_gravity(const Eigen::Ref<const Points3<Scalar>>& normals,
                                      const Eigen::Matrix<Scalar, 3, 1>& g_prev, Scalar d) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  std::vector<Eigen::Index> par;
  std::vector<Eigen::Index> perp;
  for (Eigen::Index i = 0; i < normals.cols(); ++i) {
    const Scalar angle = angle_between(normals.col(i), g_prev);
    if (angle < d || angle > pi - d) {
      par.push_back(i);
    } else if (angle > pi / 2 - d && angle < pi / 2 + d) {
      perp.push_back(i);
    }
  }
  GravitySplit<Scalar> out;
  out.parallel = normals(Eigen::all, par);
  out.perpendicular = normals(Eigen::all, perp);
  return out;
}

template <typename Scalar>
struct GravityUpdate {
  Eigen::Matrix<Scalar, 3, 1> g;
  bool degenerate{false};  // both sets empty, g_prev returned unchanged
};

/// Minimizes sum_perp cos^2(n, g) + sum_par sin^2(n, g) over unit g. For unit
/// normals this equals g^T (sum_perp n n^T - sum_par n n^T) g + |par|, so the
/// minimizer is the eigenvector of the smallest eigenvalue of that matrix.
template <typename Scalar>
GravityUpdate<Scalar> update_gravity(const Eigen::Ref<const Points3<Scalar>>& parallel,
                                     const Eigen::Ref<const Points3<Scalar>>& perpendicular,
                                     const Eigen::Matrix<Scalar, 3, 1>& g_prev) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  if (parallel.cols() == 0 && perpendicular.cols() == 0) return {g_prev, true};

  const Mat3 m = perpendicular * perpendicular.transpose() - parallel * parallel.transpose();
  const Eigen::SelfAdjointEigenSolver<Mat3> solver(m);
  const Vec3& lambda = solver.eigenvalues();

  auto oriented = [&](Vec3 v) {
    v.normalize();
    if (v.dot(g_prev) < 0) v = -v;
    return v;
  };
  Vec3 best = oriented(solver.eigenvectors().col(0));
  for (int k = 1; k < 3; ++k) {
    if (lambda(k) - lambda(0) > Scalar(1e-9)) break;
    const Vec3 candidate = oriented(solver.eigenvectors().col(k));
    if (std::lexicographical_compare(candidate.data(), candidate.data() + 3, best.data(), best.data() + 3)) {
      best = candidate;
    }
  }
  return {best, false};
}

/// Iterative split-and-minimize starting from +y, over the cloud's normals
/// minus the rough ones (see GravityConfig::roughness_ratio). The coarse
/// threshold is used for the first `coarse_iterations` steps and the fine one
/// afterwards. A coarse step that moves g by less than the tolerance jumps
/// straight to the fine phase; a fine step below tolerance stops.
template <typename Scalar>
GravityEstimate<Scalar> estimate_gravity(const OrientedPointCloud<Scalar>& cloud, const GravityConfig& config = {}) {
  config.validate();
  if (cloud.empty()) throw DataError("estimate_gravity: empty point cloud");
  Points3<Scalar> normals;
  if (config.roughness_ratio > 0 && cloud.roughness.size() == cloud.size()) {
    const std::vector<Scalar> all(cloud.roughness.data(), cloud.roughness.data() + cloud.size());
    const Scalar limit = static_cast<Scalar>(config.roughness_ratio) * median(all);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      if (cloud.roughness(i) <= limit) keep.push_back(i);
    }
    normals = cloud.normals(Eigen::all, keep);
  } else {
    normals = cloud.normals;
  }

  GravityEstimate<Scalar> est;
  est.g = detail::unit_y<Scalar>();
  est.normals_used = normals.cols();
  int t = 1;
  while (est.iterations_run < config.max_iterations) {
    const bool coarse = t <= config.coarse_iterations;
    const Scalar d = static_cast<Scalar>(coarse ? config.coarse_threshold : config.fine_threshold);
    const GravitySplit<Scalar> split = split_by_gravity<Scalar>(normals, est.g, d);
    const GravityUpdate<Scalar> update = update_gravity<Scalar>(split.parallel, split.perpendicular, est.g);
    est.degenerate_split = est.degenerate_split || update.degenerate;
    est.final_angle_change = angle_between(est.g, update.g);
    est.g = update.g;
    ++est.iterations_run;
    if (est.final_angle_change < static_cast<Scalar>(config.tolerance)) {
      if (!coarse) break;
      t = config.coarse_iterations + 1;
    } else {
      ++t;
    }
  }
  return est;
}

/// Converts relative inverse depth v to depth s / (v + 1e-6), with s chosen so
/// the median valid output equals `median_depth`. Depth order is reversed
/// relative to v, as expected of an inversion.
template <typename Scalar>
DepthImage<Scalar> normalize_relative_depth(const DepthImage<Scalar>& depth, double median_depth = 5.0) {
  if (depth.convention != DepthConvention::kRelativeInverseDepth) {
    throw ContractError("normalize_relative_depth: input must use the relative inverse depth convention");
  }
  if (!(median_depth > 0)) throw ContractError("normalize_relative_depth: median_depth must be positive");
  constexpr Scalar kEps = Scalar(1e-6);
  std::vector<Scalar> inverted;
  inverted.reserve(static_cast<std::size_t>(depth.values.size()));
  for (Eigen::Index i = 0; i < depth.values.size(); ++i) {
    const Scalar v = depth.values.data()[i];
    if (is_valid_depth(v)) inverted.push_back(Scalar(1) / (v + kEps));
  }
  if (inverted.empty()) throw DataError("normalize_relative_depth: no valid pixels (empty image)");
  const Scalar scale = static_cast<Scalar>(median_depth) / median(inverted);

  DepthImage<Scalar> out;
  out.convention = DepthConvention::kMetricDepth;
  out.values = ImageMatrix<Scalar>::Zero(depth.height(), depth.width());
  for (Eigen::Index i = 0; i < depth.values.size(); ++i) {
    const Scalar v = depth.values.data()[i];
    if (is_valid_depth(v)) out.values.data()[i] = scale * (Scalar(1) / (v + kEps));
  }
  return out;
}

/// Metric depth for geometry: identity on metric input, median-anchored
/// normalization on relative inverse depth.
template <typename Scalar>
DepthImage<Scalar> to_metric(const DepthImage<Scalar>& depth, const HhaConfig& config) {
  if (depth.convention == DepthConvention::kMetricDepth) return depth;
  return normalize_relative_depth(depth, config.median_depth);
}

/// Encodes using an already back-projected cloud. Only pixels present in the
/// cloud are encoded; all others are (0, 0, 0).
template <typename Scalar>
HhaImage encode_hha(const DepthImage<Scalar>& depth, const OrientedPointCloud<Scalar>& cloud,
                    const GravityEstimate<Scalar>& gravity, const HhaConfig& config = {}) {
  config.validate();
  if (cloud.empty()) throw DataError("encode_hha: empty point cloud");
  const Eigen::Matrix<Scalar, 3, 1> g = gravity.g.normalized();
  const Eigen::Index n = cloud.size();
  const bool metric = depth.convention == DepthConvention::kMetricDepth;

  std::vector<double> disparity(static_cast<std::size_t>(n));
  std::vector<double> height(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index pix = cloud.pixel_index[static_cast<std::size_t>(k)];
    const double raw = static_cast<double>(depth.values.data()[pix]);
    disparity[static_cast<std::size_t>(k)] = metric ? 1.0 / raw : raw;
    height[static_cast<std::size_t>(k)] = -static_cast<double>(g.dot(cloud.points.col(k)));
  }

  HhaImage out;
  for (auto& c : out.channels) c = HhaImage::Channel::Zero(depth.height(), depth.width());
  const double lo = percentile(disparity, config.disparity_low_percentile);
  const double hi = percentile(disparity, config.disparity_high_percentile);
  out.constant_depth = !(hi - lo > 0);
  out.floor_offset = percentile(height, config.floor_percentile);

  constexpr double kDegPerRad = 180.0 / std::numbers::pi;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const Eigen::Index pix = cloud.pixel_index[ks];
    const std::uint8_t disp =
        out.constant_depth ? std::uint8_t{128} : detail::quantize_unit((disparity[ks] - lo) / (hi - lo));
    out.channels[0].data()[pix] = disp;
    if (config.single_channel) {
      out.channels[1].data()[pix] = disp;
      out.channels[2].data()[pix] = disp;
      continue;
    }
    out.channels[1].data()[pix] = detail::quantize_unit((height[ks] - out.floor_offset) / config.height_range);
    const double angle = static_cast<double>(angle_between(cloud.normals.col(k), g)) * kDegPerRad;
    out.channels[2].data()[pix] = detail::quantize_unit(angle / 180.0);
  }
  return out;
}

template <typename Scalar>
HhaImage encode_hha(const DepthImage<Scalar>& depth, const CameraIntrinsics<Scalar>& intr,
                    const GravityEstimate<Scalar>& gravity, const HhaConfig& config = {}) {
  config.validate();
  const OrientedPointCloud<Scalar> cloud =
      backproject(to_metric(depth, config), intr, config.normal_window, config.normal_method);
  return encode_hha(depth, cloud, gravity, config);
}

struct EncodedDepth {
  HhaImage hha;
  GravityEstimate<double> gravity;
  NormalDiagnostics normals;
};

/// Full per-image pipeline: normalize, back-project, estimate gravity, encode.
template <typename Scalar>
EncodedDepth encode_depth(const DepthImage<Scalar>& depth, const CameraIntrinsics<Scalar>& intr,
                          const GravityConfig& gravity_config = {}, const HhaConfig& hha_config = {}) {
  hha_config.validate();
  const OrientedPointCloud<Scalar> cloud =
      backproject(to_metric(depth, hha_config), intr, hha_config.normal_window, hha_config.normal_method);
  const GravityEstimate<Scalar> gravity = estimate_gravity(cloud, gravity_config);
  EncodedDepth out;
  out.hha = encode_hha(depth, cloud, gravity, hha_config);
  out.gravity.g = gravity.g.template cast<double>();
  out.gravity.iterations_run = gravity.iterations_run;
  out.gravity.final_angle_change = static_cast<double>(gravity.final_angle_change);
  out.gravity.degenerate_split = gravity.degenerate_split;
  out.gravity.normals_used = gravity.normals_used;
  out.normals = cloud.diagnostics;
  return out;
}

}  // namespace pseudorgbd
