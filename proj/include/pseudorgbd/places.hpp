#pragma once

#include <string>
#include <vector>

namespace pseudorgbd {

struct Viewpoint {
  std::string sample_id;
  double x{0};
  double y{0};
};

/// Bounding box of the training viewpoints split into rows x cols place classes.
/// Classes are numbered row-major: label = row * cols + col, where rows follow y
/// and columns follow x.
struct PlaceGrid {
  double min_x{0};
  double min_y{0};
  double max_x{1};
  double max_y{1};
  int rows{10};
  int cols{10};

  int num_classes() const { return rows * cols; }
  void validate() const;

  bool operator==(const PlaceGrid&) const = default;
};

PlaceGrid build_grid(const std::vector<Viewpoint>& train_viewpoints, int rows = 10, int cols = 10);

/// Total: points outside the box clamp to the nearest border cell; points on an
/// interior boundary go to the higher-index cell.
int classify_viewpoint(const PlaceGrid& grid, double x, double y);
inline int classify_viewpoint(const PlaceGrid& grid, const Viewpoint& v) { return classify_viewpoint(grid, v.x, v.y); }

struct LabeledSample {
  std::string sample_id;
  int label{0};
};

struct LabeledDataset {
  std::vector<LabeledSample> labels;
  std::vector<int> histogram;  // one bin per class, unseen classes included
};

LabeledDataset label_dataset(const PlaceGrid& grid, const std::vector<Viewpoint>& viewpoints);

}  // namespace pseudorgbd
