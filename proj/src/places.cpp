#include "pseudorgbd/places.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "pseudorgbd/error.hpp"

namespace pseudorgbd {

void PlaceGrid::validate() const {
  if (rows < 1 || cols < 1) throw ContractError("grid: rows and cols must be >= 1");
  if (!(std::isfinite(min_x) && std::isfinite(max_x) && max_x > min_x)) {
    throw ContractError("grid: degenerate extent along x");
  }
  if (!(std::isfinite(min_y) && std::isfinite(max_y) && max_y > min_y)) {
    throw ContractError("grid: degenerate extent along y");
  }
}

PlaceGrid build_grid(const std::vector<Viewpoint>& train_viewpoints, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ContractError("build_grid: rows and cols must be >= 1");
  if (train_viewpoints.empty()) throw DataError("build_grid: no training viewpoints");
  PlaceGrid grid;
  grid.rows = rows;
  grid.cols = cols;
  grid.min_x = grid.max_x = train_viewpoints.front().x;
  grid.min_y = grid.max_y = train_viewpoints.front().y;
  for (const auto& v : train_viewpoints) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw DataError("build_grid: non-finite coordinates for sample '" + v.sample_id + "'");
    }
    grid.min_x = std::min(grid.min_x, v.x);
    grid.max_x = std::max(grid.max_x, v.x);
    grid.min_y = std::min(grid.min_y, v.y);
    grid.max_y = std::max(grid.max_y, v.y);
  }
  if (!(grid.max_x > grid.min_x)) throw DataError("build_grid: degenerate bounding box, zero extent along x");
  if (!(grid.max_y > grid.min_y)) throw DataError("build_grid: degenerate bounding box, zero extent along y");
  return grid;
}

namespace {

int cell_index(double value, double lo, double hi, int count) {
  const double scaled = std::floor((value - lo) / (hi - lo) * count);
  // NaN falls through to cell 0.
  if (!(scaled >= 0)) return 0;
  if (scaled >= count - 1) return count - 1;
  return static_cast<int>(scaled);
}

}  // namespace

int classify_viewpoint(const PlaceGrid& grid, double x, double y) {
  const int col = cell_index(x, grid.min_x, grid.max_x, grid.cols);
  const int row = cell_index(y, grid.min_y, grid.max_y, grid.rows);
  return row * grid.cols + col;
}

LabeledDataset label_dataset(const PlaceGrid& grid, const std::vector<Viewpoint>& viewpoints) {
  grid.validate();
  LabeledDataset out;
  out.histogram.assign(static_cast<std::size_t>(grid.num_classes()), 0);
  out.labels.reserve(viewpoints.size());
  std::unordered_set<std::string> seen;
  for (const auto& v : viewpoints) {
    if (v.sample_id.empty()) throw DataError("label_dataset: empty sample_id");
    if (!seen.insert(v.sample_id).second) throw DataError("label_dataset: duplicate sample_id '" + v.sample_id + "'");
    const int label = classify_viewpoint(grid, v);
    out.labels.push_back({v.sample_id, label});
    ++out.histogram[static_cast<std::size_t>(label)];
  }
  return out;
}

}  // namespace pseudorgbd
