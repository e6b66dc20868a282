#include "mvref/gars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mvref/parallel.hpp"

namespace mvref {

PatchGrid PatchGrid::cover(int hr_width, int hr_height, int patch_size) {
  MVREF_REQUIRE(patch_size >= 1, "patch size must be positive");
  MVREF_REQUIRE(hr_width >= 1 && hr_height >= 1, "patch grid over an empty image");
  PatchGrid g;
  g.patch_size = patch_size;
  g.hr_width = hr_width;
  g.hr_height = hr_height;
  g.cols = (hr_width + patch_size - 1) / patch_size;
  g.rows = (hr_height + patch_size - 1) / patch_size;
  return g;
}

Grid<double> patch_mean_depth(const WarpedView& warped, const PatchGrid& grid,
                              double min_valid_frac) {
  MVREF_REQUIRE(warped.depth.width() == grid.hr_width && warped.depth.height() == grid.hr_height,
                "warped view does not match the patch grid");
  const int ps = grid.patch_size;
  Grid<double> means(grid.cols, grid.rows, std::numeric_limits<double>::infinity());
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int dy = 0; dy < ps; ++dy) {
        const int y = std::min(r * ps + dy, grid.hr_height - 1);
        for (int dx = 0; dx < ps; ++dx) {
          const int x = std::min(c * ps + dx, grid.hr_width - 1);
          if (!warped.depth.valid(x, y)) continue;
          sum += warped.depth.value(x, y);
          ++count;
        }
      }
      if (count > 0 && count >= min_valid_frac * ps * ps) means(c, r) = sum / count;
    }
  }
  return means;
}

std::vector<HFIndexMap> hf_index_maps(std::span<const Grid<double>> means, int v) {
  MVREF_REQUIRE(v >= 1, "number of index maps must be at least 1");
  MVREF_REQUIRE(!means.empty(), "index maps need at least one view");
  const int cols = means[0].width();
  const int rows = means[0].height();
  for (const auto& m : means) {
    MVREF_REQUIRE(m.width() == cols && m.height() == rows, "per-view patch grids differ in shape");
  }
  const int views = static_cast<int>(means.size());

  std::vector<HFIndexMap> maps(v);
  for (int k = 0; k < v; ++k) maps[k] = {k + 1, Grid<int>(cols, rows, kSentinelNone)};

  std::vector<int> order(views);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return means[a](c, r) < means[b](c, r); });
      for (int k = 0; k < std::min(v, views); ++k) {
        if (std::isfinite(means[order[k]](c, r))) maps[k].index(c, r) = order[k];
      }
    }
  }
  return maps;
}

SynthesizedReference synthesize_reference(std::span<const WarpedView> warped,
                                          const HFIndexMap& index_map, const PatchGrid& grid,
                                          const ViewImage& fallback) {
  MVREF_REQUIRE(fallback.width() == grid.hr_width && fallback.height() == grid.hr_height,
                "fallback image must be HR-sized");
  MVREF_REQUIRE(index_map.index.width() == grid.cols && index_map.index.height() == grid.rows,
                "index map does not match the patch grid");
  for (const auto& w : warped) {
    MVREF_REQUIRE(w.color.width() == grid.hr_width && w.color.height() == grid.hr_height,
                  "warped view does not match the patch grid");
  }
  SynthesizedReference ref{fallback, Grid<int>(grid.cols, grid.rows, kFallbackSource),
                           Mask(grid.hr_width, grid.hr_height, 0)};
  const int ps = grid.patch_size;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int pick = index_map.index(c, r);
      if (pick == kSentinelNone) continue;
      MVREF_REQUIRE(pick >= 0 && pick < static_cast<int>(warped.size()),
                    "index map refers to a missing warped view");
      const WarpedView& src = warped[pick];
      ref.provenance(c, r) = src.source_id;
      const int y_end = std::min((r + 1) * ps, grid.hr_height);
      const int x_end = std::min((c + 1) * ps, grid.hr_width);
      for (int y = r * ps; y < y_end; ++y) {
        for (int x = c * ps; x < x_end; ++x) {
          if (!src.valid(x, y)) continue;
          ref.image.set_unchecked(x, y, src.color.at(x, y));
          ref.from_view(x, y) = 1;
        }
      }
    }
  }
  return ref;
}

std::vector<SynthesizedReference> synthesize_mvrs(std::span<const WarpedView> warped, int v,
                                                  const PatchGrid& grid, const ViewImage& fallback,
                                                  double min_valid_frac) {
  MVREF_REQUIRE(!warped.empty(), "reference synthesis needs at least one warped view");
  std::vector<Grid<double>> means;
  means.reserve(warped.size());
  for (const auto& w : warped) means.push_back(patch_mean_depth(w, grid, min_valid_frac));
  const std::vector<HFIndexMap> maps = hf_index_maps(means, v);
  std::vector<SynthesizedReference> refs(maps.size());
  parallel_for(static_cast<int>(maps.size()), [&](int k) {
    refs[k] = synthesize_reference(warped, maps[k], grid, fallback);
  });
  return refs;
}

std::vector<SynthesizedReference> synthesize_nvrs(std::span<const WarpedView> nearby, int v,
                                                  const PatchGrid& grid, const ViewImage& fallback,
                                                  double min_valid_frac) {
  return synthesize_mvrs(nearby, v, grid, fallback, min_valid_frac);
}

std::vector<int> select_nearby_views(int target_id, std::span<const int> ids_in_order, int l) {
  const int total = static_cast<int>(ids_in_order.size());
  MVREF_REQUIRE(l >= 1, "nearby view count must be at least 1");
  MVREF_REQUIRE(l < total, "nearby view count " + std::to_string(l) +
                               " must be smaller than the number of views " + std::to_string(total));
  const auto it = std::find(ids_in_order.begin(), ids_in_order.end(), target_id);
  MVREF_REQUIRE(it != ids_in_order.end(), "target view " + std::to_string(target_id) + " not in dataset");
  const int pos = static_cast<int>(it - ids_in_order.begin());
  // Window of l + 1 positions including the target.
  const int start = std::clamp(pos - (l + 1) / 2, 0, total - 1 - l);
  std::vector<int> out;
  out.reserve(l);
  for (int i = start; i <= start + l; ++i) {
    if (i != pos) out.push_back(ids_in_order[i]);
  }
  return out;
}

}  // namespace mvref
