#pragma once

#include <span>
#include <vector>

#include "mvref/image.hpp"
#include "mvref/warp.hpp"

namespace mvref {

// Tiling of the HR target into ps x ps patches. Dimensions that are not a
// multiple of ps are padded by edge replication; the last row/column of
// patches then extends past the image.
struct PatchGrid {
  int patch_size = 16;
  int rows = 0;
  int cols = 0;
  int hr_height = 0;
  int hr_width = 0;

  static PatchGrid cover(int hr_width, int hr_height, int patch_size);
};

inline constexpr int kSentinelNone = -1;
inline constexpr int kFallbackSource = -1;

// Mean of valid warped depths per patch; +inf when fewer than min_valid_frac of
// the (padded) patch pixels are valid.
Grid<double> patch_mean_depth(const WarpedView& warped, const PatchGrid& grid,
                              double min_valid_frac = 0.5);

// Rank-k selection: per patch, the position (into the candidate list) of the view
// with the k-th smallest patch-mean depth, ties broken by lower position.
struct HFIndexMap {
  int rank = 1;
  Grid<int> index;  // candidate position or kSentinelNone
};

std::vector<HFIndexMap> hf_index_maps(std::span<const Grid<double>> means, int v);

struct SynthesizedReference {
  ViewImage image;
  Grid<int> provenance;  // per patch: source view id or kFallbackSource
  Mask from_view;        // per pixel: 1 when copied from a warped view
};

// Patchwise copy from the indexed warped views; sentinel patches and invalid
// pixels inside selected patches come from the fallback image.
SynthesizedReference synthesize_reference(std::span<const WarpedView> warped,
                                          const HFIndexMap& index_map, const PatchGrid& grid,
                                          const ViewImage& fallback);

// Top-v references from the candidate warped views (all S views for MVRs).
std::vector<SynthesizedReference> synthesize_mvrs(std::span<const WarpedView> warped, int v,
                                                  const PatchGrid& grid, const ViewImage& fallback,
                                                  double min_valid_frac = 0.5);

// Same machinery restricted to the L nearby views.
std::vector<SynthesizedReference> synthesize_nvrs(std::span<const WarpedView> nearby, int v,
                                                  const PatchGrid& grid, const ViewImage& fallback,
                                                  double min_valid_frac = 0.5);

// ceil(l/2) predecessors and floor(l/2) successors of target_id in dataset order,
// shifted inward at the ends so exactly l ids come back. Target excluded.
std::vector<int> select_nearby_views(int target_id, std::span<const int> ids_in_order, int l);

}  // namespace mvref
