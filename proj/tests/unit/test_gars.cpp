#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "mvref/gars.hpp"
#include "mvref/pipeline.hpp"

using namespace mvref;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WarpedView constant_view(int w, int h, double depth, Rgb color, int id) {
  WarpedView v{ViewImage(w, h), DepthMap(w, h), Mask(w, h, 1), id};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      v.depth.set(x, y, depth);
      v.color.set(x, y, color);
    }
  return v;
}

WarpedView random_view(int w, int h, double valid_p, std::mt19937_64& rng, int id) {
  std::uniform_real_distribution<double> u(0, 1);
  WarpedView v{helpers::random_image(w, h, rng), DepthMap(w, h), Mask(w, h, 0), id};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (u(rng) < valid_p) {
        v.depth.set(x, y, 1 + 9 * u(rng));
        v.valid(x, y) = 1;
      } else {
        v.color.set(x, y, {0, 0, 0});
      }
    }
  return v;
}

}  // namespace

TEST_CASE("patch grid covers padded dimensions") {
  const PatchGrid g = PatchGrid::cover(70, 32, 16);
  CHECK(g.cols == 5);
  CHECK(g.rows == 2);
  CHECK_THROWS_AS(PatchGrid::cover(70, 32, 0), InvalidArgument);
}

TEST_CASE("patch mean depth") {
  const PatchGrid g = PatchGrid::cover(32, 32, 16);
  const WarpedView c = constant_view(32, 32, 2.5, {0.5, 0.5, 0.5}, 0);
  const Grid<double> m = patch_mean_depth(c, g);
  for (double v : m.data()) CHECK(v == doctest::Approx(2.5).epsilon(1e-15));

  // 40% valid patch: below the 50% threshold.
  WarpedView sparse = c;
  int kept = 0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      if (kept < 102) {
        ++kept;
        continue;
      }
      sparse.depth.invalidate(x, y);
      sparse.valid(x, y) = 0;
    }
  CHECK(patch_mean_depth(sparse, g)(0, 0) == kInf);
  CHECK(patch_mean_depth(sparse, g, 0.3)(0, 0) == doctest::Approx(2.5));

  std::mt19937_64 rng(20);
  const WarpedView r = random_view(40, 24, 0.7, rng, 3);
  const PatchGrid g8 = PatchGrid::cover(40, 24, 8);
  const Grid<double> rm = patch_mean_depth(r, g8);
  for (int pr = 0; pr < g8.rows; ++pr)
    for (int pc = 0; pc < g8.cols; ++pc) {
      double sum = 0;
      int n = 0;
      for (int y = pr * 8; y < pr * 8 + 8; ++y)
        for (int x = pc * 8; x < pc * 8 + 8; ++x)
          if (r.depth.valid(x, y)) {
            sum += r.depth.value(x, y);
            ++n;
          }
      if (n < 32) {
        CHECK(rm(pc, pr) == kInf);
      } else {
        CHECK(rm(pc, pr) == doctest::Approx(sum / n).epsilon(1e-12));
      }
    }
}

TEST_CASE("patch mean on padded borders replicates edge pixels") {
  // Width 20 with ps 16: the second patch column holds 4 real columns, each
  // replicated to fill 16; the mean equals the mean of the real pixels weighted
  // by replication counts.
  WarpedView v = constant_view(20, 16, 1.0, {}, 0);
  for (int y = 0; y < 16; ++y) v.depth.set(19, y, 13.0);
  const PatchGrid g = PatchGrid::cover(20, 16, 16);
  const Grid<double> m = patch_mean_depth(v, g);
  // Columns 16..18 once each, column 19 replicated 13 times.
  CHECK(m(1, 0) == doctest::Approx((3 * 1.0 + 13 * 13.0) / 16));
}

TEST_CASE("index maps follow a full sort") {
  std::vector<Grid<double>> means(2, Grid<double>(3, 2));
  for (auto& v : means[0].data()) v = 1.0;
  for (auto& v : means[1].data()) v = 2.0;
  auto maps = hf_index_maps(means, 2);
  REQUIRE(maps.size() == 2);
  for (int v : maps[0].index.data()) CHECK(v == 0);
  for (int v : maps[1].index.data()) CHECK(v == 1);
  CHECK(maps[0].rank == 1);

  // Tie between positions 2 and 5 goes to 2.
  std::vector<Grid<double>> tie(6, Grid<double>(1, 1, 9.0));
  tie[2](0, 0) = 1.0;
  tie[5](0, 0) = 1.0;
  maps = hf_index_maps(tie, 3);
  CHECK(maps[0].index(0, 0) == 2);
  CHECK(maps[1].index(0, 0) == 5);
  CHECK(maps[2].index(0, 0) == 0);

  // Beyond the candidate count, and infinite means, give sentinels.
  std::vector<Grid<double>> two(2, Grid<double>(1, 1, 3.0));
  two[1](0, 0) = kInf;
  maps = hf_index_maps(two, 4);
  REQUIRE(maps.size() == 4);
  CHECK(maps[0].index(0, 0) == 0);
  CHECK(maps[1].index(0, 0) == kSentinelNone);
  CHECK(maps[3].index(0, 0) == kSentinelNone);

  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> d(0, 5);
  std::vector<Grid<double>> rnd(7, Grid<double>(5, 4));
  for (auto& g : rnd)
    for (auto& v : g.data()) v = d(rng) == 0 ? kInf : static_cast<double>(d(rng));  // many ties
  maps = hf_index_maps(rnd, 3);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) {
      std::vector<std::pair<double, int>> keyed;
      for (int i = 0; i < 7; ++i) keyed.emplace_back(rnd[i](c, r), i);
      std::sort(keyed.begin(), keyed.end());
      for (int k = 0; k < 3; ++k) {
        const int expect = std::isinf(keyed[k].first) ? kSentinelNone : keyed[k].second;
        CHECK(maps[k].index(c, r) == expect);
      }
    }
}

TEST_CASE("index maps are invariant to a global depth scale") {
  std::mt19937_64 rng(22);
  std::vector<WarpedView> views;
  for (int i = 0; i < 5; ++i) views.push_back(random_view(32, 32, 0.8, rng, i));
  const PatchGrid g = PatchGrid::cover(32, 32, 8);
  std::vector<Grid<double>> a, b;
  for (auto v : views) {
    a.push_back(patch_mean_depth(v, g));
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (v.depth.valid(x, y)) v.depth.set(x, y, v.depth.value(x, y) * 3.7);
    b.push_back(patch_mean_depth(v, g));
  }
  const auto ma = hf_index_maps(a, 5), mb = hf_index_maps(b, 5);
  for (int k = 0; k < 5; ++k) CHECK(ma[k].index == mb[k].index);
}

TEST_CASE("reference synthesis") {
  const PatchGrid g = PatchGrid::cover(32, 32, 8);
  std::mt19937_64 rng(23);
  const ViewImage fallback = helpers::random_image(32, 32, rng);
  WarpedView a = random_view(32, 32, 1.0, rng, 10);
  WarpedView b = random_view(32, 32, 1.0, rng, 20);

  SUBCASE("single fully valid view") {
    const std::vector<WarpedView> one{a};
    const auto refs = synthesize_mvrs(one, 1, g, fallback);
    CHECK(refs[0].image == a.color);
    for (int p : refs[0].provenance.data()) CHECK(p == 10);
  }
  SUBCASE("all sentinel gives the fallback") {
    const std::vector<WarpedView> both{a, b};
    const HFIndexMap none{1, Grid<int>(4, 4, kSentinelNone)};
    const auto ref = synthesize_reference(both, none, g, fallback);
    CHECK(ref.image == fallback);
    for (int p : ref.provenance.data()) CHECK(p == kFallbackSource);
    for (auto m : ref.from_view.data()) CHECK(m == 0);
  }
  SUBCASE("checkerboard index map copies patches") {
    const std::vector<WarpedView> both{a, b};
    HFIndexMap checker{1, Grid<int>(4, 4)};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) checker.index(c, r) = (r + c) % 2;
    // Punch invalid pixels into b; they must come from the fallback.
    std::vector<WarpedView> holed = both;
    for (int i = 0; i < 32; i += 3) {
      holed[1].valid(i, (i * 7) % 32) = 0;
      holed[1].depth.invalidate(i, (i * 7) % 32);
    }
    const auto ref = synthesize_reference(holed, checker, g, fallback);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        const int pick = ((y / 8) + (x / 8)) % 2;
        const WarpedView& src = holed[pick];
        if (src.valid(x, y)) {
          CHECK(ref.image.at(x, y) == src.color.at(x, y));
          CHECK(ref.from_view(x, y) == 1);
        } else {
          CHECK(ref.image.at(x, y) == fallback.at(x, y));
          CHECK(ref.from_view(x, y) == 0);
        }
      }
    CHECK(ref.provenance(0, 0) == 10);
    CHECK(ref.provenance(1, 0) == 20);
  }
  CHECK_THROWS_AS(synthesize_mvrs(std::vector<WarpedView>{}, 2, g, fallback), InvalidArgument);
}

TEST_CASE("rank-1 provenance has the minimal patch mean and pixels are traceable") {
  std::mt19937_64 rng(24);
  std::vector<WarpedView> views;
  for (int i = 0; i < 4; ++i) views.push_back(random_view(24, 24, 0.75, rng, 100 + i));
  const PatchGrid g = PatchGrid::cover(24, 24, 6);
  const ViewImage fallback = helpers::random_image(24, 24, rng);
  const auto refs = synthesize_mvrs(views, 3, g, fallback);
  std::vector<Grid<double>> means;
  for (const auto& v : views) means.push_back(patch_mean_depth(v, g));
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      double best = kInf;
      for (const auto& m : means) best = std::min(best, m(c, r));
      const int prov = refs[0].provenance(c, r);
      if (std::isinf(best)) {
        CHECK(prov == kFallbackSource);
      } else {
        REQUIRE(prov >= 100);
        CHECK(means[prov - 100](c, r) == best);
      }
    }
  for (const auto& ref : refs)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 24; ++x) {
        const int prov = ref.provenance(x / 6, y / 6);
        const bool from_view = prov != kFallbackSource && views[prov - 100].valid(x, y);
        CHECK(ref.from_view(x, y) == from_view);
        CHECK(ref.image.at(x, y) == (from_view ? views[prov - 100].color.at(x, y) : fallback.at(x, y)));
      }
}

TEST_CASE("nearby view window") {
  std::vector<int> ids(100);
  std::iota(ids.begin(), ids.end(), 0);
  CHECK(select_nearby_views(10, ids, 6) == std::vector<int>{7, 8, 9, 11, 12, 13});
  CHECK(select_nearby_views(0, ids, 6) == std::vector<int>{1, 2, 3, 4, 5, 6});
  CHECK(select_nearby_views(99, ids, 6) == std::vector<int>{93, 94, 95, 96, 97, 98});
  CHECK(select_nearby_views(10, ids, 5) == std::vector<int>{7, 8, 9, 11, 12});
  CHECK(select_nearby_views(1, ids, 6) == std::vector<int>{0, 2, 3, 4, 5, 6});
  const std::vector<int> small{4, 9, 2};
  CHECK(select_nearby_views(9, small, 2) == std::vector<int>{4, 2});
  CHECK_THROWS_AS(select_nearby_views(9, small, 3), InvalidArgument);
  CHECK_THROWS_AS(select_nearby_views(7, small, 1), InvalidArgument);
  CHECK_THROWS_AS(select_nearby_views(9, small, 0), InvalidArgument);
}

TEST_CASE("pipeline gars produces V references of HR size") {
  const SceneData scene = scene_from_case(make_mvisr_case(scenes::desk(64), 4), "desk");
  RunConfig cfg;
  cfg.ps = 8;
  const GarsResult g = run_gars(scene, 3, cfg);
  CHECK(g.warped.size() == 7);
  CHECK(g.mvrs.size() == 6);
  CHECK(g.nvrs.size() == 6);
  CHECK(g.nearby_ids == std::vector<int>{0, 1, 2, 4, 5, 6});
  for (const auto& r : g.mvrs) {
    CHECK(r.image.width() == 64);
    CHECK(r.provenance.width() == 8);
  }
  // Same machinery as the library entry point.
  const auto direct = synthesize_mvrs(g.warped, 6, g.grid, g.bicubic);
  for (std::size_t k = 0; k < direct.size(); ++k) CHECK(direct[k].image == g.mvrs[k].image);
}
