#include <doctest.h>

#include <cmath>

#include "mvref/image.hpp"
#include "mvref/parallel.hpp"

using namespace mvref;

TEST_CASE("view image clamps and rejects non-finite values") {
  ViewImage img(3, 2);
  img.set(0, 0, {1.5, -0.25, 0.5});
  CHECK(img.at(0, 0) == Rgb{1.0, 0.0, 0.5});
  CHECK_THROWS_AS(img.set(1, 1, {NAN, 0, 0}), InvalidArgument);
  CHECK_THROWS_AS(img.set(1, 1, {0, INFINITY, 0}), InvalidArgument);
  CHECK(img.channel(0, 0, 2) == 0.5);
}

TEST_CASE("depth map validity rules") {
  DepthMap d(2, 2);
  CHECK(d.valid_count() == 0);
  d.set(0, 0, 2.5);
  d.set(1, 0, -1.0);
  d.set(0, 1, 0.0);
  d.set(1, 1, NAN);
  CHECK(d.valid(0, 0));
  CHECK(*d.at(0, 0) == 2.5);
  CHECK_FALSE(d.at(1, 0).has_value());
  CHECK_FALSE(d.valid(0, 1));
  CHECK_FALSE(d.valid(1, 1));
  CHECK(d.valid_count() == 1);
  d.invalidate(0, 0);
  CHECK(d.valid_count() == 0);
}

TEST_CASE("parallel_for covers every index once and propagates errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, [&](int i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(100, [](int i) {
                    if (i == 57) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
  parallel_for(0, [](int) { FAIL("no work expected"); });
}
