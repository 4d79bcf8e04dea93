#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "icsim/layout.hpp"

using namespace icsim;

namespace {

// Independent convex-hexagon membership: the point is on the inner side of every edge.
bool inside_convex(Vec2 p, const std::vector<Vec2>& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < -1e-9) {
      return false;
    }
  }
  return true;
}

// Folds a coordinate by walking it back and forth; slow but obviously right.
double bounce(double s, double length) {
  while (s < 0.0 || s > length) {
    s = s < 0.0 ? -s : 2.0 * length - s;
  }
  return s;
}

}  // namespace

TEST_CASE("zero users is rejected") {
  CHECK_THROWS_AS(build_default_layout(1, 0, {}), std::invalid_argument);
}

TEST_CASE("default build has 31 sectors and all users in the region") {
  const NetworkLayout l = build_default_layout(7, 100, {});
  CHECK(l.sectors.size() == 31);
  CHECK(l.count_sectors(NodeKind::PSN) == 21);
  CHECK(l.count_sectors(NodeKind::LRN) == 8);
  CHECK(l.count_sectors(NodeKind::UAV) == 2);
  CHECK(l.count_users(UserKind::PsnMu) == 100);
  for (const UserNode& u : l.users) {
    if (u.kind == UserKind::PsnMu) {
      CHECK(inside_convex(u.position, l.region_of_interest));
    }
  }
  for (std::size_t i = 0; i < l.sectors.size(); ++i) {
    const BSNode& n = l.sectors[i];
    CHECK(n.id == static_cast<int>(i));
    CHECK(n.tx_power_dbm > 0.0);
    CHECK(n.antenna_height_m > 0.0);
    CHECK(n.azimuth_deg >= 0.0);
    CHECK(n.azimuth_deg < 360.0);
  }
}

TEST_CASE("users stay inside the region for many seeds") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const NetworkLayout l = build_default_layout(seed, 200, {});
    for (const UserNode& u : l.users) {
      if (u.kind == UserKind::PsnMu) {
        REQUIRE(inside_convex(u.position, l.region_of_interest));
      }
    }
  }
}

TEST_CASE("site spacing and UAV placement") {
  const NetworkLayout l = build_default_layout(3, 10, {});
  std::vector<Vec2> psn;
  std::vector<Vec2> lrn;
  for (const Site& s : l.sites) {
    if (s.kind == NodeKind::PSN) {
      psn.push_back(s.position);
    } else if (s.kind == NodeKind::LRN) {
      lrn.push_back(s.position);
    }
  }
  REQUIRE(psn.size() == 7);
  for (std::size_t k = 1; k < psn.size(); ++k) {
    CHECK(norm(psn[k] - psn[0]) == doctest::Approx(4000.0));
    CHECK(norm(psn[k] - psn[k == 6 ? 1 : k + 1]) == doctest::Approx(4000.0));
  }
  REQUIRE(lrn.size() == 4);
  const Vec2 dir = l.track.direction();
  for (std::size_t k = 1; k < lrn.size(); ++k) {
    const Vec2 d = lrn[k] - lrn[k - 1];
    CHECK(d.x * dir.x + d.y * dir.y == doctest::Approx(1000.0));
  }
  const auto cell = hexagon({0.0, 0.0}, 2000.0);
  for (const BSNode& n : l.sectors) {
    if (n.kind != NodeKind::UAV) {
      continue;
    }
    CHECK(norm(n.position) == doctest::Approx(2000.0));
    CHECK(point_in_polygon(n.position, cell));
    CHECK(n.antenna_height_m == 100.0);
  }
}

TEST_CASE("one train user per LRN serving area") {
  const NetworkLayout l = build_default_layout(11, 5, {});
  CHECK(l.count_users(UserKind::LrnUser) == 4);
  for (const UserNode& u : l.users) {
    if (u.kind == UserKind::LrnUser) {
      CHECK(u.track_pos_m >= 0.0);
      CHECK(u.track_pos_m <= l.track.length());
      CHECK(u.speed_mps == doctest::Approx(83.3));
    }
  }
}

TEST_CASE("layout is deterministic in its seed") {
  CHECK(layout_to_json(build_default_layout(5, 50, {})) == layout_to_json(build_default_layout(5, 50, {})));
  CHECK(layout_to_json(build_default_layout(5, 50, {})) != layout_to_json(build_default_layout(6, 50, {})));
}

TEST_CASE("invalid layout configs are rejected") {
  LayoutConfig c;
  c.track_offset_m = 1800.0;  // beyond the hexagon apothem
  CHECK_THROWS_WITH_AS(build_default_layout(1, 5, c), doctest::Contains("degenerate track"), std::invalid_argument);
  c = {};
  c.n_lrn_sites = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.psn_isd_m = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("advance_users kinematics") {
  NetworkLayout l = build_default_layout(2, 3, {});
  const NetworkLayout before = l;
  SUBCASE("static users do not move") {
    for (UserNode& u : l.users) {
      u.speed_mps = 0.0;
    }
    const NetworkLayout after = advance_users(l, 1.0);
    for (std::size_t i = 0; i < l.users.size(); ++i) {
      CHECK(after.users[i].position == l.users[i].position);
    }
  }
  SUBCASE("train moves speed times dt along the track") {
    UserNode& u = l.users.back();
    u.track_pos_m = l.track.length() / 2.0;
    u.position = l.track.at(u.track_pos_m);
    u.heading = l.track.direction();
    const NetworkLayout after = advance_users(l, 1.0);
    CHECK(norm(after.users.back().position - u.position) == doctest::Approx(83.3));
    CHECK(after.users.back().track_pos_m == doctest::Approx(u.track_pos_m + 83.3));
    for (std::size_t i = 0; i < l.users.size(); ++i) {
      if (l.users[i].kind == UserKind::PsnMu) {
        CHECK(after.users[i].position == before.users[i].position);
      }
    }
  }
  SUBCASE("overshoot reflects back onto the segment") {
    UserNode& u = l.users.back();
    const double len = l.track.length();
    u.track_pos_m = len - 10.0;
    u.heading = l.track.direction();
    const NetworkLayout after = advance_users(l, 1.0);
    CHECK(after.users.back().track_pos_m == doctest::Approx(bounce(len - 10.0 + 83.3, len)));
    CHECK(after.users.back().heading.x == doctest::Approx(-l.track.direction().x));
  }
  CHECK_THROWS_AS(advance_users(l, 0.0), std::invalid_argument);
}

TEST_CASE("reflection matches a bouncing oracle") {
  const double len = 3422.0;
  for (double s = -3.0 * len; s <= 3.0 * len; s += 97.3) {
    const auto [pos, flipped] = reflect_on_segment(s, len);
    CHECK(pos == doctest::Approx(bounce(s, len)).epsilon(1e-9));
    CHECK(pos >= 0.0);
    CHECK(pos <= len);
    (void)flipped;
  }
}

TEST_CASE("track positions stay on the segment over a long run") {
  NetworkLayout l = build_default_layout(9, 1, {});
  for (int t = 0; t < 2000; ++t) {
    l = advance_users(std::move(l), 0.05);
    for (const UserNode& u : l.users) {
      if (u.kind == UserKind::LrnUser) {
        REQUIRE(u.track_pos_m >= 0.0);
        REQUIRE(u.track_pos_m <= l.track.length());
        REQUIRE(std::abs(u.position.y - l.track.a.y) < 1e-9);
      }
    }
  }
}
