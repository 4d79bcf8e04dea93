#include <doctest.h>

#include <cmath>
#include <random>

#include "icsim/channel.hpp"

using namespace icsim;

namespace {

// Macro-cell pathloss written out term by term.
double pathloss_oracle(double f, double h, double d) {
  const double lf = std::log10(f);
  const double lh = std::log10(h);
  return 69.55 + 26.16 * lf - 13.82 * lh + (44.9 - 6.55 * lh) * std::log10(d) - 4.78 * lf * lf + 18.33 * lf - 40.94;
}

NetworkLayout bare_layout(int n_users, int n_sites) {
  NetworkLayout l;
  for (int s = 0; s < n_sites; ++s) {
    l.sites.push_back({s, NodeKind::PSN, {1000.0 * s, 0.0}});
  }
  l.users.resize(static_cast<std::size_t>(n_users));
  for (int u = 0; u < n_users; ++u) {
    l.users[u].id = u;
  }
  return l;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const double cov = ((a.array() - ma) * (b.array() - mb)).mean();
  const double va = (a.array() - ma).square().mean();
  const double vb = (b.array() - mb).square().mean();
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("pathloss reference points") {
  const double at1 = pathloss_db(700.0, 30.0, 1.0);
  CHECK(at1 == doctest::Approx(pathloss_oracle(700.0, 30.0, 1.0)).epsilon(1e-12));
  CHECK(at1 == doctest::Approx(96.09).epsilon(2e-4));
  CHECK(pathloss_db(700.0, 30.0, 2.0) - at1 == doctest::Approx(10.60).epsilon(1e-3));
  CHECK(pathloss_db(700.0, 30.0, 2.0) - at1 ==
        doctest::Approx((44.9 - 6.55 * std::log10(30.0)) * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("distance term vanishes at 1 km") {
  for (double f : {150.0, 700.0, 1500.0}) {
    for (double h : {10.0, 30.0, 100.0}) {
      const double lf = std::log10(f);
      const double lh = std::log10(h);
      const double without_distance = 69.55 + 26.16 * lf - 13.82 * lh - 4.78 * lf * lf + 18.33 * lf - 40.94;
      CHECK(pathloss_db(f, h, 1.0) == doctest::Approx(without_distance).epsilon(1e-12));
    }
  }
}

TEST_CASE("pathloss matches the closed form on a random grid") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> f(100.0, 3000.0);
  std::uniform_real_distribution<double> h(1.0, 200.0);
  std::uniform_real_distribution<double> d(0.01, 50.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = f(rng);
    const double b = h(rng);
    const double c = d(rng);
    worst = std::max(worst, std::abs(pathloss_db(a, b, c) - pathloss_oracle(a, b, c)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("pathloss rejects non-positive arguments") {
  CHECK_THROWS_AS(pathloss_db(0.0, 30.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(pathloss_db(700.0, -1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(pathloss_db(700.0, 30.0, 0.0), std::domain_error);
}

TEST_CASE("antenna pattern") {
  const AntennaPattern p{15.0, 65.0, 10.0, 30.0, 3.0};
  CHECK(antenna_gain(0.0, 0.0, p) == doctest::Approx(15.0));
  CHECK(antenna_gain(0.0, 65.0, p) == doctest::Approx(15.0 - 12.0));
  CHECK(antenna_gain(10.0, 0.0, p) == doctest::Approx(15.0 - 12.0));
  CHECK(antenna_gain(0.0, 180.0, p) == doctest::Approx(15.0 - 30.0));
  CHECK(antenna_gain(60.0, 150.0, p) == doctest::Approx(15.0 - 30.0));
  CHECK(antenna_gain(0.0, 370.0, p) == doctest::Approx(antenna_gain(0.0, 10.0, p)));
  CHECK(antenna_gain(0.0, -20.0, p) == doctest::Approx(antenna_gain(0.0, 20.0, p)));
  const AntennaPattern omni{3.0, 0.0, 0.0, 30.0, 0.0};
  CHECK(antenna_gain(45.0, 123.0, omni) == doctest::Approx(3.0));
}

TEST_CASE("link gain recomposition is exact") {
  const NetworkLayout l = build_default_layout(1, 30, {});
  const ChannelRealization ch(l, {}, 9, 100);
  for (int u = 0; u < ch.users(); ++u) {
    for (int s = 0; s < ch.sectors(); ++s) {
      const LinkGain& g = ch.gain(u, s);
      CHECK(g.total == g.antenna_gain - g.pathloss - g.shadowing - g.fading);
    }
  }
}

TEST_CASE("shadowing statistics") {
  const NetworkLayout l = bare_layout(100000, 4);
  SUBCASE("independent sites") {
    const Eigen::MatrixXd x = draw_shadowing(l, 8.0, 0.0, 3);
    CHECK(std::abs(correlation(x.col(0), x.col(1))) < 0.05);
    CHECK(std::abs(correlation(x.col(2), x.col(3))) < 0.05);
  }
  SUBCASE("correlated sites") {
    const Eigen::MatrixXd x = draw_shadowing(l, 8.0, 0.5, 3);
    for (int a = 0; a < 4; ++a) {
      const double mean = x.col(a).mean();
      const double sd = std::sqrt((x.col(a).array() - mean).square().mean());
      CHECK(sd == doctest::Approx(8.0).epsilon(0.2 / 8.0));
      for (int b = a + 1; b < 4; ++b) {
        CHECK(correlation(x.col(a), x.col(b)) == doctest::Approx(0.5).epsilon(0.1));
      }
    }
  }
  CHECK(draw_shadowing(l, 8.0, 0.5, 3) == draw_shadowing(l, 8.0, 0.5, 3));
  CHECK_THROWS_AS(draw_shadowing(l, 8.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(draw_shadowing(l, 8.0, -0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(draw_shadowing(l, 0.0, 0.5, 3), std::invalid_argument);
}

TEST_CASE("sectors of one site share the shadowing value") {
  const NetworkLayout l = build_default_layout(4, 20, {});
  const ChannelRealization ch(l, {}, 2, 10);
  for (int u = 0; u < ch.users(); ++u) {
    CHECK(ch.gain(u, 0).shadowing == ch.gain(u, 1).shadowing);
    CHECK(ch.gain(u, 1).shadowing == ch.gain(u, 2).shadowing);
  }
}

TEST_CASE("fading traces") {
  SUBCASE("static user has one block") {
    const FadingTrace t = draw_fading(FadingKind::D1Like, 0.0, 700.0, 1, 2000);
    CHECK(t.loss_db.size() == 1);
    CHECK(t.at(0) == t.at(1999));
  }
  SUBCASE("coherence from Doppler") {
    const double c = 299792458.0;
    const int expected = static_cast<int>(std::lround(0.423 * c / (700e6 * 83.3) / 1e-3));
    CHECK(coherence_subframes(83.3, 700.0) == expected);
    CHECK(coherence_subframes(0.1, 700.0) > 1000);
    CHECK(coherence_subframes(1e5, 700.0) == 1);
  }
  SUBCASE("unit mean power") {
    const FadingTrace t = draw_fading(FadingKind::D2aLike, 1e5, 700.0, 8, 100000);
    REQUIRE(t.loss_db.size() == 100000);
    double mean = 0.0;
    for (double l : t.loss_db) {
      mean += std::pow(10.0, -l / 10.0);
    }
    CHECK(mean / 100000.0 == doctest::Approx(1.0).epsilon(0.02));
  }
  CHECK(draw_fading(FadingKind::D1Like, 3.0, 700.0, 5, 500).loss_db ==
        draw_fading(FadingKind::D1Like, 3.0, 700.0, 5, 500).loss_db);
  CHECK_THROWS_AS(draw_fading(FadingKind::D1Like, -1.0, 700.0, 5, 10), std::invalid_argument);
}

TEST_CASE("noise per PRB") {
  const ChannelParams p;
  CHECK(p.noise_per_prb_dbm() == doctest::Approx(-174.0 + 10.0 * std::log10(180e3) + 9.0));
}

TEST_CASE("sinr combiner") {
  const NetworkLayout l = build_default_layout(1, 1, {});
  const ChannelRealization ch(l, {}, 1, 10);
  // Transmit powers chosen so that user 0 receives the target powers.
  auto tx_for = [&](std::vector<double> rx_dbm) {
    std::vector<double> tx(l.sectors.size(), 0.0);
    for (std::size_t s = 0; s < rx_dbm.size(); ++s) {
      if (!std::isnan(rx_dbm[s])) {
        tx[s] = dbm_to_mw(rx_dbm[s] - ch.gain(0, static_cast<int>(s)).total);
      }
    }
    return tx;
  };
  const double none = std::nan("");
  CHECK(sinr_db(0, 0, ch, tx_for({-90.0, -100.0}), -120.0) ==
        doctest::Approx(10.0 * std::log10(1e-9 / (1e-10 + 1e-12))));
  CHECK(sinr_db(0, 0, ch, tx_for({-90.0, -100.0}), -120.0) == doctest::Approx(9.96).epsilon(1e-3));
  CHECK(sinr_db(0, 0, ch, tx_for({-90.0}), -120.0) == doctest::Approx(30.0));
  CHECK(sinr_db(0, 0, ch, tx_for({-90.0, none}), -120.0) == sinr_db(0, 0, ch, tx_for({-90.0}), -120.0));
  CHECK_THROWS_AS(sinr_db(0, 1, ch, tx_for({-90.0}), -120.0), MutedServingError);

  // Monotone in any interferer's power.
  double previous = 1e9;
  for (double p = -130.0; p <= -60.0; p += 5.0) {
    const double v = sinr_db(0, 0, ch, tx_for({-90.0, p, -110.0}), -120.0);
    CHECK(v <= previous);
    previous = v;
  }
}
