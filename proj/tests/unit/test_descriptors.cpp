#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "psgkit/descriptors.hpp"
#include "psgkit/errors.hpp"
#include "psgkit/synth.hpp"

using namespace psgkit;
using namespace psgkit::descriptors;
namespace t = psgkit::testing;

namespace {

double oracle_db(std::span<const double> w, const BandDef& b) {
  const auto psd = t::naive_psd(w, 100.0);
  const double p = t::naive_band_power(psd, 1.0, b.low_hz, b.high_hz, b.name == BandName::Delta);
  return std::max(-100.0, 10.0 * std::log10(p + 1e-10));
}

}  // namespace

TEST(BandPower, ZeroWindowHitsFloor) {
  const std::vector<double> z(100, 0.0);
  for (const auto& b : kBands) EXPECT_EQ(band_power_db(z, b), -100.0);
}

TEST(BandPower, AlphaSineDominatesByTwentyDb) {
  const auto w = t::sine(100, 100.0, 10.0, 50.0);
  const double alpha = band_power_db(w, kBands[2]);
  EXPECT_GE(alpha - band_power_db(w, kBands[0]), 20.0);
  EXPECT_GE(alpha - band_power_db(w, kBands[1]), 20.0);
  EXPECT_GE(alpha - band_power_db(w, kBands[3]), 20.0);
  EXPECT_NEAR(alpha, oracle_db(w, kBands[2]), 1e-9);
}

TEST(BandPower, WhiteNoiseTotalMatchesOracle) {
  const auto w = t::white_noise(100, 1.0, 5);
  double total = 0.0;
  for (const auto& b : kBands) total += band_power(w, b);
  const auto psd = t::naive_psd(w, 100.0);
  const double ref = t::naive_band_power(psd, 1.0, 0.3, 30.0, true);
  EXPECT_NEAR(10 * std::log10(total), 10 * std::log10(ref), 1.0);
}

TEST(BandPower, WrongWindowLength) {
  EXPECT_THROW(band_power_db(std::vector<double>(99, 0.0), kBands[0]), WindowError);
  EXPECT_THROW(mav(std::vector<double>{}), WindowError);
}

TEST(BandPower, ScalingAddsTwentyLog10K) {
  const auto w = t::white_noise(100, 10.0, 11);
  std::vector<double> w3(w);
  for (double& v : w3) v *= 3.0;
  for (const auto& b : kBands) {
    EXPECT_NEAR(band_power_db(w3, b) - band_power_db(w, b), 20 * std::log10(3.0), 1e-9);
  }
  EXPECT_NEAR(mav(w3), 3 * mav(w), 1e-12);
}

TEST(BandPower, BandsDoNotExceedTotalPower) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto w = t::white_noise(100, 5.0, seed);
    double sum = 0.0;
    for (const auto& b : kBands) sum += band_power(w, b);
    const auto psd = t::naive_psd(w, 100.0);
    const double all = t::naive_band_power(psd, 1.0, 0.0, 50.0, true);
    EXPECT_LE(sum, all * 1.02);
  }
}

TEST(Mav, Basics) {
  EXPECT_EQ(mav(std::vector<double>(10, -7.0)), 7.0);
  EXPECT_EQ(mav(std::vector<double>{3, -3, 3, -3}), 3.0);
  const auto s = t::sine(100, 100.0, 10.0, 40.0);
  EXPECT_NEAR(mav(s), t::naive_mav(s), 1e-12);
  // 2*40/pi = 25.46 in continuous time; ten samples per cycle give 24.62.
  EXPECT_NEAR(mav(s), 80.0 / std::numbers::pi, 1.0);
}

TEST(Round1, HalfAwayFromZero) {
  EXPECT_EQ(round1(12.34), 12.3);
  EXPECT_EQ(round1(0.25), 0.3);
  EXPECT_EQ(round1(-0.25), -0.3);
  EXPECT_EQ(round1(-100.0), -100.0);
}

TEST(EpochDescriptors, ZeroEpoch) {
  const auto f = epoch_descriptors(Epoch{});
  for (const auto& ch : f.rows) {
    for (const auto& row : ch) {
      for (int b = 0; b < 4; ++b) EXPECT_EQ(row[b], -100.0);
      EXPECT_EQ(row[4], 0.0);
    }
  }
  for (double v : f.chin_mav) EXPECT_EQ(v, 0.0);
}

TEST(EpochDescriptors, ChannelIndependence) {
  const Epoch ep = synth::synthesize_epoch({{{Channel::O2M1, synth::Waveform::Sine, 0, 30, 10, 40}}, 0});
  const auto f = epoch_descriptors(ep);
  for (std::size_t s = 0; s < 30; ++s) {
    EXPECT_GT(f.rows[2][s][2], 20.0);
    EXPECT_EQ(f.rows[0][s][2], -100.0);
    EXPECT_EQ(f.rows[4][s][4], 0.0);
  }
}

TEST(EpochDescriptors, MatchesIndependentOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Epoch ep = t::random_epoch(seed);
    const auto f = epoch_descriptors_raw(ep);
    for (std::size_t ci = 0; ci < 5; ++ci) {
      const auto ch = ep.channel(kMontage[ci]);
      for (std::size_t s = 0; s < 30; ++s) {
        const auto w = ch.subspan(s * 100, 100);
        for (std::size_t b = 0; b < 4; ++b) {
          ASSERT_NEAR(f.rows[ci][s][b], oracle_db(w, kBands[b]), 1e-6);
        }
        ASSERT_NEAR(f.rows[ci][s][4], t::naive_mav(w), 1e-6);
      }
    }
  }
}

TEST(Phase1Target, ZeroFrameSerialization) {
  const std::string json = serialize_phase1_target(epoch_descriptors(Epoch{}));
  EXPECT_NE(json.find("\"Chin\":[[0.0],[0.0]"), std::string::npos);
  EXPECT_NE(json.find("\"F4-M1\":[[-100.0,-100.0,-100.0,-100.0,0.0]"), std::string::npos);
  EXPECT_EQ(json.find('\n'), std::string::npos);
  EXPECT_EQ(json.find("-0.0"), std::string::npos);
}

TEST(Phase1Target, PrintsOneDecimal) {
  DescriptorFrame f;
  f.present[index_of(Channel::F4M1)] = true;
  f.rows[0][0] = {12.34, -0.04, 7.0, 1e3, 0.05};
  const std::string json = serialize_phase1_target(f);
  EXPECT_EQ(json.rfind("{\"F4-M1\":[[12.3,0.0,7.0,1000.0,0.1],", 0), 0u) << json;
  EXPECT_EQ(json.find("Chin"), std::string::npos);
}

TEST(Phase1Target, RoundTripIsLossless) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto f = epoch_descriptors(t::random_epoch(100 + seed));
    const auto text = serialize_phase1_target(f);
    EXPECT_EQ(parse_phase1_target(text), f);
    EXPECT_EQ(serialize_phase1_target(parse_phase1_target(text)), text);
  }
}

TEST(Phase1Target, RejectsBadShapes) {
  EXPECT_THROW(parse_phase1_target("[]"), FormatError);
  EXPECT_THROW(parse_phase1_target("{\"Fz\":[]}"), FormatError);
  EXPECT_THROW(parse_phase1_target("{\"Chin\":[[1.0]]}"), FormatError);
}
