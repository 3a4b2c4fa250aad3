#include "opfkit/scenarios.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include "opfkit/network_io.hpp"

namespace opfkit {
namespace {

TEST(Scenarios, PresetNames) {
  for (Preset p : {Preset::kPaperPeak, Preset::kWorstCase, Preset::kBadCase}) {
    EXPECT_EQ(parse_preset(preset_name(p)), p);
  }
  EXPECT_FALSE(parse_preset("peak"));
}

TEST(Scenarios, BundledFeederShapes) {
  const Network n47 = bundled_network("sce47");
  EXPECT_EQ(n47.bus_count(), 42u);
  EXPECT_EQ(n47.merges().size(), 5u);
  EXPECT_EQ(n47.bus(0).id, 1);
  const Network n56 = bundled_network("sce56");
  EXPECT_EQ(n56.bus_count(), 56u);
  EXPECT_TRUE(n56.merges().empty());
  EXPECT_THROW(bundled_network("ieee13"), ModelError);
}

TEST(Scenarios, CounterexampleData) {
  const Network net = bundled_network("twobus_counterexample");
  ASSERT_EQ(net.bus_count(), 2u);
  EXPECT_DOUBLE_EQ(net.v0(), 1.0);
  EXPECT_DOUBLE_EQ(net.bus(1).v_min, 0.9);
  EXPECT_DOUBLE_EQ(net.bus(1).v_max, 1.1);
  EXPECT_EQ(net.line(0).z(), Complex(0.1, 0.2));
  EXPECT_EQ(net.bus_box(1), (InjectionBox{0.0, 1.0, 0.0, 0.0}));
}

TEST(Scenarios, DataDirectoryMatchesBundledFiles) {
  for (const BundledFile& f : bundled_files()) {
    EXPECT_EQ(read_text_file(std::string(OPFKIT_DATA_DIR) + "/" + f.name), f.text) << f.name;
  }
}

TEST(Scenarios, StubIsNotANetwork) {
  for (const BundledFile& f : bundled_files()) {
    if (f.name != "ieee13_stub.json") continue;
    EXPECT_THROW(parse_network(f.text), ModelError);
    const auto j = nlohmann::json::parse(f.text);
    EXPECT_EQ(j.at("status"), "stub");
    EXPECT_FALSE(j.at("adjustment_procedure").empty());
    EXPECT_EQ(j.at("topology").size(), 12u);
  }
}

TEST(Scenarios, WorstCaseRelaxesLoadsOnly) {
  const Network net = bundled_network("sce47");
  const Network worst = apply_preset(net, Preset::kWorstCase);
  EXPECT_EQ(apply_preset(net, Preset::kBadCase), net);
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    ASSERT_EQ(worst.bus(i).devices.size(), net.bus(i).devices.size());
    for (std::size_t d = 0; d < net.bus(i).devices.size(); ++d) {
      const Device& before = net.bus(i).devices[d];
      const Device& after = worst.bus(i).devices[d];
      if (before.role != DeviceRole::kLoad) {
        EXPECT_EQ(after, before);
        continue;
      }
      const InjectionBox b = injection_box(before.set);
      EXPECT_EQ(injection_box(after.set), (InjectionBox{b.p_lo, 0.0, b.q_lo, 0.0}));
    }
  }
}

TEST(Scenarios, PeakPoint) {
  const Network net = bundled_network("sce47");
  const BusVector s = peak_operating_point(net);
  // bus 47: 1.8 Mvar capacitor, no load
  const std::size_t i = net.index_of_checked(47);
  EXPECT_NEAR(s[i].real(), 0.0, 1e-15);
  EXPECT_NEAR(s[i].imag(), 1.8, 1e-15);
  // bus 2 carries the 1.5 MW unit merged from bus 13
  EXPECT_NEAR(s[net.index_of_checked(2)].real(), 1.5, 1e-15);
  EXPECT_EQ(s[0], Complex(0.0, 0.0));
}

TEST(Scenarios, SamplesStayInsideSets) {
  std::mt19937_64 rng(11);
  const Network net = apply_preset(bundled_network("sce56"), Preset::kWorstCase);
  for (int trial = 0; trial < 100; ++trial) {
    const BusVector s = sample_injections(net, rng);
    for (std::size_t i = 1; i < net.bus_count(); ++i) {
      const InjectionBox b = net.bus_box(i);
      EXPECT_GE(s[i].real(), b.p_lo - 1e-15);
      EXPECT_LE(s[i].real(), b.p_hi + 1e-15);
      EXPECT_GE(s[i].imag(), b.q_lo - 1e-15);
      EXPECT_LE(s[i].imag(), b.q_hi + 1e-15);
    }
  }
}

TEST(Scenarios, SamplingUnboundedSetThrows) {
  NetworkData d;
  Bus b;
  b.id = 1;
  b.v_min = 0.9;
  b.devices.push_back({BoxInjection{-kInf, 0.0, 0.0, 0.0}, DeviceRole::kGeneric});
  d.buses = {b};
  d.lines = {{0, 1, 0.01, 0.01}};
  const Network net = Network::assemble(d);
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_injections(net, rng), ModelError);
}

}  // namespace
}  // namespace opfkit
