#include "opfkit/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace opfkit {

std::optional<Preset> parse_preset(std::string_view name) {
  if (name == "paper-peak") return Preset::kPaperPeak;
  if (name == "worst-case") return Preset::kWorstCase;
  if (name == "bad-case") return Preset::kBadCase;
  return std::nullopt;
}

const char* preset_name(Preset preset) {
  switch (preset) {
    case Preset::kPaperPeak:
      return "paper-peak";
    case Preset::kWorstCase:
      return "worst-case";
    case Preset::kBadCase:
      break;
  }
  return "bad-case";
}

Network apply_preset(const Network& net, Preset preset) {
  if (preset != Preset::kWorstCase) return net;
  std::vector<std::vector<Device>> devices;
  for (const Bus& b : net.buses()) {
    std::vector<Device> out;
    for (const Device& d : b.devices) {
      if (d.role != DeviceRole::kLoad) {
        out.push_back(d);
        continue;
      }
      const InjectionBox box = injection_box(d.set);
      out.push_back({BoxInjection{std::min(box.p_lo, 0.0), 0.0, std::min(box.q_lo, 0.0), 0.0},
                     DeviceRole::kLoad});
    }
    devices.push_back(std::move(out));
  }
  return net.with_devices(devices);
}

namespace {

Complex peak_point(const Device& d) {
  if (const auto* f = std::get_if<FixedInjection>(&d.set)) return f->s;
  if (const auto* c = std::get_if<CapacitorInjection>(&d.set)) return {0.0, c->q_cap};
  if (const auto* v = std::get_if<InverterPvInjection>(&d.set)) {
    return {std::min(v->p_cap, v->s_cap), 0.0};
  }
  if (const auto* c = std::get_if<ConstantPfInjection>(&d.set)) {
    return {c->p_hi, c->q_ratio() * c->p_hi};
  }
  const auto& b = std::get<BoxInjection>(d.set);
  if (!std::isfinite(b.p_hi)) throw ModelError("peak point undefined for unbounded box");
  return {b.p_hi, std::clamp(0.0, b.q_lo, b.q_hi)};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw ModelError("cannot sample an unbounded injection set");
  }
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Complex sample_device(const Device& d, std::mt19937_64& rng) {
  if (const auto* f = std::get_if<FixedInjection>(&d.set)) return f->s;
  if (const auto* b = std::get_if<BoxInjection>(&d.set)) {
    return {uniform(rng, b->p_lo, b->p_hi), uniform(rng, b->q_lo, b->q_hi)};
  }
  if (const auto* c = std::get_if<CapacitorInjection>(&d.set)) {
    return {0.0, std::bernoulli_distribution(0.5)(rng) ? c->q_cap : 0.0};
  }
  if (const auto* c = std::get_if<ConstantPfInjection>(&d.set)) {
    const double p = uniform(rng, c->p_lo, c->p_hi);
    return {p, c->q_ratio() * p};
  }
  const auto& v = std::get<InverterPvInjection>(d.set);
  if (v.s_cap == 0.0) return {0.0, 0.0};
  const double p_max = std::min(v.p_cap, v.s_cap);
  for (;;) {
    const double p = uniform(rng, 0.0, p_max);
    const double q = uniform(rng, -v.s_cap, v.s_cap);
    if (p * p + q * q <= v.s_cap * v.s_cap) return {p, q};
  }
}

}  // namespace

BusVector peak_operating_point(const Network& net) {
  BusVector s(net.bus_count(), Complex(0.0, 0.0));
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    for (const Device& d : net.bus(i).devices) s[i] += peak_point(d);
  }
  return s;
}

BusVector sample_injections(const Network& net, std::mt19937_64& rng) {
  BusVector s(net.bus_count(), Complex(0.0, 0.0));
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    for (const Device& d : net.bus(i).devices) s[i] += sample_device(d, rng);
  }
  return s;
}

}  // namespace opfkit
