#include "opfkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>

namespace opfkit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string bus_label(int id) { return "bus " + std::to_string(id); }

void validate_device(const Device& d, int bus_id) {
  const auto fail = [&](const std::string& what) {
    throw ModelError(bus_label(bus_id) + ": " + what);
  };
  std::visit(
      Overloaded{
          [&](const FixedInjection& f) {
            if (!std::isfinite(f.s.real()) || !std::isfinite(f.s.imag())) {
              fail("fixed injection must be finite");
            }
          },
          [&](const BoxInjection& b) {
            if (std::isnan(b.p_lo) || std::isnan(b.p_hi) || std::isnan(b.q_lo) ||
                std::isnan(b.q_hi)) {
              fail("box bound is NaN");
            }
            if (b.p_lo > b.p_hi || b.q_lo > b.q_hi) fail("box has lower bound above upper bound");
            if (b.p_lo == kInf || b.p_hi == -kInf || b.q_lo == kInf || b.q_hi == -kInf) {
              fail("box is empty");
            }
          },
          [&](const CapacitorInjection& c) {
            if (!std::isfinite(c.q_cap)) fail("capacitor rating must be finite");
          },
          [&](const InverterPvInjection& v) {
            if (!(v.p_cap >= 0.0) || !(v.s_cap >= 0.0) || !std::isfinite(v.p_cap) ||
                !std::isfinite(v.s_cap)) {
              fail("inverter ratings must be finite and nonnegative");
            }
          },
          [&](const ConstantPfInjection& c) {
            if (!(c.eta > 0.0 && c.eta <= 1.0)) fail("power factor must lie in (0, 1]");
            if (!std::isfinite(c.p_lo) || !std::isfinite(c.p_hi) || c.p_lo > c.p_hi) {
              fail("constant power factor range is invalid");
            }
          },
      },
      d.set);
}

double derivative_lower_bound(const CostFunction& f, double x_min) {
  return std::visit(Overloaded{[](const LinearCost& c) { return c.a; },
                               [&](const QuadraticCost& c) {
                                 if (c.a2 == 0.0) return c.a1;
                                 if (!std::isfinite(x_min)) return -kInf;
                                 return 2.0 * c.a2 * x_min + c.a1;
                               }},
                    f);
}

void validate_cost(const CostFunction& f, int bus_id) {
  std::visit(Overloaded{[&](const LinearCost& c) {
                          if (!std::isfinite(c.a) || !std::isfinite(c.b)) {
                            throw ModelError(bus_label(bus_id) + ": cost must be finite");
                          }
                        },
                        [&](const QuadraticCost& c) {
                          if (!std::isfinite(c.a2) || !std::isfinite(c.a1) ||
                              !std::isfinite(c.a0) || c.a2 < 0.0) {
                            throw ModelError(bus_label(bus_id) +
                                             ": quadratic cost needs finite coefficients, a2 >= 0");
                          }
                        }},
             f);
}

}  // namespace

double ConstantPfInjection::q_ratio() const { return std::sqrt(1.0 - eta * eta) / eta; }

InjectionBox operator+(const InjectionBox& a, const InjectionBox& b) {
  return {a.p_lo + b.p_lo, a.p_hi + b.p_hi, a.q_lo + b.q_lo, a.q_hi + b.q_hi};
}

InjectionBox injection_box(const InjectionSet& set) {
  return std::visit(
      Overloaded{
          [](const FixedInjection& f) {
            return InjectionBox{f.s.real(), f.s.real(), f.s.imag(), f.s.imag()};
          },
          [](const BoxInjection& b) { return InjectionBox{b.p_lo, b.p_hi, b.q_lo, b.q_hi}; },
          [](const CapacitorInjection& c) {
            return InjectionBox{0.0, 0.0, std::min(0.0, c.q_cap), std::max(0.0, c.q_cap)};
          },
          [](const InverterPvInjection& v) {
            return InjectionBox{0.0, std::min(v.p_cap, v.s_cap), -v.s_cap, v.s_cap};
          },
          [](const ConstantPfInjection& c) {
            const double k = c.q_ratio();
            return InjectionBox{c.p_lo, c.p_hi, k * c.p_lo, k * c.p_hi};
          },
      },
      set);
}

ConvexifiedInjection convexify(const InjectionSet& set) {
  if (const auto* cap = std::get_if<CapacitorInjection>(&set)) {
    return {BoxInjection{0.0, 0.0, std::min(0.0, cap->q_cap), std::max(0.0, cap->q_cap)}, true};
  }
  return {set, false};
}

const char* injection_kind(const InjectionSet& set) {
  return std::visit(Overloaded{[](const FixedInjection&) { return "fixed"; },
                               [](const BoxInjection&) { return "box"; },
                               [](const CapacitorInjection&) { return "capacitor"; },
                               [](const InverterPvInjection&) { return "inverter_pv"; },
                               [](const ConstantPfInjection&) { return "constant_pf"; }},
                    set);
}

const char* role_name(DeviceRole role) {
  switch (role) {
    case DeviceRole::kLoad:
      return "load";
    case DeviceRole::kCapacitor:
      return "capacitor";
    case DeviceRole::kPv:
      return "pv";
    case DeviceRole::kGeneric:
      break;
  }
  return "generic";
}

double evaluate(const CostFunction& f, double x) {
  return std::visit(Overloaded{[&](const LinearCost& c) { return c.a * x + c.b; },
                               [&](const QuadraticCost& c) { return (c.a2 * x + c.a1) * x + c.a0; }},
                    f);
}

bool is_zero_cost(const CostFunction& f) {
  return std::visit(Overloaded{[](const LinearCost& c) { return c.a == 0.0 && c.b == 0.0; },
                               [](const QuadraticCost& c) {
                                 return c.a2 == 0.0 && c.a1 == 0.0 && c.a0 == 0.0;
                               }},
                    f);
}

Network Network::assemble(NetworkData data) {
  if (!(data.v0 > 0.0) || !std::isfinite(data.v0)) {
    throw ModelError("substation voltage must be positive");
  }

  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < data.buses.size(); ++i) {
    if (!pos.emplace(data.buses[i].id, i).second) {
      throw ModelError("duplicate " + bus_label(data.buses[i].id));
    }
  }
  if (!pos.count(data.substation_id)) {
    Bus root;
    root.id = data.substation_id;
    root.cost = LinearCost{1.0, 0.0};
    pos.emplace(root.id, data.buses.size());
    data.buses.push_back(root);
  }
  const std::size_t root_pos = pos.at(data.substation_id);
  data.buses[root_pos].v_min = data.v0;
  data.buses[root_pos].v_max = data.v0;

  for (const Bus& b : data.buses) {
    if (b.id != data.substation_id) {
      if (!(b.v_min > 0.0)) throw ModelError(bus_label(b.id) + ": v_min must be positive");
      if (std::isnan(b.v_max) || b.v_min > b.v_max) {
        throw ModelError(bus_label(b.id) + ": v_min exceeds v_max");
      }
    }
    for (const Device& d : b.devices) validate_device(d, b.id);
    validate_cost(b.cost, b.id);
  }

  const std::size_t nb = data.buses.size();
  if (data.lines.size() + 1 != nb) {
    throw ModelError("network is not a tree: " + std::to_string(nb) + " buses, " +
                     std::to_string(data.lines.size()) + " lines");
  }
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nb);
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < data.lines.size(); ++k) {
    const RawLine& l = data.lines[k];
    const std::string tag = "line " + std::to_string(l.from) + "-" + std::to_string(l.to);
    if (!pos.count(l.from) || !pos.count(l.to)) throw ModelError(tag + ": unknown bus");
    if (l.from == l.to) throw ModelError(tag + ": self loop");
    if (!(l.r >= 0.0) || !(l.x >= 0.0) || !std::isfinite(l.r) || !std::isfinite(l.x)) {
      throw ModelError(tag + ": impedance must be finite and nonnegative");
    }
    if (!seen.insert({std::min(l.from, l.to), std::max(l.from, l.to)}).second) {
      throw ModelError(tag + ": duplicate line");
    }
    adj[pos.at(l.from)].push_back({pos.at(l.to), k});
    adj[pos.at(l.to)].push_back({pos.at(l.from), k});
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end(), [&](const auto& u, const auto& v) {
      return data.buses[u.first].id < data.buses[v.first].id;
    });
  }

  // Orient by BFS, then fold zero-impedance children into their parent.
  std::vector<std::size_t> order;
  std::vector<std::ptrdiff_t> parent(nb, -1);
  std::vector<std::size_t> via(nb, 0);
  std::vector<bool> visited(nb, false);
  std::deque<std::size_t> queue{root_pos};
  visited[root_pos] = true;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    order.push_back(u);
    for (const auto& [w, k] : adj[u]) {
      if (visited[w]) continue;
      visited[w] = true;
      parent[w] = static_cast<std::ptrdiff_t>(u);
      via[w] = k;
      queue.push_back(w);
    }
  }
  if (order.size() != nb) throw ModelError("network is disconnected or contains a cycle");

  std::vector<std::size_t> rep(nb);
  std::vector<MergeRecord> merges;
  for (std::size_t u : order) {
    rep[u] = u;
    if (parent[u] < 0) continue;
    const RawLine& l = data.lines[via[u]];
    if (l.r == 0.0 && l.x == 0.0) {
      const std::size_t keep = rep[static_cast<std::size_t>(parent[u])];
      rep[u] = keep;
      Bus& kept = data.buses[keep];
      Bus& gone = data.buses[u];
      merges.push_back({kept.id, gone.id});
      for (Device& d : gone.devices) kept.devices.push_back(std::move(d));
      if (keep != root_pos) {
        kept.v_min = std::max(kept.v_min, gone.v_min);
        kept.v_max = std::min(kept.v_max, gone.v_max);
        if (kept.v_min > kept.v_max) {
          throw ModelError("merging " + bus_label(gone.id) + " into " + bus_label(kept.id) +
                           " leaves empty voltage range");
        }
      }
      if (!is_zero_cost(gone.cost)) {
        if (!is_zero_cost(kept.cost) && keep != root_pos) {
          throw ModelError("cannot merge " + bus_label(gone.id) + " into " + bus_label(kept.id) +
                           ": both carry cost functions");
        }
        if (keep != root_pos) kept.cost = gone.cost;
      }
    }
  }

  // Re-run BFS on the merged tree so that parents precede children.
  std::vector<std::size_t> final_order;
  std::vector<std::size_t> new_index(nb, 0);
  {
    std::vector<std::vector<std::size_t>> kids(nb);
    for (std::size_t u : order) {
      if (parent[u] < 0 || rep[u] != u) continue;
      kids[rep[static_cast<std::size_t>(parent[u])]].push_back(u);
    }
    for (auto& k : kids) {
      std::sort(k.begin(), k.end(),
                [&](std::size_t a, std::size_t b) { return data.buses[a].id < data.buses[b].id; });
    }
    std::deque<std::size_t> q{root_pos};
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop_front();
      new_index[u] = final_order.size();
      final_order.push_back(u);
      for (std::size_t w : kids[u]) q.push_back(w);
    }
  }

  Network net;
  net.base_ = data.base;
  net.v0_ = data.v0;
  net.merges_ = std::move(merges);
  for (std::size_t u : final_order) net.buses_.push_back(std::move(data.buses[u]));
  for (std::size_t i = 1; i < final_order.size(); ++i) {
    const std::size_t u = final_order[i];
    const RawLine& l = data.lines[via[u]];
    net.lines_.push_back(
        Line{i, new_index[rep[static_cast<std::size_t>(parent[u])]], l.r, l.x});
  }
  net.index();

  double p_hi_total = 0.0;
  for (std::size_t i = 1; i < net.bus_count(); ++i) p_hi_total += net.bus_box(i).p_hi;
  if (!(derivative_lower_bound(net.buses_[0].cost, -p_hi_total) > 0.0)) {
    throw ModelError("substation cost must be strictly increasing");
  }
  return net;
}

void Network::index() {
  children_.assign(buses_.size(), {});
  depth_.assign(buses_.size(), 0);
  for (const Line& l : lines_) {
    children_[l.parent].push_back(l.child);
    depth_[l.child] = depth_[l.parent] + 1;
  }
}

std::vector<std::size_t> Network::path_to_root(std::size_t bus) const {
  if (bus >= buses_.size()) throw ModelError("bus index out of range");
  std::vector<std::size_t> path;
  while (bus != 0) {
    path.push_back(line_of(bus));
    bus = lines_[line_of(bus)].parent;
  }
  return path;
}

std::vector<std::size_t> Network::subtree_buses(std::size_t line) const {
  if (line >= lines_.size()) throw ModelError("line index out of range");
  std::vector<std::size_t> out{lines_[line].child};
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t c : children_[out[k]]) out.push_back(c);
  }
  return out;
}

std::optional<std::size_t> Network::index_of(int id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t Network::index_of_checked(int id) const {
  auto i = index_of(id);
  if (!i) throw ModelError("unknown " + bus_label(id));
  return *i;
}

InjectionBox Network::bus_box(std::size_t bus) const {
  InjectionBox box;
  for (const Device& d : buses_.at(bus).devices) box = box + injection_box(d.set);
  return box;
}

Network Network::with_devices(const std::vector<std::vector<Device>>& devices) const {
  if (devices.size() != buses_.size()) throw ModelError("device list size mismatch");
  Network out = *this;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    for (const Device& d : devices[i]) validate_device(d, buses_[i].id);
    out.buses_[i].devices = devices[i];
  }
  return out;
}

Network Network::with_costs(const std::vector<CostFunction>& costs) const {
  if (costs.size() != buses_.size()) throw ModelError("cost list size mismatch");
  Network out = *this;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    validate_cost(costs[i], buses_[i].id);
    out.buses_[i].cost = costs[i];
  }
  return out;
}

bool Network::operator==(const Network& other) const {
  return base_ == other.base_ && v0_ == other.v0_ && buses_ == other.buses_ &&
         lines_ == other.lines_;
}

void check_bus_vector(const Network& net, const BusVector& s, const char* what) {
  if (s.size() != net.bus_count()) {
    throw ModelError(std::string(what) + ": expected " + std::to_string(net.bus_count()) +
                     " entries (substation first), got " + std::to_string(s.size()));
  }
}

}  // namespace opfkit
