#include "opfkit/network_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace opfkit {

namespace {

using nlohmann::json;

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ModelError(where + ": missing \"" + key + "\"");
  const json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return kInf;
    if (s == "-inf" || s == "-infinity") return -kInf;
  }
  throw ModelError(where + ": \"" + key + "\" must be a number");
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

int integer(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw ModelError(where + ": \"" + key + "\" must be an integer");
  }
  return j.at(key).get<int>();
}

json bound(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

CostFunction parse_cost(const json& j, const std::string& where) {
  const std::string kind = j.value("kind", std::string("linear"));
  if (kind == "linear") return LinearCost{number_or(j, "a", 0.0, where), number_or(j, "b", 0.0, where)};
  if (kind == "quadratic") {
    return QuadraticCost{number_or(j, "a2", 0.0, where), number_or(j, "a1", 0.0, where),
                         number_or(j, "a0", 0.0, where)};
  }
  throw ModelError(where + ": unknown cost kind \"" + kind + "\"");
}

json cost_json(const CostFunction& f) {
  if (const auto* l = std::get_if<LinearCost>(&f)) {
    return {{"kind", "linear"}, {"a", l->a}, {"b", l->b}};
  }
  const auto& q = std::get<QuadraticCost>(f);
  return {{"kind", "quadratic"}, {"a2", q.a2}, {"a1", q.a1}, {"a0", q.a0}};
}

DeviceRole parse_role(const std::string& s, const std::string& where) {
  if (s == "load") return DeviceRole::kLoad;
  if (s == "capacitor") return DeviceRole::kCapacitor;
  if (s == "pv") return DeviceRole::kPv;
  if (s == "generic") return DeviceRole::kGeneric;
  throw ModelError(where + ": unknown role \"" + s + "\"");
}

Device parse_device(const json& j, const std::optional<BaseSystem>& base, const std::string& where) {
  if (!j.is_object()) throw ModelError(where + ": injection must be an object");
  const std::string kind = j.value("kind", std::string());
  const std::string unit = j.value("unit", std::string("pu"));
  double scale = 1.0;
  if (unit == "mva") {
    if (!base) throw ModelError(where + ": unit \"mva\" needs a base block");
    scale = 1.0 / base->s_base_mva;
  } else if (unit != "pu") {
    throw ModelError(where + ": unknown injection unit \"" + unit + "\"");
  }
  const auto val = [&](const char* key) { return scale * number(j, key, where); };

  Device d;
  if (kind == "fixed") {
    if (j.contains("s_peak")) {
      const double s = val("s_peak");
      const double pf = number_or(j, "pf", 0.97, where);
      if (!(pf > 0.0 && pf <= 1.0)) throw ModelError(where + ": pf must lie in (0, 1]");
      d.set = FixedInjection{Complex(-pf * s, -std::sqrt(1.0 - pf * pf) * s)};
      d.role = DeviceRole::kLoad;
    } else {
      const Complex s(val("p"), val("q"));
      d.set = FixedInjection{s};
      d.role = (s.real() <= 0.0 && s.imag() <= 0.0) ? DeviceRole::kLoad : DeviceRole::kGeneric;
    }
  } else if (kind == "box") {
    d.set = BoxInjection{val("p_lo"), val("p_hi"), val("q_lo"), val("q_hi")};
  } else if (kind == "capacitor") {
    d.set = CapacitorInjection{val("q_cap")};
    d.role = DeviceRole::kCapacitor;
  } else if (kind == "inverter_pv") {
    d.set = InverterPvInjection{val("p_cap"), val("s_cap")};
    d.role = DeviceRole::kPv;
  } else if (kind == "constant_pf") {
    d.set = ConstantPfInjection{val("p_lo"), val("p_hi"), number(j, "eta", where)};
  } else {
    throw ModelError(where + ": unknown injection kind \"" + kind + "\"");
  }
  if (j.contains("role")) d.role = parse_role(j.at("role").get<std::string>(), where);
  return d;
}

json device_json(const Device& d) {
  json j;
  j["kind"] = injection_kind(d.set);
  j["role"] = role_name(d.role);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FixedInjection>) {
          j["p"] = s.s.real();
          j["q"] = s.s.imag();
        } else if constexpr (std::is_same_v<T, BoxInjection>) {
          j["p_lo"] = bound(s.p_lo);
          j["p_hi"] = bound(s.p_hi);
          j["q_lo"] = bound(s.q_lo);
          j["q_hi"] = bound(s.q_hi);
        } else if constexpr (std::is_same_v<T, CapacitorInjection>) {
          j["q_cap"] = s.q_cap;
        } else if constexpr (std::is_same_v<T, InverterPvInjection>) {
          j["p_cap"] = s.p_cap;
          j["s_cap"] = s.s_cap;
        } else {
          j["p_lo"] = s.p_lo;
          j["p_hi"] = s.p_hi;
          j["eta"] = s.eta;
        }
      },
      d.set);
  return j;
}

// Squared value from either a magnitude key or a squared key.
double squared(const json& j, const char* mag_key, const char* sq_key, double fallback,
               const std::string& where) {
  if (j.contains(mag_key) && j.contains(sq_key)) {
    throw ModelError(where + ": give only one of \"" + mag_key + "\" and \"" + sq_key + "\"");
  }
  if (j.contains(sq_key)) return number(j, sq_key, where);
  if (j.contains(mag_key)) {
    const double m = number(j, mag_key, where);
    return m * m;
  }
  return fallback;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

Network parse_network(std::string_view json_text) {
  const json root = parse_json(json_text);
  if (!root.is_object()) throw ModelError("network file must be a JSON object");
  try {
    NetworkData data;
    if (root.contains("base")) {
      const json& b = root.at("base");
      data.base = BaseSystem{number(b, "v_base_kv", "base"), number(b, "s_base_mva", "base")};
      if (!(data.base->v_base_kv > 0.0) || !(data.base->s_base_mva > 0.0)) {
        throw ModelError("base values must be positive");
      }
    }
    std::optional<CostFunction> root_cost;
    if (root.contains("substation")) {
      const json& s = root.at("substation");
      data.substation_id = s.contains("id") ? integer(s, "id", "substation") : 0;
      data.v0 = squared(s, "v0_pu", "v0_sq", 1.0, "substation");
      if (s.contains("cost")) root_cost = parse_cost(s.at("cost"), "substation");
    }
    if (!root.contains("buses") || !root.at("buses").is_array()) {
      throw ModelError("missing \"buses\" array");
    }
    bool root_listed = false;
    for (const json& jb : root.at("buses")) {
      Bus b;
      b.id = integer(jb, "id", "bus");
      const std::string where = "bus " + std::to_string(b.id);
      b.v_min = squared(jb, "vmin_pu", "vmin_sq", 0.0, where);
      b.v_max = squared(jb, "vmax_pu", "vmax_sq", kInf, where);
      if (jb.contains("injection") && jb.contains("injections")) {
        throw ModelError(where + ": give only one of \"injection\" and \"injections\"");
      }
      if (jb.contains("injection")) b.devices.push_back(parse_device(jb.at("injection"), data.base, where));
      if (jb.contains("injections")) {
        for (const json& d : jb.at("injections")) b.devices.push_back(parse_device(d, data.base, where));
      }
      if (b.id == data.substation_id) {
        root_listed = true;
        if (jb.contains("cost")) {
          if (root_cost) throw ModelError("substation cost given twice");
          root_cost = parse_cost(jb.at("cost"), where);
        }
        b.cost = root_cost.value_or(LinearCost{1.0, 0.0});
      } else if (jb.contains("cost")) {
        b.cost = parse_cost(jb.at("cost"), where);
      }
      data.buses.push_back(std::move(b));
    }
    if (!root_listed) {
      Bus b;
      b.id = data.substation_id;
      b.cost = root_cost.value_or(LinearCost{1.0, 0.0});
      data.buses.push_back(std::move(b));
    }
    if (!root.contains("lines") || !root.at("lines").is_array()) {
      throw ModelError("missing \"lines\" array");
    }
    for (const json& jl : root.at("lines")) {
      RawLine l;
      l.from = integer(jl, "from", "line");
      l.to = integer(jl, "to", "line");
      const std::string where = "line " + std::to_string(l.from) + "-" + std::to_string(l.to);
      l.r = number(jl, "r", where);
      l.x = number(jl, "x", where);
      const std::string unit = jl.value("unit", std::string("pu"));
      if (unit == "ohm") {
        if (!data.base) throw ModelError(where + ": unit \"ohm\" needs a base block");
        l.r /= data.base->z_base();
        l.x /= data.base->z_base();
      } else if (unit != "pu") {
        throw ModelError(where + ": unknown unit \"" + unit + "\"");
      }
      data.lines.push_back(l);
    }
    return Network::assemble(std::move(data));
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid network JSON: ") + e.what());
  }
}

Network load_network(const std::string& path) { return parse_network(read_text_file(path)); }

std::string network_to_json(const Network& net) {
  json root;
  if (net.base()) {
    root["base"] = {{"v_base_kv", net.base()->v_base_kv}, {"s_base_mva", net.base()->s_base_mva}};
  }
  root["substation"] = {{"id", net.bus(0).id}, {"v0_sq", net.v0()}, {"cost", cost_json(net.bus(0).cost)}};
  json buses = json::array();
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    const Bus& b = net.bus(i);
    json jb;
    jb["id"] = b.id;
    if (i != 0) {
      jb["vmin_sq"] = bound(b.v_min);
      jb["vmax_sq"] = bound(b.v_max);
      jb["cost"] = cost_json(b.cost);
    }
    json devices = json::array();
    for (const Device& d : b.devices) devices.push_back(device_json(d));
    jb["injections"] = devices;
    buses.push_back(jb);
  }
  root["buses"] = buses;
  json lines = json::array();
  for (const Line& l : net.lines()) {
    lines.push_back({{"from", net.bus(l.parent).id},
                     {"to", net.bus(l.child).id},
                     {"r", l.r},
                     {"x", l.x},
                     {"unit", "pu"}});
  }
  root["lines"] = lines;
  return root.dump(2) + "\n";
}

BusVector parse_injections(const Network& net, std::string_view json_text) {
  const json root = parse_json(json_text);
  if (!root.is_array()) throw ModelError("injection file must be a JSON array");
  BusVector s(net.bus_count(), Complex(0.0, 0.0));
  std::set<std::size_t> seen;
  try {
    for (const json& e : root) {
      const int id = integer(e, "bus", "injection entry");
      const std::string where = "injection for bus " + std::to_string(id);
      const std::size_t i = net.index_of_checked(id);
      if (i == 0) throw ModelError(where + ": substation injection is not an input");
      if (!seen.insert(i).second) throw ModelError(where + ": listed twice");
      s[i] += Complex(number(e, "p", where), number(e, "q", where));
    }
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid injection JSON: ") + e.what());
  }
  return s;
}

BusVector load_injections(const Network& net, const std::string& path) {
  return parse_injections(net, read_text_file(path));
}

std::string injections_to_json(const Network& net, const BusVector& s) {
  check_bus_vector(net, s, "injections");
  json out = json::array();
  for (std::size_t i = 1; i < net.bus_count(); ++i) {
    out.push_back({{"bus", net.bus(i).id}, {"p", s[i].real()}, {"q", s[i].imag()}});
  }
  return out.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write " + path);
  out << text;
  if (!out) throw ModelError("write failed: " + path);
}

}  // namespace opfkit
