#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "opfkit/certificate.hpp"
#include "opfkit/lindistflow.hpp"
#include "opfkit/network_io.hpp"
#include "opfkit/powerflow.hpp"
#include "opfkit/scenarios.hpp"
#include "opfkit/socp.hpp"
#include "opfkit/solution_io.hpp"

namespace opfkit::cli {

namespace {

using nlohmann::json;

json num(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return round_significant(x);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string g(double x) { return fmt("%.6g", x); }

void emit(const RunConfig& cfg, Streams io, const json& j, const std::string& text) {
  if (cfg.format == Format::kJson) {
    io.out << j.dump(2) << "\n";
  } else {
    io.out << text;
  }
}

Preset preset_or(const RunConfig& cfg, Preset fallback) {
  if (!cfg.preset) return fallback;
  const std::optional<Preset> p = parse_preset(*cfg.preset);
  if (!p) throw std::invalid_argument("unknown preset \"" + *cfg.preset + "\"");
  return *p;
}

SolveSettings solve_settings(const RunConfig& cfg) {
  SolveSettings s;
  s.conic.feas_tol = cfg.feas_tol;
  s.conic.gap_tol = cfg.gap_tol;
  s.conic.max_iter = cfg.max_iter;
  s.exact_tol = cfg.exact_tol;
  return s;
}

Variant variant_of(const RunConfig& cfg) {
  const std::optional<Variant> v = parse_variant(cfg.variant);
  if (!v) throw std::invalid_argument("unknown variant \"" + cfg.variant + "\"");
  return *v;
}

ObjectiveKind objective_of(const RunConfig& cfg) {
  const std::optional<ObjectiveKind> o = parse_objective(cfg.objective);
  if (!o) throw std::invalid_argument("unknown objective \"" + cfg.objective + "\"");
  return *o;
}

int id(const Network& net, std::size_t bus) { return net.bus(bus).id; }

json line_key(const Network& net, std::size_t k) {
  return {{"child", id(net, net.line(k).child)}, {"parent", id(net, net.line(k).parent)}};
}

json point_json(const Network& net, const BranchFlowPoint& w) {
  json buses = json::array();
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    buses.push_back({{"id", id(net, i)},
                     {"p", num(w.s[i].real())},
                     {"q", num(w.s[i].imag())},
                     {"v", num(w.v[i])}});
  }
  json lines = json::array();
  const std::vector<double> gap = relative_gap(net, w);
  for (std::size_t k = 0; k < net.line_count(); ++k) {
    json l = line_key(net, k);
    l["P"] = num(w.S[k].real());
    l["Q"] = num(w.S[k].imag());
    l["ell"] = num(w.ell[k]);
    l["gap"] = num(gap[k]);
    lines.push_back(l);
  }
  return {{"buses", buses}, {"lines", lines}};
}

json feasibility_json(const FeasibilityReport& f) {
  return {{"voltage_drop", num(f.voltage_drop)}, {"power_balance", num(f.power_balance)},
          {"voltage_lower", num(f.voltage_lower)}, {"voltage_upper", num(f.voltage_upper)},
          {"linear_upper", num(f.linear_upper)},   {"cone", num(f.cone)},
          {"injection", num(f.injection)}};
}

BusVector operating_point(const RunConfig& cfg, const Network& net) {
  if (!cfg.injections.empty()) return load_injections(net, cfg.injections);
  return peak_operating_point(net);
}

}  // namespace

int cmd_validate(const RunConfig& cfg, const std::string& net_path, Streams io) {
  Network net;
  try {
    net = load_network(net_path);
  } catch (const std::exception& e) {
    emit(cfg, io, {{"valid", false}, {"error", e.what()}}, std::string("invalid: ") + e.what() + "\n");
    return 2;
  }
  int max_depth = 0, leaves = 0, devices = 0;
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    max_depth = std::max(max_depth, net.depth(i));
    leaves += net.children(i).empty() ? 1 : 0;
    devices += static_cast<int>(net.bus(i).devices.size());
  }
  if (!cfg.output.empty()) write_text_file(cfg.output, network_to_json(net));
  json merges = json::array();
  std::string text = "valid\n";
  for (const MergeRecord& m : net.merges()) {
    merges.push_back({{"kept", m.kept_id}, {"removed", m.removed_id}});
    text += "  merged bus " + std::to_string(m.removed_id) + " into bus " + std::to_string(m.kept_id) +
            " (zero impedance)\n";
  }
  text += "  buses " + std::to_string(net.bus_count()) + ", lines " + std::to_string(net.line_count()) +
          ", depth " + std::to_string(max_depth) + ", leaves " + std::to_string(leaves) + ", devices " +
          std::to_string(devices) + "\n";
  emit(cfg, io,
       {{"valid", true},
        {"buses", net.bus_count()},
        {"lines", net.line_count()},
        {"depth", max_depth},
        {"leaves", leaves},
        {"devices", devices},
        {"merges", merges}},
       text);
  return 0;
}

int cmd_conditions(const RunConfig& cfg, const std::string& net_path, Streams io) {
  const Preset preset = preset_or(cfg, Preset::kBadCase);
  const Network net = apply_preset(load_network(net_path), preset);
  const Interval rx = rx_range(net);
  json j = {{"preset", preset_name(preset)},
            {"rx_range", {num(rx.lo), num(rx.hi)}}};
  std::string text = "preset " + std::string(preset_name(preset)) + "\n";
  text += "  range of r/x      [" + g(rx.lo) + ", " + g(rx.hi) + "]\n";

  ConditionReport rep;
  try {
    rep = check_c1(net);
  } catch (const NotCheckableError& e) {
    j["checkable"] = false;
    j["c1_holds"] = false;
    j["reason"] = e.what();
    emit(cfg, io, j, text + "  C1 not checkable: " + e.what() + "\n");
    return 1;
  }
  j["checkable"] = true;
  j["c1_holds"] = rep.holds;
  j["min_interval"] = {{"lo", num(rep.min_interval.lo)},
                       {"hi", num(rep.min_interval.hi)},
                       {"lo_bus", id(net, rep.lo_bus)},
                       {"hi_bus", id(net, rep.hi_bus)}};
  j["interval_covers_range"] = rep.interval_covers;
  json lines = json::array();
  std::string failing;
  for (const LineCondition& c : rep.lines) {
    json l = line_key(net, c.line);
    l["rx"] = num(c.rx);
    l["margin_r"] = num(c.margin_r);
    l["margin_x"] = num(c.margin_x);
    l["holds"] = c.holds;
    lines.push_back(l);
    if (!c.holds) {
      failing += "    line " + std::to_string(id(net, net.line(c.line).child)) + "-" +
                 std::to_string(id(net, net.line(c.line).parent)) + "  r/x " + g(c.rx) + "  margins " +
                 g(c.margin_r) + ", " + g(c.margin_x) + "\n";
    }
  }
  j["lines"] = lines;

  const SufficientConditions sc = check_sufficient_conditions(net);
  j["sufficient"] = {{"no_reverse_flow", sc.no_reverse_flow},
                     {"uniform_ratio", sc.uniform_ratio},
                     {"ratio_rising_p", sc.ratio_rising_p},
                     {"ratio_falling_q", sc.ratio_falling_q},
                     {"load_over_satisfaction", sc.load_over_satisfaction}};
  int well = 0;
  for (const WellConstrainedLine& w : check_well_constrained(net)) well += w.well_constrained ? 1 : 0;
  j["well_constrained_lines"] = well;

  text += "  minimum interval  (" + g(rep.min_interval.lo) + ", " + g(rep.min_interval.hi) + ")  buses " +
          std::to_string(id(net, rep.lo_bus)) + ", " + std::to_string(id(net, rep.hi_bus)) + "\n";
  text += "  interval covers r/x range: " + std::string(rep.interval_covers ? "yes" : "no") + "\n";
  text += "  per-line C1: " + std::string(rep.holds ? "holds" : "fails") + "\n" + failing;
  text += "  well-constrained lines " + std::to_string(well) + "/" + std::to_string(net.line_count()) + "\n";
  emit(cfg, io, j, text);
  return rep.holds ? 0 : 1;
}

int cmd_solve(const RunConfig& cfg, const std::string& net_path, Streams io) {
  const Preset preset = preset_or(cfg, Preset::kBadCase);
  const Network net = apply_preset(load_network(net_path), preset);
  const Variant variant = variant_of(cfg);
  const ObjectiveKind objective = objective_of(cfg);
  RelaxationResult r;
  if (cfg.enumerate_capacitors) {
    r = solve_capacitor_enumeration(net, variant, objective, solve_settings(cfg)).result;
  } else {
    r = solve_relaxation(net, variant, objective, solve_settings(cfg));
  }
  if (r.status != ConicStatus::kOptimal) {
    io.err << "solver status: " << status_name(r.status) << "\n";
    return 2;
  }
  const std::string doc = solution_to_json(net, r, variant, objective, cfg.exact_tol);
  if (!cfg.output.empty()) {
    write_text_file(cfg.output, doc);
  }
  if (cfg.format == Format::kJson) {
    if (cfg.output.empty()) io.out << doc;
  } else {
    io.out << variant_name(variant) << " / " << objective_name(objective) << ": " << status_name(r.status)
           << " in " << r.raw.iterations << " iterations\n"
           << "  objective " << fmt("%.9g", r.objective) << "\n"
           << "  max relative gap " << g(r.max_gap) << "\n"
           << "  " << (r.exact ? "exact" : "not exact") << "\n";
    if (cfg.output.empty()) io.out << doc;
  }
  return r.exact ? 0 : 1;
}

int cmd_epsilon(const RunConfig& cfg, const std::string& net_path, Streams io) {
  if (!cfg.injections.empty() && cfg.samples > 0) {
    throw std::invalid_argument("give either --injections or --samples, not both");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Preset preset = preset_or(cfg, Preset::kPaperPeak);
  const Network net = apply_preset(load_network(net_path), preset);
  EpsilonResult e;
  std::string policy;
  if (cfg.samples > 0) {
    e = epsilon_sampled(net, cfg.samples, cfg.seed);
    policy = "samples";
  } else if (!cfg.injections.empty()) {
    e = epsilon_metric(net, operating_point(cfg, net));
    policy = "injections";
  } else {
    if (preset == Preset::kWorstCase) {
      throw std::invalid_argument("worst-case preset has no single operating point; use --samples");
    }
    e = epsilon_metric(net, peak_operating_point(net));
    policy = "preset";
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double tightened = net.bus(e.bus).v_max - e.epsilon;
  json per_bus = json::array();
  for (std::size_t i = 0; i < e.per_bus.size(); ++i) {
    per_bus.push_back({{"id", id(net, i)}, {"deviation", num(e.per_bus[i])}});
  }
  json j = {{"epsilon", num(e.epsilon)},
            {"bus", id(net, e.bus)},
            {"policy", policy},
            {"preset", preset_name(preset)},
            {"samples", e.samples},
            {"tightened_v_max_sq", num(tightened)},
            {"per_bus", per_bus}};
  std::string text = "epsilon " + fmt("%.6f", e.epsilon) + " at bus " + std::to_string(id(net, e.bus)) + " (" +
                     policy + ", " + std::to_string(e.samples) + " point" + (e.samples == 1 ? "" : "s") +
                     ")\n  tightened bound v_max - epsilon = " + fmt("%.6f", tightened) + " (squared pu)\n" +
                     "  " + fmt("%.3f", seconds) + " s\n";
  emit(cfg, io, j, text);
  return 0;
}

int cmd_certify(const RunConfig& cfg, const std::string& net_path, const std::string& solution_path,
                Streams io) {
  const Preset preset = preset_or(cfg, Preset::kBadCase);
  const Network net = apply_preset(load_network(net_path), preset);
  const BranchFlowPoint w = load_solution(net, solution_path);
  const Variant variant = variant_of(cfg);
  const ObjectiveKind objective = objective_of(cfg);

  std::optional<Improvement> imp;
  if (cfg.step) {
    const std::optional<std::size_t> m = find_violating_line(net, w, cfg.exact_tol);
    if (m) {
      imp = Improvement{};
      imp->line = *m;
      imp->step = *cfg.step;
      imp->point = construct_improved_point(net, w, *m, *cfg.step, cfg.exact_tol);
      imp->audit = audit_improvement(net, w, imp->point, variant, objective);
    }
  } else {
    imp = improve_point(net, w, variant, objective, cfg.exact_tol);
  }
  if (!imp) {
    emit(cfg, io, {{"exact", true}, {"max_relative_gap", num(max_relative_gap(net, w))}},
         "point is exact; nothing to improve\n");
    return 1;
  }
  const ImprovementAudit& a = imp->audit;
  json j = {{"exact", false},
            {"line", line_key(net, imp->line)},
            {"cone_slack", num(cone_slack(net, w, imp->line))},
            {"step", num(imp->step)},
            {"halvings", imp->halvings},
            {"audit",
             {{"feasibility", feasibility_json(a.feasibility)},
              {"worst_violation", num(a.worst_violation)},
              {"active_bound_push", num(a.active_bound_push)},
              {"feasible", a.feasible},
              {"injections_unchanged", a.injections_unchanged},
              {"objective_before", num(a.objective_before)},
              {"objective_after", num(a.objective_after)},
              {"delta", num(a.delta)},
              {"improved", a.improved},
              {"accepted", a.accepted()}}},
            {"point", point_json(net, imp->point)}};
  const FeasibilityReport& f = a.feasibility;
  std::string text = "violating line " + std::to_string(id(net, net.line(imp->line).child)) + "-" +
                     std::to_string(id(net, net.line(imp->line).parent)) + ", cone slack " +
                     g(cone_slack(net, w, imp->line)) + "\n";
  if (a.accepted()) {
    text += "  step " + g(imp->step) + " after " + std::to_string(imp->halvings) + " halvings\n";
  } else {
    text += "  no step accepted in " + std::to_string(imp->halvings) + " halvings; full slack " + g(imp->step) +
            " shown\n";
  }
  text += "  voltage_drop  " + g(f.voltage_drop) + "\n  power_balance " + g(f.power_balance) +
          "\n  voltage_lower " + g(f.voltage_lower) + "\n  voltage_upper " + g(f.voltage_upper) +
          "\n  linear_upper  " + g(f.linear_upper) + "\n  cone          " + g(f.cone) + "\n  injection     " +
          g(f.injection) + "\n  active bound push " + g(a.active_bound_push) + "\n";
  text += "  objective " + fmt("%.9g", a.objective_before) + " -> " + fmt("%.9g", a.objective_after) + " (delta " +
          g(a.delta) + ")\n  " + (a.accepted() ? "accepted" : "rejected") + "\n";
  emit(cfg, io, j, text);
  return a.accepted() ? 0 : 2;
}

int cmd_powerflow(const RunConfig& cfg, const std::string& net_path, Streams io) {
  const Network net = load_network(net_path);
  const BusVector s = operating_point(cfg, net);
  const PowerFlowSolution pf = solve_power_flow(net, s);
  BusVector full = s;
  full[0] = pf.s0;
  double residual = 0.0;
  for (const Complex& r : pf_residual(net, pf.voltage, full)) residual = std::max(residual, std::abs(r));
  json buses = json::array();
  std::string text = "converged in " + std::to_string(pf.sweeps) + " sweeps, residual " + g(residual) +
                     "\n  s0 = " + g(pf.s0.real()) + " + " + g(pf.s0.imag()) + "i\n  bus      |V|        angle\n";
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    buses.push_back({{"id", id(net, i)},
                     {"v_mag", num(std::abs(pf.voltage[i]))},
                     {"v_angle_rad", num(std::arg(pf.voltage[i]))}});
    char row[96];
    std::snprintf(row, sizeof row, "  %-6d %10.6f %12.6g\n", id(net, i), std::abs(pf.voltage[i]),
                  std::arg(pf.voltage[i]));
    text += row;
  }
  emit(cfg, io,
       {{"sweeps", pf.sweeps},
        {"residual", num(residual)},
        {"s0", {{"p", num(pf.s0.real())}, {"q", num(pf.s0.imag())}}},
        {"buses", buses}},
       text);
  return 0;
}

int cmd_emit_data(const RunConfig& cfg, Streams io) {
  const std::filesystem::path dir = cfg.output.empty() ? "." : cfg.output;
  std::filesystem::create_directories(dir);
  json written = json::array();
  std::string text;
  for (const BundledFile& f : bundled_files()) {
    const std::string path = (dir / f.name).string();
    write_text_file(path, f.text);
    written.push_back(path);
    text += "wrote " + path + "\n";
  }
  emit(cfg, io, {{"written", written}}, text);
  return 0;
}

}  // namespace opfkit::cli
