#pragma once

// Command-line front end: analyze, locus, split, pm, optimize, compare.
// Exit status 0 on success, 2 for configuration errors, 3 for numeric or
// I/O failures.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "millerpole/config.hpp"
#include "millerpole/error.hpp"
#include "millerpole/feedback.hpp"
#include "millerpole/io.hpp"
#include "millerpole/netlist.hpp"
#include "millerpole/polesplit.hpp"
#include "millerpole/rootlocus.hpp"
#include "millerpole/stability.hpp"

namespace millerpole::cli {

inline constexpr const char* kVersion = "millerpole 0.1.0";

using json = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::optional<Topology> topology;
  std::optional<std::string> config_path;
  std::optional<std::string> out;
  std::optional<std::string> svg;
  std::optional<std::string> sweep;
  bool feedforward = true;
  double tolerance = 0.1;
};

struct SweepSpec {
  std::string key;
  double lo = 0, hi = 0;
  std::size_t n = 0;
};

inline SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--sweep: expected key=lo:hi:n, got '" + text + "'");
  SweepSpec s;
  s.key = text.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (s.key.empty() || parts.size() != 3) throw ConfigError("--sweep: expected key=lo:hi:n, got '" + text + "'");
  s.lo = detail::parse_number("--sweep", parts[0]);
  s.hi = detail::parse_number("--sweep", parts[1]);
  const double n = detail::parse_number("--sweep", parts[2]);
  if (!(s.lo > 0) || !(s.hi > s.lo)) throw ConfigError("--sweep: need 0 < lo < hi");
  if (n < 2 || n != std::floor(n) || n > 1e6) throw ConfigError("--sweep: n must be an integer >= 2");
  s.n = static_cast<std::size_t>(n);
  return s;
}

/// Worker count for sweeps: hardware concurrency, capped by MILLERPOLE_THREADS.
inline unsigned sweep_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MILLERPOLE_THREADS")) {
    const std::string v = env;
    char* end = nullptr;
    const long cap = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || cap < 1) throw ConfigError("MILLERPOLE_THREADS must be a positive integer");
    n = std::min<unsigned>(n, static_cast<unsigned>(std::min<long>(cap, 4096)));
  }
  return n;
}

inline std::map<std::string, double> params_to_map(const CircuitParams& params) {
  std::map<std::string, double> m;
  if (const auto* p = std::get_if<TwoStageParams>(&params)) {
    m = {{"gm", p->gm}, {"R1", p->R1}, {"R2", p->R2}, {"C1", p->C1}, {"C2", p->C2}, {"Cc", p->Cc}};
    if (p->gm0) m["gm0"] = *p->gm0;
  } else if (const auto* p = std::get_if<CurrentBufferParams>(&params)) {
    m = {{"gm", p->gm}, {"gmc", p->gmc}, {"R1", p->R1}, {"R2", p->R2}, {"C1", p->C1}, {"C2", p->C2}, {"Cc", p->Cc}};
    if (p->gm0) m["gm0"] = *p->gm0;
  } else {
    const auto& q = std::get<NmcParams>(params);
    m = {{"gm0", q.gm0}, {"gm1", q.gm1}, {"gm2", q.gm2}, {"R0", q.R0}, {"R1", q.R1}, {"R2", q.R2},
         {"C0", q.C0},   {"C1", q.C1},   {"C2", q.C2},   {"Cc0", q.Cc0}, {"Cc1", q.Cc1}};
    if (q.gm0 == 0) m.erase("gm0");
  }
  return m;
}

// ---------------------------------------------------------------- JSON ----

inline json root_json(cplx r) {
  const double mag = std::abs(r);
  return json{{"re", r.real()}, {"im", r.imag()}, {"rad_s", mag}, {"hz", mag / (2 * std::numbers::pi)}};
}

inline json roots_json(const RootSet& rs) {
  json a = json::array();
  for (const auto& r : rs) a.push_back(root_json(r));
  return a;
}

inline json freq_json(double w) { return json{{"rad_s", w}, {"hz", w / (2 * std::numbers::pi)}}; }

inline json warnings_json(const Warnings& ws) {
  json a = json::array();
  for (const auto& w : ws) a.push_back(json{{"code", w.code}, {"message", w.message}});
  return a;
}

inline json split_json(const SplitResult& s) {
  json j{{"method", std::string(to_string(s.method))}};
  if (s.p_cd) j["p_cd"] = root_json(*s.p_cd);
  if (s.p_cnd.size() == 1) {
    j["p_cnd"] = root_json(s.p_cnd[0]);
  } else if (s.p_cnd.size() == 2) {
    j["p_cnd1"] = root_json(s.p_cnd[0]);
    j["p_cnd2"] = root_json(s.p_cnd[1]);
  }
  if (s.vieta_product) j["vieta_product"] = *s.vieta_product;
  if (s.attraction_estimate) j["attraction_estimate"] = root_json(*s.attraction_estimate);
  j["warnings"] = warnings_json(s.warnings);
  return j;
}

inline json config_json(const RunConfig& cfg) {
  json params = json::object();
  for (const auto& [k, v] : params_to_map(cfg.params)) params[k] = v;
  return json{{"topology", std::string(to_string(cfg.topology))}, {"params", params}};
}

inline json header_json(const std::string& command, const RunConfig& cfg, const Options& opt) {
  return json{{"tool", kVersion},
              {"command", command},
              {"config", config_json(cfg)},
              {"options", json{{"feedforward", opt.feedforward}, {"tolerance", opt.tolerance}}}};
}

inline json report_json(const StabilityReport& r, double tolerance) {
  json j;
  j["scenario"] = r.scenario;
  j["gbw"] = r.gbw ? freq_json(*r.gbw) : json(nullptr);
  j["pm_deg"] = r.pm_deg ? json(*r.pm_deg) : json(nullptr);
  j["pm_numeric_deg"] = r.pm_numeric_deg ? json(*r.pm_numeric_deg) : json(nullptr);
  j["crossover"] = r.crossover ? freq_json(*r.crossover) : json(nullptr);
  j["pm_convention"] = r.convention;
  if (r.damping) {
    j["damping"] = json{{"xi", r.damping->xi}, {"omega_n", freq_json(r.damping->omega_n)}};
  } else {
    j["damping"] = nullptr;
  }
  j["approximate"] = json{{"poles", roots_json(r.approx_poles)}, {"zeros", roots_json(r.approx_zeros)}};
  j["exact"] = json{{"poles", roots_json(r.oracle_poles)}, {"zeros", roots_json(r.oracle_zeros)}};
  json dev = json::array();
  Warnings ws = r.warnings;
  for (const auto& d : r.deviations) {
    dev.push_back(json{{"approximate", root_json(d.approx)}, {"exact", root_json(d.oracle)}, {"relative", d.relative}});
    if (d.relative > tolerance) {
      ws.push_back({"oracle-deviation", "approximate pole deviates from the exact pole by " + io::fmt17(d.relative)});
    }
  }
  j["deviations"] = dev;
  j["annotations"] = r.annotations;
  j["warnings"] = warnings_json(ws);
  return j;
}

inline json decomposition_json(const LoopDecomposition& d) {
  json j;
  j["open_loop_poles"] = roots_json(d.open_poles);
  j["loop_zeros"] = roots_json(d.loop_zeros);
  j["a_zeros"] = roots_json(d.a_zeros);
  j["beta_poles"] = roots_json(d.beta_poles);
  try {
    j["midband"] = midband(d.loop);
  } catch (const Error&) {
    j["midband"] = nullptr;
  }
  return j;
}

template <typename F>
json guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    return json{{"error", e.what()}};
  }
}

inline json split_section(const RunConfig& cfg) {
  json j;
  if (const auto* p = std::get_if<TwoStageParams>(&cfg.params)) {
    j["theorem"] = guarded([&] {
      const auto tp = two_stage_loop(*p);
      json s = split_json(split(tp));
      s["a0b0"] = tp.a0b0;
      s["xi"] = xi_check(tp);
      return s;
    });
    j["p_cnd_rhp_zero_neglected"] = root_json(two_stage_pcnd(*p, false));
    j["p_cnd_textbook"] = root_json(two_stage_pcnd(*p, true));
  } else if (const auto* p = std::get_if<CurrentBufferParams>(&cfg.params)) {
    j["ideal_buffer"] = guarded([&] { return split_json(cb_ideal_split(*p)); });
    j["nondominant_pair"] = split_json(cb_nondominant_pair(*p));
    j["p_o3"] = root_json(cplx{cb_po3(*p)});
    j["z_a"] = root_json(cplx{cb_za(*p)});
  } else {
    const auto& q = std::get<NmcParams>(cfg.params);
    j["theorem"] = guarded([&] {
      const auto tp = nmc_loop(q);
      json s = split_json(split(tp));
      s["a0b0"] = tp.a0b0;
      s["xi"] = xi_check(tp);
      return s;
    });
    j["nondominant_pair"] = split_json(nmc_nondominant_pair(q));
    j["p_o2"] = root_json(cplx{nmc_po2(q)});
    if (q.gm0 > 0) {
      const auto [a, b] = nmc_radical_pair(nmc_po2(q), gbw(cfg.params));
      j["pair_at_design_condition"] = json{{"p_cnd1", root_json(a)}, {"p_cnd2", root_json(b)}};
    }
  }
  return j;
}

// ------------------------------------------------------------ commands ----

inline ReportOptions report_options(const Options& opt) {
  ReportOptions r;
  r.feedforward = opt.feedforward;
  return r;
}

inline std::string cmd_analyze(const RunConfig& cfg, const Options& opt) {
  json j = header_json("analyze", cfg, opt);
  const auto d = decompose(cfg.params);
  j["decomposition"] = decomposition_json(d);
  j["split"] = split_section(cfg);
  j["stability"] = report_json(scenario_report(cfg.params, report_options(opt)), opt.tolerance);
  const auto zin = input_impedance_pz(cfg.params);
  j["input_impedance"] = json{{"dc_ohm", zin.dc}, {"poles", roots_json(zin.poles)}, {"zeros", roots_json(zin.zeros)}};
  return j.dump(2) + "\n";
}

inline std::string cmd_split(const RunConfig& cfg, const Options& opt) {
  json j = header_json("split", cfg, opt);
  j["split"] = split_section(cfg);
  return j.dump(2) + "\n";
}

inline std::string cmd_pm(const RunConfig& cfg, const Options& opt) {
  json j = header_json("pm", cfg, opt);
  try {
    (void)gbw(cfg.params);
  } catch (const Error& e) {
    throw ConfigError(std::string(e.what()) + " (set gm0)");
  }
  const auto r = scenario_report(cfg.params, report_options(opt));
  json s = report_json(r, opt.tolerance);
  j["pm"] = json{{"gbw", s["gbw"]},
                 {"pm_deg", s["pm_deg"]},
                 {"pm_numeric_deg", s["pm_numeric_deg"]},
                 {"crossover", s["crossover"]},
                 {"damping", s["damping"]},
                 {"scenario", s["scenario"]},
                 {"pm_convention", s["pm_convention"]},
                 {"warnings", s["warnings"]}};
  return j.dump(2) + "\n";
}

inline std::string cmd_optimize(const RunConfig& cfg, const Options& opt) {
  const auto* p = std::get_if<CurrentBufferParams>(&cfg.params);
  if (!p) throw ConfigError("optimize applies to the current-buffer topology only");
  const auto o = optimize_gmc(*p, report_options(opt));
  json j = header_json("optimize", cfg, opt);
  j["gmc_opt"] = o.gmc;
  j["distance_to_z_a"] = o.distance;
  j["warnings"] = warnings_json(o.warnings);
  j["report"] = report_json(o.report, opt.tolerance);
  return j.dump(2) + "\n";
}

inline std::string table_row(const std::string& label, cplx r, std::optional<cplx> ref) {
  char buf[160];
  if (ref) {
    std::snprintf(buf, sizeof buf, "%-28s %24.17g %24.17g %12.4e\n", label.c_str(), r.real(), r.imag(),
                  std::abs(r - *ref) / std::abs(*ref));
  } else {
    std::snprintf(buf, sizeof buf, "%-28s %24.17g %24.17g %12s\n", label.c_str(), r.real(), r.imag(), "-");
  }
  return buf;
}

inline std::string cmd_compare(const RunConfig& cfg, const Options& opt) {
  std::string out = std::string(kVersion) + " compare " + std::string(to_string(cfg.topology)) + "\n";
  char head[160];
  std::snprintf(head, sizeof head, "%-28s %24s %24s %12s\n", "pole", "re [rad/s]", "im [rad/s]", "rel. dev.");
  out += head;
  if (const auto* p = std::get_if<TwoStageParams>(&cfg.params)) {
    const RootSet exact = roots(exact_transimpedance(cfg.params).den());
    const auto d = decompose_two_stage(*p);
    const RootSet approx = roots(close_loop(d, false).den());
    const cplx oracle = exact.back();
    out += table_row("exact (oracle)", oracle, std::nullopt);
    out += table_row("rhp zero neglected", two_stage_pcnd(*p, false), oracle);
    out += table_row("textbook", two_stage_pcnd(*p, true), oracle);
    out += table_row("approx closed loop root", approx.back(), oracle);
    out += table_row("rhp zero neglected vs approx", two_stage_pcnd(*p, false), approx.back());
    out += table_row("textbook vs approx", two_stage_pcnd(*p, true), approx.back());
    return out;
  }
  const auto r = scenario_report(cfg.params, report_options(opt));
  int i = 0;
  for (const auto& dv : r.deviations) {
    const std::string tag = dv.relative <= opt.tolerance ? "" : " (off)";
    out += table_row("exact #" + std::to_string(i), dv.oracle, std::nullopt);
    out += table_row("approx #" + std::to_string(i) + tag, dv.approx, dv.oracle);
    ++i;
  }
  return out;
}

inline RationalFunction reference_loop(const RunConfig& cfg, bool feedforward) {
  const auto d = decompose(cfg.params);
  return feedforward && d.a_ff ? feedforward_loop(d) : d.loop;
}

inline std::string cmd_locus(const RunConfig& cfg, const Options& opt) {
  const SweepSpec sw = parse_sweep(opt.sweep.value_or("k=1e-3:1e3:200"));
  SweepOptions so;
  so.threads = sweep_threads();
  LocusTrajectory t;
  RootSet marks_x, marks_o;
  if (sw.key == "k") {
    const auto form = locus_form(reference_loop(cfg, opt.feedforward));
    t = sweep(form.loop_hat, sw.lo, sw.hi, sw.n, form.rule, so);
    marks_x = roots(form.loop_hat.den());
    if (form.loop_hat.num().degree() >= 1) marks_o = roots(form.loop_hat.num());
  } else {
    auto base = params_to_map(cfg.params);
    if (!base.count(sw.key)) {
      throw ConfigError("--sweep: unknown key '" + sw.key + "' for " + std::string(to_string(cfg.topology)));
    }
    const Topology top = cfg.topology;
    const bool ff = opt.feedforward;
    t = track(
        [&, base](double g) mutable {
          base[sw.key] = g;
          const RunConfig c{top, params_from_section(top, base)};
          const auto loop = reference_loop(c, ff);
          return Polynomial(loop.den() + loop.num());
        },
        sw.lo, sw.hi, sw.n, so);
    marks_x = t.at(0);
  }
  if (opt.svg) io::write_atomic(*opt.svg, io::locus_svg(t, marks_x, marks_o));
  return io::locus_csv(t);
}

// ----------------------------------------------------------------- run ----

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Two-port feedback analysis of Miller-compensated amplifiers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  Options opt;
  std::string topology, feedforward = "on";

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analyze", "full JSON report: decomposition, split poles, stability, exact poles"},
      {"locus", "root-locus trajectory as CSV (optionally SVG)"},
      {"split", "pole-splitting results as JSON"},
      {"pm", "GBW and phase margin as JSON"},
      {"optimize", "optimum buffer transconductance (current-buffer only)"},
      {"compare", "approximate vs exact nondominant poles as a text table"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--topology", topology, "two-stage | current-buffer | nmc");
    sub->add_option("--config", opt.config_path, "parameter deck (TOML-style or JSON)");
    sub->add_option("--out", opt.out, "output file (default: standard output)");
    sub->add_option("--svg", opt.svg, "SVG plot of the locus");
    sub->add_option("--sweep", opt.sweep, "sweep spec key=lo:hi:n; key k scales the loop gain");
    sub->add_option("--feedforward", feedforward, "on | off: keep the RHP zero of the two-stage amplifier")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--tolerance", opt.tolerance, "relative deviation allowed between approximate and exact poles")
        ->check(CLI::PositiveNumber);
    sub->callback([&opt, name = name] { opt.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  opt.feedforward = feedforward == "on";

  try {
    if (!topology.empty()) {
      try {
        opt.topology = parse_topology(topology);
      } catch (const Error&) {
        throw ConfigError("--topology: unknown tag '" + topology + "'");
      }
    }
    if (opt.svg && opt.command != "locus") throw ConfigError("--svg applies to the locus command only");
    if (opt.sweep && opt.command != "locus") throw ConfigError("--sweep applies to the locus command only");
    RunConfig cfg;
    if (opt.config_path) {
      cfg = load_config(*opt.config_path, opt.topology);
    } else {
      if (!opt.topology) throw ConfigError("--topology is required when no --config is given");
      cfg = {*opt.topology, default_params(*opt.topology)};
    }

    std::string text;
    if (opt.command == "analyze") text = cmd_analyze(cfg, opt);
    else if (opt.command == "locus") text = cmd_locus(cfg, opt);
    else if (opt.command == "split") text = cmd_split(cfg, opt);
    else if (opt.command == "pm") text = cmd_pm(cfg, opt);
    else if (opt.command == "optimize") text = cmd_optimize(cfg, opt);
    else text = cmd_compare(cfg, opt);

    if (opt.out) {
      io::write_atomic(*opt.out, text);
    } else {
      out << text;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "millerpole: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "millerpole: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "millerpole: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace millerpole::cli
