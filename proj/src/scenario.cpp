#include "rps/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rps {

using nlohmann::json;

std::string strip_json_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false, escape = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (escape)
        escape = false;
      else if (c == '\\')
        escape = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
      if (i < text.size()) out += '\n';
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      i += 2;
      while (i + 1 < text.size() && !(text[i] == '*' && text[i + 1] == '/')) {
        if (text[i] == '\n') out += '\n';  // keep line numbers for errors
        ++i;
      }
      ++i;
      continue;
    }
    out += c;
  }
  return out;
}

std::string content_digest(const std::string& text) {
  // FNV-1a, 64 bit.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ScenarioError("scenario: unknown key '" + key + "' in " + where);
  }
}

double get_num(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw ScenarioError(std::string("scenario: ") + key + " must be a number");
  return j[key].get<double>();
}

std::array<Complex, 3> parse_polarization(const json& j, const std::string& where) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "perpendicular") return perpendicular_polarization();
    if (s == "pi") return {Complex(0.0), Complex(1.0), Complex(0.0)};
    if (s == "sigma_plus") return {Complex(0.0), Complex(0.0), Complex(1.0)};
    if (s == "sigma_minus") return {Complex(1.0), Complex(0.0), Complex(0.0)};
    throw ScenarioError("scenario: unknown polarization '" + s + "' in " + where);
  }
  if (j.is_array() && j.size() == 3) {
    std::array<Complex, 3> p;
    for (size_t i = 0; i < 3; ++i) {
      if (j[i].is_number())
        p[i] = Complex(j[i].get<double>(), 0.0);
      else if (j[i].is_array() && j[i].size() == 2)
        p[i] = Complex(j[i][0].get<double>(), j[i][1].get<double>());
      else
        throw ScenarioError("scenario: bad polarization component in " + where);
    }
    return p;
  }
  throw ScenarioError("scenario: bad polarization in " + where);
}

LaserField parse_laser(const json& j, Transition tr, const std::string& where) {
  check_keys(j, where, {"rabi_mhz", "detuning_mhz", "polarization"});
  LaserField f;
  f.transition = tr;
  f.rabi_peak = mhz_to_radns(get_num(j, "rabi_mhz", 0.0));
  f.detuning = mhz_to_radns(get_num(j, "detuning_mhz", 0.0));
  if (j.contains("polarization"))
    f.polarization = parse_polarization(j["polarization"], where);
  else
    f.polarization = perpendicular_polarization();
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("scenario: " + where + ": " + e.what());
  }
  return f;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(strip_json_comments(text));
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: parse error: ") + e.what());
  }
  check_keys(root, "root",
             {"atom", "lasers", "sequence", "detectors", "simulation", "analysis", "outputs"});

  Scenario sc;
  sc.digest = content_digest(text);

  if (root.contains("atom")) {
    const json& a = root["atom"];
    check_keys(a, "atom",
               {"gamma_p_mhz", "branching_s", "b_field_gauss", "g_s", "g_p", "g_d",
                "beat_override_mhz"});
    sc.atom.gamma_P = mhz_to_radns(get_num(a, "gamma_p_mhz", 24.0));
    sc.atom.branching_S = get_num(a, "branching_s", 0.936);
    sc.atom.b_field_gauss = get_num(a, "b_field_gauss", 0.0);
    sc.atom.g.g_S = get_num(a, "g_s", 2.0);
    sc.atom.g.g_P = get_num(a, "g_p", 2.0 / 3.0);
    sc.atom.g.g_D = get_num(a, "g_d", 4.0 / 5.0);
    if (a.contains("beat_override_mhz") && !a["beat_override_mhz"].is_null())
      sc.atom.beat_override_mhz = a["beat_override_mhz"].get<double>();
    try {
      sc.atom.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("scenario: atom: ") + e.what());
    }
  }

  if (root.contains("lasers")) {
    const json& l = root["lasers"];
    check_keys(l, "lasers", {"blue", "ir"});
    if (l.contains("blue"))
      sc.lasers.push_back(parse_laser(l["blue"], Transition::Blue397, "lasers.blue"));
    if (l.contains("ir"))
      sc.lasers.push_back(parse_laser(l["ir"], Transition::Ir866, "lasers.ir"));
  }

  if (!root.contains("sequence")) throw ScenarioError("scenario: missing 'sequence'");
  {
    const json& s = root["sequence"];
    check_keys(s, "sequence",
               {"phases", "repetition_period_ns", "leakage", "switching_edge_ns"});
    if (!s.contains("phases") || !s["phases"].is_array() || s["phases"].size() != 3)
      throw ScenarioError("scenario: sequence.phases must list the three phases");
    for (size_t i = 0; i < 3; ++i) {
      const json& p = s["phases"][i];
      check_keys(p, "sequence.phases", {"duration_ns", "blue", "ir"});
      sc.sequence.phases[i].duration = get_num(p, "duration_ns", 0.0);
      sc.sequence.phases[i].blue_scale = get_num(p, "blue", 0.0);
      sc.sequence.phases[i].ir_scale = get_num(p, "ir", 0.0);
    }
    sc.sequence.repetition_period = get_num(s, "repetition_period_ns", 0.0);
    if (s.contains("leakage")) {
      const json& lk = s["leakage"];
      check_keys(lk, "sequence.leakage", {"fraction", "duration_ns"});
      sc.sequence.leakage.fraction = get_num(lk, "fraction", 0.0);
      sc.sequence.leakage.duration = get_num(lk, "duration_ns", 0.0);
    }
    sc.sequence.switching_edge = get_num(s, "switching_edge_ns", 10.0);
    try {
      sc.sequence.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("scenario: sequence: ") + e.what());
    }
  }

  if (root.contains("detectors")) {
    if (!root["detectors"].is_array()) throw ScenarioError("scenario: detectors must be an array");
    for (const json& d : root["detectors"]) {
      check_keys(d, "detectors",
                 {"efficiency", "dark_rate_per_ns", "gates_ns", "jitter_sigma_ns",
                  "resolution_ns"});
      DetectorModel det;
      det.efficiency = get_num(d, "efficiency", 1.0);
      det.dark_rate = get_num(d, "dark_rate_per_ns", 0.0);
      det.jitter_sigma = get_num(d, "jitter_sigma_ns", 0.0);
      det.resolution = get_num(d, "resolution_ns", 1.0);
      if (d.contains("gates_ns")) {
        for (const json& g : d["gates_ns"]) {
          if (!g.is_array() || g.size() != 2)
            throw ScenarioError("scenario: detectors.gates_ns entries must be [start, end]");
          det.gates.push_back({g[0].get<double>(), g[1].get<double>()});
        }
      }
      try {
        det.validate(sc.sequence.repetition_period);
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("scenario: detectors.gate_windows: ") + e.what());
      }
      sc.detectors.push_back(det);
    }
  }

  if (root.contains("simulation")) {
    const json& s = root["simulation"];
    check_keys(s, "simulation", {"dt_ns", "seed", "n_sequences"});
    sc.simulation.dt = get_num(s, "dt_ns", 2.0);
    if (s.contains("seed")) sc.simulation.seed = s["seed"].get<uint64_t>();
    if (s.contains("n_sequences")) sc.simulation.n_sequences = s["n_sequences"].get<uint64_t>();
    if (!(sc.simulation.dt > 0.0)) throw ScenarioError("scenario: simulation.dt_ns must be > 0");
  }

  if (root.contains("analysis")) {
    const json& a = root["analysis"];
    check_keys(a, "analysis",
               {"bin_ns", "tau_max_ns", "fit_window_ns", "overlap", "central_window_ns",
                "t_grid_step_ns", "scan_intensities"});
    sc.analysis.bin = get_num(a, "bin_ns", 10.0);
    sc.analysis.tau_max = get_num(a, "tau_max_ns", 2000.0);
    sc.analysis.overlap = get_num(a, "overlap", 1.0);
    sc.analysis.central_window = get_num(a, "central_window_ns", -1.0);
    sc.analysis.t_grid_step = get_num(a, "t_grid_step_ns", 20.0);
    if (a.contains("fit_window_ns")) {
      const json& w = a["fit_window_ns"];
      if (!w.is_array() || w.size() != 2)
        throw ScenarioError("scenario: analysis.fit_window_ns must be [a, b]");
      sc.analysis.fit_window_a = w[0].get<double>();
      sc.analysis.fit_window_b = w[1].get<double>();
    }
    if (a.contains("scan_intensities"))
      for (const json& v : a["scan_intensities"])
        sc.analysis.scan_intensities.push_back(v.get<double>());
    if (sc.analysis.overlap < 0.0 || sc.analysis.overlap > 1.0)
      throw ScenarioError("scenario: analysis.overlap outside [0,1]");
  }

  if (root.contains("outputs")) {
    const json& o = root["outputs"];
    check_keys(o, "outputs", {"directory", "formats"});
    if (o.contains("directory")) sc.outputs.directory = o["directory"].get<std::string>();
    if (o.contains("formats")) {
      sc.outputs.formats.clear();
      for (const json& f : o["formats"]) {
        const std::string s = f.get<std::string>();
        if (s != "csv" && s != "binary")
          throw ScenarioError("scenario: outputs.formats entries must be csv or binary");
        sc.outputs.formats.push_back(s);
      }
    }
  }
  return sc;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ScenarioError("scenario: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scenario_text(ss.str());
}

}  // namespace rps
