#pragma once

#include <string>
#include <vector>

#include "rps/atom.hpp"
#include "rps/detector.hpp"
#include "rps/sequence.hpp"

namespace rps {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulationConfig {
  double dt = 2.0;  // ns, population sample spacing
  uint64_t seed = 1;
  uint64_t n_sequences = 10000;
};

struct AnalysisConfig {
  double bin = 10.0;       // histogram bin, ns
  double tau_max = 2000.0;  // correlation delay range, ns
  double fit_window_a = -1.0;  // ns from phase III start; negative: automatic
  double fit_window_b = -1.0;
  double overlap = 1.0;          // squared polarization cosine at the splitter
  double central_window = -1.0;  // half width of the contrast window; negative: T1/2
  double t_grid_step = 20.0;     // emission-time grid step for regression, ns
  std::vector<double> scan_intensities;  // relative IR intensities for scan-rate
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats = {"csv"};
};

struct Scenario {
  AtomModel atom;
  std::vector<LaserField> lasers;
  PulseSequence sequence;
  std::vector<DetectorModel> detectors;
  SimulationConfig simulation;
  AnalysisConfig analysis;
  OutputConfig outputs;
  std::string digest;  // content hash of the scenario file
};

// Parses a scenario file: JSON with // and /* */ comments stripped. Config
// frequencies are ordinary MHz and times ns; converted to rad/ns internally.
// Unknown keys and invariant violations raise ScenarioError naming the key.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

std::string strip_json_comments(const std::string& text);
std::string content_digest(const std::string& text);

}  // namespace rps
