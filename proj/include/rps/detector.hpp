#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rps/jumps.hpp"

namespace rps {

struct GateWindow {
  double start = 0.0;  // ns within the sequence period
  double end = 0.0;
};

struct DetectorModel {
  double efficiency = 1.0;   // collection x coupling x quantum efficiency
  double dark_rate = 0.0;    // counts/ns inside gates
  std::vector<GateWindow> gates;  // empty: whole period is gated on
  double jitter_sigma = 0.0;  // ns, Gaussian timing smear
  double resolution = 1.0;    // ns, timestamp quantization (floor)

  void validate(double repetition_period) const;
  bool gated(double t, double period) const;
  double gated_time(double period) const;
};

struct TimeTagRecord {
  uint32_t sequence_index;
  double timestamp;  // ns within the period, quantized to resolution
};

struct TimeTagStream {
  int detector_id = 0;
  std::vector<TimeTagRecord> records;  // sorted by (sequence_index, timestamp)
  uint64_t total_sequences = 0;
  double repetition_period = 0.0;
  double resolution = 1.0;
  std::string config_digest;
};

// Applies efficiency thinning, jitter, quantization, gating and dark counts
// to the detected-flag events. Seed-deterministic.
TimeTagStream detect(const std::vector<EmissionEvent>& events, const DetectorModel& det,
                     uint64_t seed, uint64_t total_sequences, double repetition_period,
                     int detector_id = 0, const std::string& digest = {});

// 50/50 beam-splitter routing of one stream onto two detectors (ids 0 and 1).
std::pair<TimeTagStream, TimeTagStream> split_hbt(const TimeTagStream& stream, uint64_t seed);

void write_stream_csv(std::ostream& os, const TimeTagStream& s);
TimeTagStream read_stream_csv(std::istream& is);
void write_stream_binary(std::ostream& os, const TimeTagStream& s);
TimeTagStream read_stream_binary(std::istream& is);

}  // namespace rps
