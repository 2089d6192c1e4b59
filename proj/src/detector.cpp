#include "rps/detector.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rps {

namespace {

double quantize(double t, double resolution) {
  return std::floor(t / resolution) * resolution;
}

void sort_records(std::vector<TimeTagRecord>& r) {
  std::sort(r.begin(), r.end(), [](const TimeTagRecord& a, const TimeTagRecord& b) {
    if (a.sequence_index != b.sequence_index) return a.sequence_index < b.sequence_index;
    return a.timestamp < b.timestamp;
  });
}

}  // namespace

void DetectorModel::validate(double repetition_period) const {
  if (efficiency < 0.0 || efficiency > 1.0)
    throw std::invalid_argument("DetectorModel: efficiency outside [0,1]");
  if (dark_rate < 0.0) throw std::invalid_argument("DetectorModel: negative dark_rate");
  if (jitter_sigma < 0.0) throw std::invalid_argument("DetectorModel: negative jitter_sigma");
  if (!(resolution > 0.0)) throw std::invalid_argument("DetectorModel: resolution must be > 0");
  std::vector<GateWindow> g = gates;
  std::sort(g.begin(), g.end(), [](const GateWindow& a, const GateWindow& b) { return a.start < b.start; });
  for (size_t i = 0; i < g.size(); ++i) {
    if (g[i].end <= g[i].start || g[i].start < 0.0 || g[i].end > repetition_period)
      throw std::invalid_argument("DetectorModel: gate_windows outside [0, repetition_period)");
    if (i > 0 && g[i].start < g[i - 1].end)
      throw std::invalid_argument("DetectorModel: gate_windows overlap");
  }
}

bool DetectorModel::gated(double t, double period) const {
  if (t < 0.0 || t >= period) return false;
  if (gates.empty()) return true;
  for (const auto& g : gates)
    if (t >= g.start && t < g.end) return true;
  return false;
}

double DetectorModel::gated_time(double period) const {
  if (gates.empty()) return period;
  double total = 0.0;
  for (const auto& g : gates) total += g.end - g.start;
  return total;
}

TimeTagStream detect(const std::vector<EmissionEvent>& events, const DetectorModel& det,
                     uint64_t seed, uint64_t total_sequences, double repetition_period,
                     int detector_id, const std::string& digest) {
  det.validate(repetition_period);
  TimeTagStream out;
  out.detector_id = detector_id;
  out.total_sequences = total_sequences;
  out.repetition_period = repetition_period;
  out.resolution = det.resolution;
  out.config_digest = digest;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (const auto& ev : events) {
    if (!ev.detected) continue;
    // Draw both variates unconditionally so that raising the efficiency with
    // the same seed only adds records (coupled uniforms).
    const double u = uni(rng);
    const double z = gauss(rng);
    if (u >= det.efficiency) continue;
    double t = ev.time + det.jitter_sigma * z;
    t = quantize(t, det.resolution);
    if (!det.gated(t, repetition_period)) continue;
    out.records.push_back({ev.sequence_index, t});
  }

  if (det.dark_rate > 0.0) {
    std::mt19937_64 dark_rng(seed ^ 0xdeadbeefcafef00dULL);
    std::vector<GateWindow> gates = det.gates;
    if (gates.empty()) gates.push_back({0.0, repetition_period});
    for (uint64_t s = 0; s < total_sequences; ++s) {
      for (const auto& g : gates) {
        std::poisson_distribution<int> pois(det.dark_rate * (g.end - g.start));
        const int n = pois(dark_rng);
        for (int k = 0; k < n; ++k) {
          const double t = quantize(g.start + uni(rng) * (g.end - g.start), det.resolution);
          if (det.gated(t, repetition_period))
            out.records.push_back({static_cast<uint32_t>(s), t});
        }
      }
    }
  }

  sort_records(out.records);
  return out;
}

std::pair<TimeTagStream, TimeTagStream> split_hbt(const TimeTagStream& stream, uint64_t seed) {
  TimeTagStream a = stream, b = stream;
  a.detector_id = 0;
  b.detector_id = 1;
  a.records.clear();
  b.records.clear();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (const auto& r : stream.records) {
    if (uni(rng) < 0.5)
      a.records.push_back(r);
    else
      b.records.push_back(r);
  }
  return {std::move(a), std::move(b)};
}

void write_stream_csv(std::ostream& os, const TimeTagStream& s) {
  os << "# digest=" << s.config_digest << "\n";
  os.precision(17);
  os << "# total_sequences=" << s.total_sequences << " repetition_period_ns=" << s.repetition_period
     << " resolution_ns=" << s.resolution << "\n";
  os << "detector_id,sequence_index,timestamp_ns\n";
  for (const auto& r : s.records)
    os << s.detector_id << "," << r.sequence_index << "," << r.timestamp << "\n";
}

TimeTagStream read_stream_csv(std::istream& is) {
  TimeTagStream s;
  std::string line;
  bool header_done = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "digest") s.config_digest = val;
        if (key == "total_sequences") s.total_sequences = std::stoull(val);
        if (key == "repetition_period_ns") s.repetition_period = std::stod(val);
        if (key == "resolution_ns") s.resolution = std::stod(val);
      }
      continue;
    }
    if (!header_done) {  // column header row
      header_done = true;
      continue;
    }
    std::istringstream ls(line);
    std::string f0, f1, f2;
    if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',') || !std::getline(ls, f2))
      throw std::runtime_error("stream CSV: malformed row: " + line);
    s.detector_id = std::stoi(f0);
    s.records.push_back({static_cast<uint32_t>(std::stoul(f1)), std::stod(f2)});
  }
  return s;
}

namespace {
constexpr uint32_t kStreamMagic = 0x54535052;  // "RPST"

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
}  // namespace

void write_stream_binary(std::ostream& os, const TimeTagStream& s) {
  put<uint32_t>(os, kStreamMagic);
  put<uint32_t>(os, 1);  // version
  put<int32_t>(os, s.detector_id);
  put<uint64_t>(os, s.total_sequences);
  put<double>(os, s.repetition_period);
  put<double>(os, s.resolution);
  put<uint32_t>(os, static_cast<uint32_t>(s.config_digest.size()));
  os.write(s.config_digest.data(), static_cast<std::streamsize>(s.config_digest.size()));
  put<uint64_t>(os, s.records.size());
  for (const auto& r : s.records) {
    put<uint32_t>(os, r.sequence_index);
    put<uint64_t>(os, static_cast<uint64_t>(std::llround(r.timestamp / s.resolution)));
  }
}

TimeTagStream read_stream_binary(std::istream& is) {
  if (get<uint32_t>(is) != kStreamMagic) throw std::runtime_error("stream binary: bad magic");
  if (get<uint32_t>(is) != 1) throw std::runtime_error("stream binary: unknown version");
  TimeTagStream s;
  s.detector_id = get<int32_t>(is);
  s.total_sequences = get<uint64_t>(is);
  s.repetition_period = get<double>(is);
  s.resolution = get<double>(is);
  const uint32_t dlen = get<uint32_t>(is);
  s.config_digest.resize(dlen);
  is.read(s.config_digest.data(), dlen);
  const uint64_t n = get<uint64_t>(is);
  s.records.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    const uint32_t seq = get<uint32_t>(is);
    const uint64_t ticks = get<uint64_t>(is);
    s.records.push_back({seq, static_cast<double>(ticks) * s.resolution});
  }
  if (!is) throw std::runtime_error("stream binary: truncated");
  return s;
}

}  // namespace rps
