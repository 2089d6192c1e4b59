#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace rps {

// Opens an output CSV with the scenario digest stamped in a header comment.
// All floating point is written with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& digest, const std::string& columns);

  template <typename... Ts>
  void row(Ts... vals) {
    bool first = true;
    (write_field(vals, std::exchange(first, false)), ...);
    os_ << "\n";
  }

 private:
  template <typename T>
  void write_field(T v, bool first) {
    if (!first) os_ << ",";
    os_ << v;
  }

  std::ofstream os_;
};

void write_manifest(const std::string& path, const nlohmann::json& content);

}  // namespace rps
