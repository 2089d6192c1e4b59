#include "rps/csvio.hpp"

#include <stdexcept>

namespace rps {

CsvWriter::CsvWriter(const std::string& path, const std::string& digest,
                     const std::string& columns) {
  os_.open(path);
  if (!os_) throw std::runtime_error("cannot open output file " + path);
  os_.precision(17);
  os_ << "# digest=" << digest << "\n";
  os_ << columns << "\n";
}

void write_manifest(const std::string& path, const nlohmann::json& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file " + path);
  os << content.dump(2) << "\n";
}

}  // namespace rps
