#include "trajdiv/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

#include "trajdiv/io_util.hpp"

namespace trajdiv {

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& meta_json) {
  std::ostringstream out;
  out << "trajdiv-checkpoint v1\n";
  out << "meta " << meta_json << "\n";
  out << "params " << params.size() << "\n";
  for (const auto& [name, arr] : params) {
    out << name << " " << arr.rank();
    for (auto d : arr.shape()) out << " " << d;
    out << "\n";
    for (std::size_t i = 0; i < arr.numel(); ++i) {
      if (i) out << " ";
      out << format_double(arr[i]);
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "trajdiv-checkpoint v1") {
    throw std::runtime_error(path + ": not a trajdiv-checkpoint v1 file");
  }
  Checkpoint ck;
  if (!std::getline(in, line) || line.rfind("meta ", 0) != 0) {
    throw std::runtime_error(path + ": missing meta line");
  }
  ck.meta_json = line.substr(5);
  if (!std::getline(in, line) || line.rfind("params ", 0) != 0) {
    throw std::runtime_error(path + ": missing params line");
  }
  const long long count = parse_int(line.substr(7), path);
  for (long long p = 0; p < count; ++p) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated header record");
    std::istringstream hdr(line);
    std::string name;
    std::size_t rank = 0;
    hdr >> name >> rank;
    if (name.empty() || rank < 1 || rank > 2) {
      throw std::runtime_error(path + ": bad parameter header '" + line + "'");
    }
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      if (!(hdr >> d) || d == 0) throw std::runtime_error(path + ": bad shape in '" + line + "'");
      numel *= d;
    }
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated values for " + name);
    std::istringstream vals(line);
    std::vector<double> data(numel);
    for (auto& v : data) {
      if (!(vals >> v)) throw std::runtime_error(path + ": too few values for " + name);
    }
    double extra;
    if (vals >> extra) throw std::runtime_error(path + ": too many values for " + name);
    ck.params.emplace(name, DenseArray(std::move(shape), std::move(data)));
  }
  return ck;
}

}  // namespace trajdiv
