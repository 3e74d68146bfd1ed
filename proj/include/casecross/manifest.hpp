#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "casecross/errors.hpp"
#include "casecross/version.hpp"

namespace casecross {

// FNV-1a 64-bit digest of a file's bytes, as 16 hex characters.
inline std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open file for digest: " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

// Record of one CLI run: command, resolved parameters, input digests, seed
// and duration, written as `manifest.txt` into the output directory so any
// run can be replayed exactly.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  bool uses_seed = false;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::string> input_files;
  double wall_seconds = 0.0;

  void add_param(const std::string& key, const std::string& value) {
    parameters.emplace_back(key, value);
  }

  void write(const std::filesystem::path& out_dir) const {
    std::ofstream out(out_dir / "manifest.txt");
    if (!out) throw data_error("cannot write manifest in " + out_dir.string());
    out << "command = " << command << '\n';
    out << "version = " << kVersion << '\n';
    if (uses_seed) out << "seed = " << seed << '\n';
    for (const auto& [k, v] : parameters) out << "param." << k << " = " << v << '\n';
    for (const auto& f : input_files) out << "input." << f << " = " << fnv1a64_file(f) << '\n';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", wall_seconds);
    out << "duration_seconds = " << buf << '\n';
  }
};

}  // namespace casecross
