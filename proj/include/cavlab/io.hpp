#pragma once
// On-disk formats.
//
// CAVM matrix block (all integers little-endian), 32-byte header:
//   offset 0   4 bytes  magic "CAVM"
//   offset 4   u16      version = 1
//   offset 6   u8       dtype = 0 (f64)
//   offset 7   u8       flags = 0
//   offset 8   u64      rows
//   offset 16  u64      cols
//   offset 24  u64      reserved = 0
//   offset 32  rows*cols little-endian f64, row-major
//
// A dataset is a pair of files sharing a base path: <base>.cavm holds the
// d x n matrix and <base>.json the sidecar {"labels": [...], "layer": "...",
// "seed": N, ...}.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavlab/linalg.hpp"

namespace cavlab::io {

using json = nlohmann::json;

inline constexpr std::size_t kCavmHeaderBytes = 32;

void write_cavm(std::ostream& out, const Matrix& m);
Matrix read_cavm(std::istream& in);
void write_cavm_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_cavm_file(const std::filesystem::path& path);

/// Matrix + integer labels + free-form metadata.
struct Dataset {
  Matrix data;
  std::vector<int> labels;
  std::string layer;
  json meta = json::object();
};

/// Strips a trailing ".cavm" or ".json" so either file names the dataset.
std::filesystem::path dataset_base(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& base, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& base);

/// Dataset view of +-1 labeled activations (and back, validating labels).
Dataset to_dataset(const LabeledActivations& acts, std::uint64_t seed);
LabeledActivations to_activations(const Dataset& ds);

void write_json_file(const std::filesystem::path& path, const json& doc);
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// 17 significant digits ("%.17g"), so the value round-trips exactly.
std::string format_double(double v);

/// CSV with a header row and ',' separators.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& add(double v);
  CsvWriter& add(long long v);
  CsvWriter& add(const std::string& v);
  void end_row();
  const std::string& str() const noexcept { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string text_;
};

}  // namespace cavlab::io
