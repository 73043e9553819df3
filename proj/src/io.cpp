#include "cavlab/io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cavlab/error.hpp"
#include "cavlab/rng.hpp"

namespace cavlab::io {

namespace {

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw Error(ErrorCode::Format, "CAVM: truncated header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void write_cavm(std::ostream& out, const Matrix& m) {
  out.write("CAVM", 4);
  put_le(out, 1, 2);
  put_le(out, 0, 1);
  put_le(out, 0, 1);
  put_le(out, m.rows(), 8);
  put_le(out, m.cols(), 8);
  put_le(out, 0, 8);
  for (double v : m.values()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  if (!out) throw Error(ErrorCode::Io, "CAVM: write failed");
}

Matrix read_cavm(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || std::memcmp(magic.data(), "CAVM", 4) != 0)
    throw Error(ErrorCode::Format, "CAVM: bad magic");
  const auto version = get_le(in, 2);
  const auto dtype = get_le(in, 1);
  const auto flags = get_le(in, 1);
  if (version != 1) throw Error(ErrorCode::Format, "CAVM: unsupported version " + std::to_string(version));
  if (dtype != 0) throw Error(ErrorCode::Format, "CAVM: unsupported dtype " + std::to_string(dtype));
  if (flags != 0) throw Error(ErrorCode::Format, "CAVM: unsupported flags");
  const auto rows = get_le(in, 8);
  const auto cols = get_le(in, 8);
  get_le(in, 8);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    throw Error(ErrorCode::Format, "CAVM: implausible shape");
  std::vector<double> values(rows * cols);
  std::vector<unsigned char> raw(values.size() * 8);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw Error(ErrorCode::Format, "CAVM: truncated payload");
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return Matrix(rows, cols, std::move(values));
}

void write_cavm_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  write_cavm(out, m);
}

Matrix read_cavm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open: " + path.string());
  return read_cavm(in);
}

std::filesystem::path dataset_base(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".cavm" || ext == ".json") {
    auto base = path;
    base.replace_extension();
    return base;
  }
  return path;
}

namespace {
std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  return std::filesystem::path(base.string() + suffix);
}
}  // namespace

void write_dataset(const std::filesystem::path& base_in, const Dataset& ds) {
  const auto base = dataset_base(base_in);
  if (ds.labels.size() != ds.data.cols())
    throw Error(ErrorCode::DimensionMismatch, "dataset labels vs columns");
  json side = ds.meta;
  side["labels"] = ds.labels;
  side["layer"] = ds.layer;
  write_cavm_file(with_suffix(base, ".cavm"), ds.data);
  write_json_file(with_suffix(base, ".json"), side);
}

Dataset read_dataset(const std::filesystem::path& base_in) {
  const auto base = dataset_base(base_in);
  Dataset ds;
  ds.data = read_cavm_file(with_suffix(base, ".cavm"));
  json side = read_json_file(with_suffix(base, ".json"));
  try {
    ds.labels = side.at("labels").get<std::vector<int>>();
    ds.layer = side.value("layer", std::string{});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("sidecar: ") + e.what());
  }
  side.erase("labels");
  side.erase("layer");
  ds.meta = std::move(side);
  if (ds.labels.size() != ds.data.cols())
    throw Error(ErrorCode::Format, "sidecar has " + std::to_string(ds.labels.size()) +
                                       " labels for " + std::to_string(ds.data.cols()) + " columns");
  return ds;
}

Dataset to_dataset(const LabeledActivations& acts, std::uint64_t seed) {
  Dataset ds{acts.data, acts.labels, acts.layer_id, json::object()};
  ds.meta["seed"] = seed;
  ds.meta["rng"] = std::string(kRngAlgorithm);
  return ds;
}

LabeledActivations to_activations(const Dataset& ds) {
  LabeledActivations acts{ds.data, ds.labels, ds.layer};
  acts.validate();
  return acts;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

CsvWriter& CsvWriter::add(double v) { return add(format_double(v)); }

CsvWriter& CsvWriter::add(long long v) { return add(std::to_string(v)); }

CsvWriter& CsvWriter::add(const std::string& v) {
  if (in_row_ == columns_) throw Error(ErrorCode::InvalidArgument, "CSV row has too many fields");
  if (in_row_) text_ += ',';
  text_ += v;
  ++in_row_;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw Error(ErrorCode::InvalidArgument, "CSV row has too few fields");
  text_ += '\n';
  in_row_ = 0;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text_file(path, text_); }

}  // namespace cavlab::io
