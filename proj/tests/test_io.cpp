#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "cavlab/error.hpp"
#include "cavlab/io.hpp"
#include "test_util.hpp"

using namespace cavlab;

namespace {

std::string bytes_of(const Matrix& m) {
  std::ostringstream out(std::ios::binary);
  io::write_cavm(out, m);
  return out.str();
}

}  // namespace

TEST_CASE("CAVM header layout") {
  const Matrix m(2, 3, {1, 2, 3, 4, 5, 6.5});
  const std::string b = bytes_of(m);
  REQUIRE(b.size() == io::kCavmHeaderBytes + 6 * 8);
  CHECK(b.substr(0, 4) == "CAVM");
  CHECK(static_cast<unsigned char>(b[4]) == 1);  // version, little-endian u16
  CHECK(b[5] == 0);
  CHECK(b[6] == 0);  // dtype f64
  CHECK(b[7] == 0);  // flags
  CHECK(static_cast<unsigned char>(b[8]) == 2);
  CHECK(static_cast<unsigned char>(b[16]) == 3);
  for (int i = 24; i < 32; ++i) CHECK(b[static_cast<std::size_t>(i)] == 0);
  double last;
  std::memcpy(&last, b.data() + 32 + 5 * 8, 8);
  CHECK(last == 6.5);  // row-major, little-endian host
}

TEST_CASE("CAVM round trip is exact") {
  Rng rng(1);
  const Matrix m = testing::random_matrix(7, 5, rng, 1e-300);
  std::istringstream in(bytes_of(m), std::ios::binary);
  CHECK(io::read_cavm(in) == m);

  const Matrix empty(0, 4);
  std::istringstream in2(bytes_of(empty), std::ios::binary);
  const Matrix back = io::read_cavm(in2);
  CHECK(back.rows() == 0);
  CHECK(back.cols() == 4);
}

TEST_CASE("CAVM rejects malformed input") {
  const std::string good = bytes_of(Matrix(1, 2, {1, 2}));
  auto read = [](std::string s) {
    std::istringstream in(s, std::ios::binary);
    return io::read_cavm(in);
  };
  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(read(bad), Error);
  bad = good;
  bad[4] = 2;
  CHECK_THROWS_AS(read(bad), Error);
  CHECK_THROWS_AS(read(good.substr(0, 20)), Error);
  CHECK_THROWS_AS(read(good.substr(0, good.size() - 1)), Error);
  try {
    read(good.substr(0, 40));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
  }
}

TEST_CASE("dataset files round trip") {
  const auto dir = testing::scratch_dir("io_dataset");
  LabeledActivations acts{Matrix(2, 3, {1, 2, 3, 4, 5, 6}), {-1, 1, 1}, "2"};
  io::Dataset ds = io::to_dataset(acts, 77);
  ds.meta["note"] = "x";
  io::write_dataset(dir / "d", ds);
  CHECK(std::filesystem::file_size(dir / "d.cavm") == 32 + 6 * 8);

  for (const char* name : {"d", "d.cavm", "d.json"}) {
    const io::Dataset back = io::read_dataset(dir / name);
    CHECK(back.data == ds.data);
    CHECK(back.labels == ds.labels);
    CHECK(back.layer == "2");
    CHECK(back.meta.at("seed") == 77);
    CHECK(back.meta.at("note") == "x");
    CHECK(back.meta.at("rng") == std::string(kRngAlgorithm));
  }
  const LabeledActivations again = io::to_activations(io::read_dataset(dir / "d"));
  CHECK(again.labels == acts.labels);

  CHECK_THROWS_AS(io::read_dataset(dir / "missing"), Error);
}

TEST_CASE("dataset sidecar must agree with the matrix") {
  const auto dir = testing::scratch_dir("io_mismatch");
  io::write_cavm_file(dir / "d.cavm", Matrix(1, 3));
  io::write_json_file(dir / "d.json", io::json{{"labels", {1, -1}}, {"layer", "0"}});
  CHECK_THROWS_AS(io::read_dataset(dir / "d"), Error);
}

TEST_CASE("CSV writer") {
  io::CsvWriter csv({"a", "b", "c"});
  csv.add(0.1).add(static_cast<long long>(3)).add(std::string("ridge"));
  csv.end_row();
  CHECK(csv.str() == "a,b,c\n0.10000000000000001,3,ridge\n");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  csv.add(1.0);
  CHECK_THROWS_AS(csv.end_row(), Error);
  csv.add(1.0).add(2.0);
  CHECK_THROWS_AS(csv.add(3.0), Error);
}

TEST_CASE("unwritable paths raise I/O errors") {
  try {
    io::write_text_file("/nonexistent-dir/x/y.csv", "a");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}
