#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "msda/io.hpp"
#include "msda/rng.hpp"

namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test run, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("msda_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

msda::PgmImage random_image(msda::RngStream& rng, int w, int h, int maxval) {
  msda::PgmImage img;
  img.width = w;
  img.height = h;
  img.maxval = maxval;
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  for (auto& p : img.pixels)
    p = static_cast<std::uint16_t>(
        rng.next_below(static_cast<std::uint64_t>(maxval) + 1));
  return img;
}

}  // namespace

TEST_CASE("io: PGM round-trips binary and ASCII, 8- and 16-bit") {
  TempDir tmp;
  msda::RngStream rng(1);
  for (const int maxval : {255, 65535, 100}) {
    for (const bool ascii : {false, true}) {
      CAPTURE(maxval);
      CAPTURE(ascii);
      const msda::PgmImage img = random_image(rng, 7, 5, maxval);
      const fs::path p = tmp.path / "img.pgm";
      msda::write_pgm(p, img, ascii);
      const msda::PgmImage back = msda::read_pgm(p);
      CHECK(back.width == img.width);
      CHECK(back.height == img.height);
      CHECK(back.maxval == img.maxval);
      CHECK(back.pixels == img.pixels);
    }
  }
}

TEST_CASE("io: PGM reader accepts comments and arbitrary whitespace") {
  TempDir tmp;
  const fs::path p = tmp.path / "c.pgm";
  std::ofstream(p) << "P2 # magic\n# a comment line\n 3\t2 # dims\n255\n"
                   << "0 1 2\n3 4 5\n";
  const msda::PgmImage img = msda::read_pgm(p);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.pixels == std::vector<std::uint16_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("io: PGM reader rejects malformed input") {
  TempDir tmp;
  const fs::path p = tmp.path / "bad.pgm";
  std::ofstream(p) << "P6\n2 2\n255\n....";
  CHECK_THROWS_AS(msda::read_pgm(p), msda::IoError);
  std::ofstream(p) << "P2\n2 2\n255\n0 1 2\n";  // one pixel short
  CHECK_THROWS_AS(msda::read_pgm(p), msda::IoError);
  std::ofstream(p) << "P2\n2 2\n255\n0 1 2 300\n";  // above maxval
  CHECK_THROWS_AS(msda::read_pgm(p), msda::IoError);
  CHECK_THROWS_AS(msda::read_pgm(tmp.path / "missing.pgm"), msda::IoError);
}

TEST_CASE("io: mask_to_pgm quantizes to round(255 M)") {
  msda::MaskSpec spec;
  spec.method = msda::MaskMethod::gmix;
  spec.shape = msda::GridShape::square(6);
  msda::RngStream rng(2);
  const msda::Mask m = msda::sample_mask_at(rng, spec, 0.4);
  const msda::PgmImage img = msda::mask_to_pgm(m);
  CHECK(img.width == 6);
  CHECK(img.height == 6);
  CHECK(img.maxval == 255);
  for (Eigen::Index i = 0; i < 36; ++i)
    CHECK(img.pixels[static_cast<std::size_t>(i)] ==
          static_cast<std::uint16_t>(std::lround(255.0 * m.values[i])));
}

TEST_CASE("io: unit_to_pgm and pgm_to_unit invert each other on the grid") {
  msda::RngStream rng(3);
  const msda::PgmImage img = random_image(rng, 9, 4, 255);
  const Eigen::VectorXd unit = msda::pgm_to_unit(img);
  CHECK(unit.minCoeff() >= 0.0);
  CHECK(unit.maxCoeff() <= 1.0);
  const msda::PgmImage back = msda::unit_to_pgm(unit, 9, 4, 255);
  CHECK(back.pixels == img.pixels);
  // Out-of-range doubles clamp instead of wrapping.
  Eigen::VectorXd wild(4);
  wild << -0.5, 0.0, 1.0, 2.5;
  const msda::PgmImage clamped = msda::unit_to_pgm(wild, 2, 2, 255);
  CHECK(clamped.pixels == std::vector<std::uint16_t>{0, 0, 255, 255});
}

TEST_CASE("io: format_g17 round-trips doubles bit-exactly") {
  msda::RngStream rng(4);
  for (int it = 0; it < 2000; ++it) {
    const double v = (rng.next_double() - 0.5) *
                     std::pow(10.0, static_cast<double>(rng.next_below(60)) - 30.0);
    const std::string s = msda::format_g17(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(std::strtod(msda::format_g17(0.1).c_str(), nullptr) == 0.1);
  CHECK(std::strtod(msda::format_g17(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("io: CSV matrices round-trip bit-exactly") {
  TempDir tmp;
  msda::RngStream rng(5);
  Eigen::MatrixXd m(5, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = msda::std_normal(rng) * std::pow(10.0, msda::std_normal(rng));
  const fs::path p = tmp.path / "m.csv";
  msda::write_csv(p, m);
  const Eigen::MatrixXd back = msda::read_csv_matrix(p);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK(back == m);
}

TEST_CASE("io: CSV reader rejects ragged and non-numeric input") {
  TempDir tmp;
  const fs::path p = tmp.path / "bad.csv";
  std::ofstream(p) << "1,2,3\n4,5\n";
  CHECK_THROWS_AS(msda::read_csv_matrix(p), msda::IoError);
  std::ofstream(p) << "1,2\nx,4\n";
  CHECK_THROWS_AS(msda::read_csv_matrix(p), msda::IoError);
}

TEST_CASE("io: atomic writes replace content and leave no temp files") {
  TempDir tmp;
  const fs::path p = tmp.path / "out.txt";
  msda::write_file_atomic(p, "first");
  msda::write_file_atomic(p, "second");
  std::ifstream in(p);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path))
    ++entries;
  CHECK(entries == 1);
}
