#ifndef MSDA_IO_HPP
#define MSDA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "msda/mask.hpp"

namespace msda {

// Grayscale image, row-major, maxval <= 65535 (values 0..maxval).
struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> pixels;
};

// Reads P2 (ASCII) or P5 (binary) with '#' comments.
PgmImage read_pgm(const std::filesystem::path& path);

// Writes P5 by default, P2 when ascii is set. Atomic (temp file + rename).
void write_pgm(const std::filesystem::path& path, const PgmImage& image,
               bool ascii = false);

// round(255 * M_i), clamped to [0, 255]; requires a square mask.
PgmImage mask_to_pgm(const Mask& mask);

// Pixel values scaled to [0,1] doubles, row-major flattened.
Eigen::VectorXd pgm_to_unit(const PgmImage& image);

// Doubles back to pixels: round(maxval * v) clamped to [0, maxval].
PgmImage unit_to_pgm(const Eigen::VectorXd& v, int width, int height,
                     int maxval = 255);

// 17 significant digits (%.17g); round-trips the double bit-exactly.
std::string format_g17(double v);

// Comma-separated, one row per line, %.17g entries. Atomic.
void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

// Rectangular numeric CSV ('.' decimal separator).
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

// Writes content to a temp file in the target directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace msda

#endif
