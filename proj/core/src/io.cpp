#include "msda/io.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "msda/errors.hpp"

namespace msda {

namespace fs = std::filesystem;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / (path.filename().string() + ".tmp." +
                              std::to_string(::getpid()) + "." +
                              std::to_string(counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open temporary file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw IoError("rename failed for " + path.string() + ": " + ec.message());
  }
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    break;
  }
  if (c == EOF) throw IoError("PGM: unexpected end of header");
  tok.push_back(static_cast<char>(c));
  while ((c = in.get()) != EOF && !std::isspace(c) && c != '#')
    tok.push_back(static_cast<char>(c));
  if (c == '#') in.unget();
  return tok;
}

int pgm_int(std::istream& in, const char* what, int lo, int hi) {
  const std::string tok = pgm_token(in);
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &used);
  } catch (const std::exception&) {
    throw IoError(std::string("PGM: bad ") + what + ": " + tok);
  }
  if (used != tok.size() || v < lo || v > hi)
    throw IoError(std::string("PGM: bad ") + what + ": " + tok);
  return v;
}

}  // namespace

PgmImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PGM: " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5")
    throw IoError("PGM: unsupported magic '" + magic + "' in " + path.string());
  PgmImage img;
  img.width = pgm_int(in, "width", 1, 1 << 20);
  img.height = pgm_int(in, "height", 1, 1 << 20);
  img.maxval = pgm_int(in, "maxval", 1, 65535);
  const std::size_t count =
      static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(count);
  if (magic == "P2") {
    for (auto& px : img.pixels)
      px = static_cast<std::uint16_t>(pgm_int(in, "pixel", 0, img.maxval));
  } else {
    // P5: exactly one whitespace byte separates maxval from the raster.
    const int bytes = img.maxval > 255 ? 2 : 1;
    std::vector<char> raw(count * static_cast<std::size_t>(bytes));
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw IoError("PGM: truncated raster in " + path.string());
    for (std::size_t i = 0; i < count; ++i) {
      const auto b0 = static_cast<std::uint8_t>(raw[i * static_cast<std::size_t>(bytes)]);
      std::uint16_t v = b0;
      if (bytes == 2) {
        const auto b1 = static_cast<std::uint8_t>(raw[i * 2 + 1]);
        v = static_cast<std::uint16_t>((b0 << 8) | b1);
      }
      if (v > img.maxval) throw IoError("PGM: pixel above maxval in " + path.string());
      img.pixels[i] = v;
    }
  }
  return img;
}

void write_pgm(const fs::path& path, const PgmImage& image, bool ascii) {
  if (image.width < 1 || image.height < 1 || image.maxval < 1 || image.maxval > 65535)
    throw ParameterError("write_pgm: bad image dimensions");
  const std::size_t count =
      static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
  if (image.pixels.size() != count)
    throw ShapeError("write_pgm: pixel count mismatch");
  std::ostringstream out;
  out << (ascii ? "P2" : "P5") << "\n"
      << image.width << " " << image.height << "\n"
      << image.maxval << "\n";
  if (ascii) {
    for (int row = 0; row < image.height; ++row) {
      for (int col = 0; col < image.width; ++col) {
        if (col) out << ' ';
        out << image.pixels[static_cast<std::size_t>(row) * image.width + col];
      }
      out << '\n';
    }
  } else {
    const int bytes = image.maxval > 255 ? 2 : 1;
    for (const std::uint16_t px : image.pixels) {
      if (px > image.maxval) throw ParameterError("write_pgm: pixel above maxval");
      if (bytes == 2) out.put(static_cast<char>(px >> 8));
      out.put(static_cast<char>(px & 0xFF));
    }
  }
  write_file_atomic(path, out.str());
}

PgmImage mask_to_pgm(const Mask& mask) {
  const int n = mask.shape.side();
  PgmImage img;
  img.width = n;
  img.height = n;
  img.maxval = 255;
  img.pixels.resize(static_cast<std::size_t>(mask.values.size()));
  for (Eigen::Index i = 0; i < mask.values.size(); ++i) {
    const double v = std::clamp(mask.values[i], 0.0, 1.0);
    img.pixels[static_cast<std::size_t>(i)] =
        static_cast<std::uint16_t>(std::lround(255.0 * v));
  }
  return img;
}

Eigen::VectorXd pgm_to_unit(const PgmImage& image) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(image.pixels.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = image.pixels[static_cast<std::size_t>(i)] / static_cast<double>(image.maxval);
  return v;
}

PgmImage unit_to_pgm(const Eigen::VectorXd& v, int width, int height, int maxval) {
  if (static_cast<Eigen::Index>(width) * height != v.size())
    throw ShapeError("unit_to_pgm: dimension mismatch");
  PgmImage img;
  img.width = width;
  img.height = height;
  img.maxval = maxval;
  img.pixels.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double clipped = std::clamp(v[i], 0.0, 1.0);
    img.pixels[static_cast<std::size_t>(i)] =
        static_cast<std::uint16_t>(std::lround(maxval * clipped));
  }
  return img;
}

void write_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 20);
  for (Eigen::Index row = 0; row < m.rows(); ++row) {
    for (Eigen::Index col = 0; col < m.cols(); ++col) {
      if (col) out.push_back(',');
      out += format_g17(m(row, col));
    }
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

Eigen::MatrixXd read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw IoError("CSV: bad number '" + cell + "' in " + path.string());
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
        ++used;
      if (used != cell.size())
        throw IoError("CSV: bad number '" + cell + "' in " + path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("CSV: ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("CSV: no data in " + path.string());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace msda
