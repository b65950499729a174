#include "tslam/imgproc/pgm.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tslam::imgproc {

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int header_int(std::istream& is, const char* what) {
  const std::string tok = header_token(is);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("pgm: bad ") + what + " '" + tok + "' at byte " +
                             std::to_string(static_cast<long long>(is.tellg())));
  }
}

}  // namespace

ThermalImage read_thermal_pgm(std::istream& is, Timestamp stamp) {
  if (header_token(is) != "P5") throw std::runtime_error("pgm: missing P5 magic at byte 0");
  const int w = header_int(is, "width");
  const int h = header_int(is, "height");
  const int maxval = header_int(is, "maxval");
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw std::runtime_error("pgm: invalid header values");
  }
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Image<std::uint16_t> counts(w, h);
  const std::streamoff data_start = is.tellg();
  if (maxval < 256) {
    std::string buf(n, '\0');
    is.read(buf.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
      throw std::runtime_error("pgm: truncated pixel data at byte " +
                               std::to_string(data_start + is.gcount()));
    }
    for (std::size_t i = 0; i < n; ++i) counts.data()[i] = static_cast<unsigned char>(buf[i]);
  } else {
    std::string buf(2 * n, '\0');
    is.read(buf.data(), static_cast<std::streamsize>(2 * n));
    if (static_cast<std::size_t>(is.gcount()) != 2 * n) {
      throw std::runtime_error("pgm: truncated pixel data at byte " +
                               std::to_string(data_start + is.gcount()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto hi = static_cast<unsigned char>(buf[2 * i]);
      const auto lo = static_cast<unsigned char>(buf[2 * i + 1]);
      const auto v = static_cast<std::uint16_t>((hi << 8) | lo);
      if (v > kMaxRawCount) {
        throw std::runtime_error("pgm: sample " + std::to_string(v) + " exceeds 14 bits at byte " +
                                 std::to_string(data_start + static_cast<std::streamoff>(2 * i)));
      }
      counts.data()[i] = v;
    }
  }
  return ThermalImage(std::move(counts), stamp);
}

ThermalImage read_thermal_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_thermal_pgm(is, stamp_from_filename(path));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_thermal_pgm(std::ostream& os, const ThermalImage& img) {
  os << "P5\n" << img.width() << ' ' << img.height() << '\n' << kMaxRawCount << '\n';
  std::string buf(img.counts.data().size() * 2, '\0');
  for (std::size_t i = 0; i < img.counts.data().size(); ++i) {
    const std::uint16_t v = img.counts.data()[i];
    buf[2 * i] = static_cast<char>(v >> 8);
    buf[2 * i + 1] = static_cast<char>(v & 0xff);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_thermal_pgm(const std::filesystem::path& path, const ThermalImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_thermal_pgm(os, img);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

void write_pgm8(const std::filesystem::path& path, const Image8& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data().data()),
           static_cast<std::streamsize>(img.data().size()));
}

Timestamp stamp_from_filename(const std::filesystem::path& path) {
  std::string stem = path.filename().string();
  stem = stem.substr(0, stem.find('.'));
  if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos) {
    throw std::runtime_error("file name '" + path.filename().string() +
                             "' is not <timestamp_ns>.<ext>");
  }
  return std::stoll(stem);
}

}  // namespace tslam::imgproc
