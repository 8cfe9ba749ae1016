#pragma once

// Binary PBM (P4) and PGM (P5) reading and writing. Any non-zero sample
// reads as a set bit.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "maskscope/error.hpp"
#include "maskscope/geometry.hpp"

namespace maskscope {

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_uint(std::istream& in, const char* what) {
  skip_pnm_space(in);
  std::size_t v = 0;
  bool any = false;
  while (std::isdigit(in.peek())) {
    v = v * 10 + static_cast<std::size_t>(in.get() - '0');
    any = true;
    if (v > (1u << 24)) throw Error(Errc::parse, std::string("PNM ") + what + " too large");
  }
  if (!any) throw Error(Errc::parse, std::string("PNM header: missing ") + what);
  return v;
}

}  // namespace detail

inline BitMask read_pnm(std::istream& in) {
  char magic[2] = {0, 0};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '4' && magic[1] != '5'))
    throw Error(Errc::parse, "not a binary PBM/PGM file (expected P4 or P5)");
  const bool pbm = magic[1] == '4';
  const std::size_t w = detail::read_pnm_uint(in, "width");
  const std::size_t h = detail::read_pnm_uint(in, "height");
  std::size_t maxval = 1;
  if (!pbm) {
    maxval = detail::read_pnm_uint(in, "maxval");
    if (maxval == 0 || maxval > 65535) throw Error(Errc::parse, "PGM maxval out of range");
  }
  if (w == 0 || h == 0) throw Error(Errc::parse, "PNM image has zero extent");
  if (!std::isspace(in.get())) throw Error(Errc::parse, "PNM header not terminated by whitespace");

  BitMask mask(w, h);
  if (pbm) {
    const std::size_t stride = (w + 7) / 8;
    std::vector<unsigned char> row(stride);
    for (std::size_t r = 0; r < h; ++r) {
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(stride)))
        throw Error(Errc::parse, "PBM raster truncated");
      for (std::size_t c = 0; c < w; ++c)
        if (row[c / 8] & (0x80u >> (c % 8))) mask.set(r, c);
    }
  } else {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> row(w * bytes);
    for (std::size_t r = 0; r < h; ++r) {
      if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
        throw Error(Errc::parse, "PGM raster truncated");
      for (std::size_t c = 0; c < w; ++c) {
        const bool on = bytes == 1 ? row[c] != 0 : (row[2 * c] | row[2 * c + 1]) != 0;
        if (on) mask.set(r, c);
      }
    }
  }
  return mask;
}

inline BitMask read_pnm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open bitmap '" + path.string() + "'");
  try {
    return read_pnm(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

enum class PnmFormat { pbm, pgm };

inline void write_pnm(std::ostream& out, const BitMask& mask, PnmFormat fmt = PnmFormat::pgm) {
  const std::size_t w = mask.width(), h = mask.height();
  if (fmt == PnmFormat::pbm) {
    out << "P4\n" << w << ' ' << h << '\n';
    std::vector<char> row((w + 7) / 8);
    for (std::size_t r = 0; r < h; ++r) {
      std::fill(row.begin(), row.end(), 0);
      for (std::size_t c = 0; c < w; ++c)
        if (mask.at(r, c)) row[c / 8] = static_cast<char>(row[c / 8] | (0x80 >> (c % 8)));
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  } else {
    out << "P5\n" << w << ' ' << h << "\n255\n";
    std::vector<char> row(w);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) row[c] = mask.at(r, c) ? char(0xff) : char(0);
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  }
}

inline void write_pnm_file(const std::filesystem::path& path, const BitMask& mask,
                           PnmFormat fmt = PnmFormat::pgm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write bitmap '" + path.string() + "'");
  write_pnm(out, mask, fmt);
}

}  // namespace maskscope
