#include "dtams/image_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

#include "dtams/error.hpp"

namespace dtams {

void write_pnm(const std::string& path, const PlaneGrid& img,
               const std::string& comment) {
  if (img.channels != 1 && img.channels != 3)
    throw Error(ErrorKind::invalid_argument, "PNM needs 1 or 3 channels");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path);
  os << (img.channels == 1 ? "P5\n" : "P6\n");
  if (!comment.empty()) os << "# " << comment << "\n";
  os << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = std::nearbyint(img.values[i] * 255.0);
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    bytes[i] = static_cast<unsigned char>(v);
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!os) throw Error(ErrorKind::io, "write failed: " + path);
}

namespace {

// next header token, collecting comment lines
std::string token(std::istream& is, std::string& comment) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      std::string line;
      std::getline(is, line);
      if (comment.empty()) comment = line.size() > 1 && line[0] == ' ' ? line.substr(1) : line;
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

ImageFile read_pnm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path);
  ImageFile out;
  const std::string magic = token(is, out.comment);
  int c = 0;
  if (magic == "P5") c = 1;
  else if (magic == "P6") c = 3;
  else throw Error(ErrorKind::malformed_header, "not a binary PGM/PPM");
  int w = 0, h = 0, maxv = 0;
  try {
    w = std::stoi(token(is, out.comment));
    h = std::stoi(token(is, out.comment));
    maxv = std::stoi(token(is, out.comment));
  } catch (const std::exception&) {
    throw Error(ErrorKind::malformed_header, "bad PNM header");
  }
  if (w <= 0 || h <= 0 || maxv != 255)
    throw Error(ErrorKind::malformed_header, "only 8-bit PNM supported");
  out.image = PlaneGrid(h, w, c);
  std::vector<unsigned char> bytes(out.image.size());
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw Error(ErrorKind::malformed_header, "truncated PNM data");
  for (std::size_t i = 0; i < bytes.size(); ++i) out.image.values[i] = bytes[i] / 255.0;
  return out;
}

}  // namespace dtams
