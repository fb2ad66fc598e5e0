#pragma once
#include <string>

#include "dtams/grid.hpp"

namespace dtams {

// Binary PGM (P5, one channel) or PPM (P6, three channels), 8 bit.
// Intensity k maps to k/255.
struct ImageFile {
  PlaneGrid image;
  std::string comment;  // first header comment line, without "# "
};

void write_pnm(const std::string& path, const PlaneGrid& img,
               const std::string& comment = "");
ImageFile read_pnm(const std::string& path);

}  // namespace dtams
