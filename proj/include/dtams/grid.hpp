#pragma once
#include <cstddef>
#include <string>
#include <vector>

namespace dtams {

// H x W x C real-valued plane, row-major by (h, w, c).
struct PlaneGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> values;

  PlaneGrid() = default;
  PlaneGrid(int h, int w, int c, double lo = 0.0, double hi = 1.0,
            double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t index(int h, int w, int c) const {
    return (static_cast<std::size_t>(h) * width + w) * channels + c;
  }
  double& at(int h, int w, int c) { return values[index(h, w, c)]; }
  double at(int h, int w, int c) const { return values[index(h, w, c)]; }

  bool same_shape(const PlaneGrid& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  // values of channel c in raster order
  std::vector<double> channel(int c) const;
  void set_channel(int c, const std::vector<double>& v);

  // throws if the invariants are broken
  void validate() const;
};

inline constexpr double kStateLo = -4.0;
inline constexpr double kStateHi = 4.0;

void require_same_shape(const PlaneGrid& a, const PlaneGrid& b,
                        const char* where);

PlaneGrid clamp_quantize(const PlaneGrid& g, int levels);
PlaneGrid clamp_quantize_serial(const PlaneGrid& g, int levels);

// Grid file: "DTGR", u32 H, W, C, f32 values, f32 lo, hi; little-endian.
void write_grid(const std::string& path, const PlaneGrid& g);
PlaneGrid read_grid(const std::string& path);
void write_grid_payload(std::ostream& os, const PlaneGrid& g);
void read_grid_payload(std::istream& is, PlaneGrid& g);

}  // namespace dtams
