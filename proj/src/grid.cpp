#include "dtams/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dtams/error.hpp"

namespace dtams {

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::degenerate_state: return "degenerate_state";
    case ErrorKind::empty_interval: return "empty_interval";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::malformed_header: return "malformed_header";
    case ErrorKind::state_count_mismatch: return "state_count_mismatch";
    case ErrorKind::non_invertible: return "non_invertible";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::payload_overflow: return "payload_overflow";
    case ErrorKind::insufficient_symbols: return "insufficient_symbols";
    case ErrorKind::fingerprint_mismatch: return "fingerprint_mismatch";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

PlaneGrid::PlaneGrid(int h, int w, int c, double lo_, double hi_, double fill)
    : height(h), width(w), channels(c), lo(lo_), hi(hi_) {
  if (h <= 0 || w <= 0 || c <= 0)
    throw Error(ErrorKind::invalid_argument, "grid dims must be positive");
  if (!(lo < hi))
    throw Error(ErrorKind::invalid_argument, "value range needs lo < hi");
  values.assign(static_cast<std::size_t>(h) * w * c, fill);
}

std::vector<double> PlaneGrid::channel(int c) const {
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = values[p * channels + c];
  return out;
}

void PlaneGrid::set_channel(int c, const std::vector<double>& v) {
  if (v.size() != static_cast<std::size_t>(height) * width)
    throw Error(ErrorKind::shape_mismatch, "channel length mismatch");
  for (std::size_t p = 0; p < v.size(); ++p) values[p * channels + c] = v[p];
}

void PlaneGrid::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw Error(ErrorKind::invalid_argument, "grid dims must be positive");
  if (values.size() != static_cast<std::size_t>(height) * width * channels)
    throw Error(ErrorKind::shape_mismatch, "values length != H*W*C");
  if (!(lo < hi)) throw Error(ErrorKind::invalid_argument, "lo >= hi");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "non-finite value");
}

void require_same_shape(const PlaneGrid& a, const PlaneGrid& b,
                        const char* where) {
  if (!a.same_shape(b))
    throw Error(ErrorKind::shape_mismatch, std::string(where) + ": shape mismatch");
}

static inline double quantize_one(double x, double lo, double hi, int levels) {
  if (x < lo) x = lo;
  if (x > hi) x = hi;
  const double steps = levels - 1;
  const double k = std::nearbyint((x - lo) / (hi - lo) * steps);
  return lo + k / steps * (hi - lo);
}

PlaneGrid clamp_quantize(const PlaneGrid& g, int levels) {
  if (levels < 2) throw Error(ErrorKind::invalid_argument, "levels must be >= 2");
  PlaneGrid out = g;
  const long n = static_cast<long>(g.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i)
    out.values[i] = quantize_one(g.values[i], g.lo, g.hi, levels);
  return out;
}

PlaneGrid clamp_quantize_serial(const PlaneGrid& g, int levels) {
  if (levels < 2) throw Error(ErrorKind::invalid_argument, "levels must be >= 2");
  PlaneGrid out = g;
  for (std::size_t i = 0; i < g.size(); ++i)
    out.values[i] = quantize_one(g.values[i], g.lo, g.hi, levels);
  return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }

bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool get_f32(std::istream& is, float& f) {
  std::uint32_t u;
  if (!get_u32(is, u)) return false;
  f = std::bit_cast<float>(u);
  return true;
}

}  // namespace

void write_grid_payload(std::ostream& os, const PlaneGrid& g) {
  for (double v : g.values) put_f32(os, static_cast<float>(v));
  put_f32(os, static_cast<float>(g.lo));
  put_f32(os, static_cast<float>(g.hi));
}

void read_grid_payload(std::istream& is, PlaneGrid& g) {
  for (auto& v : g.values) {
    float f;
    if (!get_f32(is, f)) throw Error(ErrorKind::state_count_mismatch, "truncated grid payload");
    v = f;
  }
  float lo, hi;
  if (!get_f32(is, lo) || !get_f32(is, hi))
    throw Error(ErrorKind::state_count_mismatch, "truncated grid payload");
  if (!(lo < hi)) throw Error(ErrorKind::malformed_header, "bad value range");
  g.lo = lo;
  g.hi = hi;
}

void write_grid(const std::string& path, const PlaneGrid& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path);
  os.write("DTGR", 4);
  put_u32(os, g.height);
  put_u32(os, g.width);
  put_u32(os, g.channels);
  write_grid_payload(os, g);
  if (!os) throw Error(ErrorKind::io, "write failed: " + path);
}

PlaneGrid read_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path);
  char magic[4];
  std::uint32_t h, w, c;
  if (!is.read(magic, 4) || std::memcmp(magic, "DTGR", 4) != 0)
    throw Error(ErrorKind::malformed_header, "not a DTGR grid file");
  if (!get_u32(is, h) || !get_u32(is, w) || !get_u32(is, c) || h == 0 || w == 0 || c == 0)
    throw Error(ErrorKind::malformed_header, "bad grid dims");
  PlaneGrid g(h, w, c);
  read_grid_payload(is, g);
  return g;
}

}  // namespace dtams
