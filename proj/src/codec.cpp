#include "dtams/codec.hpp"

#include "dtams/error.hpp"

namespace dtams {

static void check_g(int g) {
  if (g < 1 || g > 8) throw Error(ErrorKind::invalid_argument, "g must lie in [1, 8]");
}

std::vector<std::uint64_t> SymbolStream::counts() const {
  std::vector<std::uint64_t> n(std::size_t{1} << g, 0);
  for (auto s : symbols) ++n.at(s);
  return n;
}

SymbolStream bytes_to_symbols(const std::vector<std::uint8_t>& payload, int g) {
  check_g(g);
  SymbolStream out;
  out.g = g;
  const std::size_t nbits = payload.size() * 8;
  const std::size_t nsym = (nbits + g - 1) / g;
  out.symbols.resize(nsym);
  for (std::size_t k = 0; k < nsym; ++k) {
    std::uint32_t v = 0;
    for (int j = 0; j < g; ++j) {
      const std::size_t bit = k * g + j;
      int b = 0;
      if (bit < nbits) b = (payload[bit / 8] >> (7 - bit % 8)) & 1;
      v = (v << 1) | b;
    }
    out.symbols[k] = v;
  }
  return out;
}

std::vector<std::uint8_t> symbols_to_bytes(const SymbolStream& s, std::size_t byte_len) {
  check_g(s.g);
  const std::size_t need = (8 * byte_len + s.g - 1) / s.g;
  if (s.symbols.size() < need)
    throw Error(ErrorKind::insufficient_symbols, "not enough symbols for the byte length");
  std::vector<std::uint8_t> out(byte_len, 0);
  for (std::size_t bit = 0; bit < 8 * byte_len; ++bit) {
    const std::uint32_t sym = s.symbols[bit / s.g];
    const int b = (sym >> (s.g - 1 - bit % s.g)) & 1;
    out[bit / 8] |= static_cast<std::uint8_t>(b << (7 - bit % 8));
  }
  return out;
}

std::vector<double> frequency_table(const SymbolStream& s) {
  if (s.symbols.empty()) throw Error(ErrorKind::invalid_argument, "empty symbol stream");
  const auto n = s.counts();
  std::vector<double> p(n.size());
  for (std::size_t b = 0; b < n.size(); ++b) p[b] = double(n[b]) / double(s.symbols.size());
  return p;
}

}  // namespace dtams
