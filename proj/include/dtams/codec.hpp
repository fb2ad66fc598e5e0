#pragma once
#include <cstdint>
#include <vector>

namespace dtams {

struct SymbolStream {
  int g = 3;
  std::vector<std::uint32_t> symbols;

  std::size_t size() const { return symbols.size(); }
  std::vector<std::uint64_t> counts() const;  // N(b), length 2^g
};

SymbolStream bytes_to_symbols(const std::vector<std::uint8_t>& payload, int g);
std::vector<std::uint8_t> symbols_to_bytes(const SymbolStream& s, std::size_t byte_len);
std::vector<double> frequency_table(const SymbolStream& s);

}  // namespace dtams
