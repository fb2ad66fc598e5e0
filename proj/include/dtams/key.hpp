#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "dtams/backbone.hpp"
#include "dtams/layered.hpp"

namespace dtams {

inline constexpr int kKeyVersion = 1;

struct ScheduleParams {
  int num_steps = 100;
  double a_at_T = 0.998;
  double a_at_1 = 0.96;
  double sigma = 0.0;

  Schedule build() const { return Schedule::linear(num_steps, a_at_T, a_at_1, sigma); }
};

struct HookKey {
  int t = 0;
  std::vector<NestLevel> channels;
};

struct MappingKey {
  int version = kKeyVersion;
  std::uint64_t master_seed = 0;
  ScheduleParams schedule;
  std::string target_id = "procedural";
  int height = 0, width = 0, channels = 0;
  int g = 3;
  std::size_t payload_bytes = 0;
  std::vector<int> timesteps;  // T*, descending
  std::vector<HookKey> hooks;  // fired subset of T*, descending
  std::string placement = "nested";
  double w = 0.75;
  double margin = 0.08;
  double eps = 0.0;

  void validate() const;
};

double to_f32(double x);
// exact decimal expansion of the f32 nearest to x
std::string exact_f32_decimal(double x);

std::string key_to_json(const MappingKey& k);
MappingKey key_from_json(const std::string& text);
void save_key(const std::string& path, const MappingKey& k);
MappingKey load_key(const std::string& path);

// SHA-256 hex of the canonical JSON
std::string key_fingerprint(const MappingKey& k);

}  // namespace dtams
