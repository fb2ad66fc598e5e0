#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "dtams/channel.hpp"
#include "dtams/compensation.hpp"
#include "dtams/key.hpp"
#include "dtams/layered.hpp"
#include "dtams/pgd.hpp"
#include "dtams/select.hpp"

namespace dtams {

struct EmbedParams {
  std::uint64_t seed = 1;
  int height = 64, width = 64, channels = 1;
  int g = 3;
  int n = 5;
  double w = 0.75;
  double margin = 0.08;
  ScheduleParams schedule;
  Window window;
  bool amplify = false;
  std::vector<int> timesteps;  // overrides selection when nonempty
  bool refine = true;
  double lambda = 0.1;
  int pgd_iters = 50;
  bool compensate = true;
  CompensationConfig comp;
  bool keep_traces = false;
};

struct StegoPackage {
  PlaneGrid image;  // 256-level quantized, range [0, 1]
  std::string format = "pgm";
  std::string fingerprint;
};

struct EmbedDiagnostics {
  std::size_t capacity_bits = 0;
  std::size_t fired = 0;
  std::size_t pgd_reverted = 0;       // elements reset to their unrefined value
  std::size_t compensation_fallbacks = 0;
  std::size_t pad_symbols = 0;
  TimestepCostTable table;
  // (t, channel, trace) per hook when keep_traces is set
  struct PgdTrace { int t, channel; std::vector<TraceRow> rows; };
  struct CompTrace { int t; std::vector<CompensationRow> rows; };
  std::vector<PgdTrace> pgd_traces;
  std::vector<CompTrace> comp_traces;
  Trajectory trajectory;  // hooked run, kept with keep_traces
};

struct EmbedResult {
  StegoPackage package;
  MappingKey key;
  PlaneGrid cover;
  SymbolStream symbols;  // payload followed by padding
  EmbedDiagnostics diag;
};

struct ExtractOptions {
  bool check_fingerprint = true;
};

struct ExtractResult {
  std::vector<std::uint8_t> payload;
  SymbolStream symbols;
  std::size_t erasures = 0;
};

// refinement and compensation may use at most this share of an element's
// decodability margin
inline constexpr double kGuard = 0.25;

// PGD on a placed plane; elements whose decode at any level would change, or
// that move past kGuard of their margin, keep the placed value
PgdResult guarded_refine(std::span<const double> z, int height, int width,
                         std::span<const NestLevel> levels, double margin, const RefineConfig& cfg,
                         std::size_t* reverted = nullptr);

// true when comp decodes like R on every channel and level and no element
// moves past kGuard of its margin; levels[c].back().kappa scales the plane
bool accept_compensation(const PlaneGrid& R, const PlaneGrid& comp, const PlaneGrid& noise,
                         const std::vector<std::vector<NestLevel>>& levels, double w, double margin);

std::size_t capacity_bits(int height, int width, int channels, int g, int n);
double embedding_rate(std::size_t bits, int height, int width);

Trajectory clean_trajectory(const MappingKey& k);
TimestepCostTable score_for_params(const EmbedParams& p, const std::vector<double>& p_B);

EmbedResult embed(const std::vector<std::uint8_t>& payload, const EmbedParams& p);
ExtractResult extract(const StegoPackage& pkg, const MappingKey& key, const ExtractOptions& opt = {});

void write_stego(const std::string& path, const StegoPackage& pkg);
StegoPackage read_stego(const std::string& path);

struct SweepRow {
  int n;
  double er, mae, psnr, ssim, accuracy;
};

std::vector<SweepRow> sweep_capacity(const EmbedParams& base, int n_lo, int n_hi,
                                     const std::vector<std::uint64_t>& seeds);

struct ReportRow {
  AttackSpec attack;
  double accuracy, mae, psnr, ssim, er;
};

std::vector<ReportRow> evaluate(const EmbedParams& base, const std::vector<AttackSpec>& attacks,
                                const std::vector<std::uint64_t>& seeds, std::size_t payload_bytes = 0);

std::vector<std::uint8_t> random_payload(std::uint64_t seed, std::size_t bytes);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_sweep_markdown(std::ostream& os, const std::vector<SweepRow>& rows);
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);
void write_report_markdown(std::ostream& os, const std::vector<ReportRow>& rows);

}  // namespace dtams
