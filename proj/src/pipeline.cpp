#include "dtams/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "dtams/codec.hpp"
#include "dtams/error.hpp"
#include "dtams/image_io.hpp"
#include "dtams/layered.hpp"
#include "dtams/mapping.hpp"

namespace dtams {

namespace {

constexpr const char* kFingerprintTag = "dtams-fingerprint: ";

std::vector<double> plane_std_normal(const PlaneGrid& n, int c) { return n.channel(c); }

double population_sd(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

PlaneGrid to_image(const PlaneGrid& x0) {
  PlaneGrid img = x0;
  img.lo = 0.0;
  img.hi = 1.0;
  return clamp_quantize(img, 256);
}

void check_params(const EmbedParams& p) {
  if (p.g < 1 || p.g > 8) throw Error(ErrorKind::invalid_argument, "g must lie in [1, 8]");
  if (p.n < 1 && p.timesteps.empty()) throw Error(ErrorKind::invalid_argument, "n must be >= 1");
  if (!(p.w > 0 && p.w <= 1)) throw Error(ErrorKind::invalid_argument, "w must lie in (0, 1]");
  if (!(p.margin >= 0 && p.margin < 0.5))
    throw Error(ErrorKind::invalid_argument, "margin must lie in [0, 0.5)");
  if (p.height < 1 || p.width < 1 || p.channels < 1)
    throw Error(ErrorKind::invalid_argument, "bad image shape");
}

ScheduleParams rounded(const ScheduleParams& s) {
  return {s.num_steps, to_f32(s.a_at_T), to_f32(s.a_at_1), to_f32(s.sigma)};
}

std::vector<int> resolve_timesteps(const EmbedParams& p, const Trajectory& clean,
                                   const std::vector<double>& p_B, TimestepCostTable& table) {
  if (!p.timesteps.empty()) {
    std::vector<int> ts = p.timesteps;
    std::sort(ts.rbegin(), ts.rend());
    if (std::adjacent_find(ts.begin(), ts.end()) != ts.end())
      throw Error(ErrorKind::invalid_argument, "duplicate timesteps");
    if (ts.back() < 1 || ts.front() > p.schedule.num_steps)
      throw Error(ErrorKind::invalid_argument, "timestep outside the schedule");
    return ts;
  }
  table = score_timesteps(clean, p.g, p_B, p.window, p.amplify);
  return select_subset(table, p.n);
}

// decoded symbols of every level for a placed plane, flattened level-major
std::vector<std::uint32_t> decode_flat(std::span<const double> z, std::span<const NestLevel> lv,
                                       double margin) {
  auto d = decode_levels(z, lv, margin);
  std::vector<std::uint32_t> flat;
  for (auto& v : d) flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

// keyed slot order over the padded stream: slot j carries stream symbol order[j]
std::vector<std::size_t> scatter_order(std::uint64_t seed, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const KeyedRng rng(seed, "scatter");
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.bits64(i) % i]);
  return order;
}

bool element_matches(const std::vector<std::vector<std::uint32_t>>& a,
                     const std::vector<std::vector<std::uint32_t>>& b, std::size_t e) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k][e] != b[k][e]) return false;
  return true;
}

}  // namespace

PgdResult guarded_refine(std::span<const double> z, int height, int width,
                         std::span<const NestLevel> levels, double margin, const RefineConfig& cfg,
                         std::size_t* reverted) {
  PlaneGrid tg(height, width, 1, kStateLo, kStateHi);
  tg.values.assign(z.begin(), z.end());
  auto opt = pgd_optimize(tg, cfg);
  auto& y = opt.y.values;
  const auto ref = decode_levels(z, levels, margin);
  const auto got = decode_levels(y, levels, margin);
  const auto room = decode_margins(z, levels, margin);
  for (std::size_t e = 0; e < y.size(); ++e)
    if (!element_matches(ref, got, e) || std::abs(y[e] - z[e]) > kGuard * room[e]) {
      y[e] = z[e];
      if (reverted) ++*reverted;
    }
  return opt;
}

bool accept_compensation(const PlaneGrid& R, const PlaneGrid& comp, const PlaneGrid& noise,
                         const std::vector<std::vector<NestLevel>>& levels, double w, double margin) {
  const int C = R.channels;
  const std::size_t plane = R.size() / C;
  for (int c = 0; c < C; ++c) {
    std::vector<double> a(plane), b(plane);
    const double kap = levels[c].back().kappa;
    for (std::size_t e = 0; e < plane; ++e) {
      const std::size_t i = e * C + c;
      a[e] = (R.values[i] - (1.0 - w) * noise.values[i]) / w / kap;
      b[e] = (comp.values[i] - (1.0 - w) * noise.values[i]) / w / kap;
    }
    if (decode_flat(a, levels[c], margin) != decode_flat(b, levels[c], margin)) return false;
    const auto room = decode_margins(a, levels[c], margin);
    for (std::size_t e = 0; e < plane; ++e)
      if (std::abs(b[e] - a[e]) > kGuard * room[e]) return false;
  }
  return true;
}

std::size_t capacity_bits(int height, int width, int channels, int g, int n) {
  return static_cast<std::size_t>(height) * width * channels * g * n;
}

double embedding_rate(std::size_t bits, int height, int width) {
  return static_cast<double>(bits) / (static_cast<double>(height) * width);
}

std::vector<std::uint8_t> random_payload(std::uint64_t seed, std::size_t bytes) {
  const KeyedRng rng(seed, "payload");
  std::vector<std::uint8_t> out(bytes);
  for (std::size_t i = 0; i < bytes; ++i) out[i] = static_cast<std::uint8_t>(rng.bits64(i) & 0xFF);
  return out;
}

Trajectory clean_trajectory(const MappingKey& k) {
  const auto target = generate_target(k.master_seed, k.height, k.width, k.channels);
  return run_reverse(k.master_seed, k.schedule.build(), target, HookFn{});
}

TimestepCostTable score_for_params(const EmbedParams& p, const std::vector<double>& p_B) {
  const auto target = generate_target(p.seed, p.height, p.width, p.channels);
  const auto clean = run_reverse(p.seed, rounded(p.schedule).build(), target, HookFn{});
  return score_timesteps(clean, p.g, p_B, p.window, p.amplify);
}

EmbedResult embed(const std::vector<std::uint8_t>& payload, const EmbedParams& p) {
  check_params(p);
  EmbedResult res;
  MappingKey& key = res.key;
  key.master_seed = p.seed;
  key.schedule = rounded(p.schedule);
  key.height = p.height;
  key.width = p.width;
  key.channels = p.channels;
  key.g = p.g;
  key.payload_bytes = payload.size();
  key.w = to_f32(p.w);
  key.margin = to_f32(p.margin);
  key.eps = to_f32(0.25);
  const double w = key.w, m = key.margin;
  const int T = 1 << p.g, C = p.channels;
  const std::size_t E = static_cast<std::size_t>(p.height) * p.width * C;
  const std::size_t plane = E / C;

  const Schedule sched = key.schedule.build();
  const PlaneGrid target = generate_target(p.seed, p.height, p.width, C);
  const Trajectory clean = run_reverse(p.seed, sched, target, HookFn{});
  res.cover = to_image(clean.states.back());

  SymbolStream syms = bytes_to_symbols(payload, p.g);
  const std::size_t fired = (syms.size() + E - 1) / E;
  std::vector<double> p_B(T, 1.0 / T);
  if (syms.size()) {
    const KeyedRng pad(p.seed, "pad");
    const std::size_t real = syms.size();
    for (std::size_t i = real; i < fired * E; ++i)
      syms.symbols.push_back(static_cast<std::uint32_t>(pad.bits64(i) % T));
    res.diag.pad_symbols = syms.size() - real;
    p_B = frequency_table(syms);
  }
  key.timesteps = resolve_timesteps(p, clean, p_B, res.diag.table);
  res.diag.capacity_bits = capacity_bits(p.height, p.width, C, p.g, static_cast<int>(key.timesteps.size()));
  if (fired > key.timesteps.size())
    throw Error(ErrorKind::payload_overflow,
                "payload needs " + std::to_string(fired) + " timesteps, " +
                    std::to_string(key.timesteps.size()) + " available");
  res.diag.fired = fired;
  res.symbols = syms;

  if (fired == 0) {
    res.package.image = res.cover;
    res.package.fingerprint = key_fingerprint(key);
    return res;
  }

  const auto order = scatter_order(p.seed, syms.size());
  std::vector<std::uint32_t> slots(syms.size());
  for (std::size_t j = 0; j < slots.size(); ++j) slots[j] = syms.symbols[order[j]];

  const PlaneGrid N = initial_state(p.seed, p.height, p.width, C);
  std::vector<std::vector<double>> noise(C);
  for (int c = 0; c < C; ++c) noise[c] = plane_std_normal(N, c);
  std::vector<std::vector<NestLevel>> levels(C);
  std::vector<std::vector<double>> cur(C);  // unblended residual plane per channel
  for (int c = 0; c < C; ++c) cur[c] = noise[c];

  std::size_t k = 0;
  const std::vector<int> fired_ts(key.timesteps.begin(), key.timesteps.begin() + fired);
  auto hook = [&](int t, PlaneGrid& x) {
    if (k >= fired_ts.size() || t != fired_ts[k]) return;
    HookKey hk;
    hk.t = t;
    PlaneGrid R(p.height, p.width, C, kStateLo, kStateHi);
    std::vector<std::vector<double>> zhat(C);
    for (int c = 0; c < C; ++c) {
      const auto& V = cur[c];
      NestLevel lv;
      lv.part = snap_partition(build_partition(std::span<const double>(V), p.g));
      lv.sd = to_f32(population_sd(V));
      lv.P = solve_optimal_mapping(weight_costs(build_cost_matrix(V, lv.part), p_B));
      std::vector<std::uint32_t> s(plane);
      for (std::size_t e = 0; e < plane; ++e) s[e] = slots[k * E + e * C + c];
      std::vector<double> z = warp_place(V, lv, s, m);
      levels[c].push_back(lv);
      if (p.refine) {
        RefineConfig cfg = RefineConfig::defaults(lv.part.min_width(), p.lambda);
        cfg.eps = to_f32(key.eps * lv.part.min_width() * std::pow(1.0 - 2.0 * m, k + 1) /
                         std::pow(static_cast<double>(T), static_cast<double>(k)));
        cfg.eta = 1.0 / lipschitz_bound(PlaneGrid(p.height, p.width, 1), {}, p.lambda);
        cfg.max_iters = p.pgd_iters;
        cfg.w = w;
        auto opt = guarded_refine(z, p.height, p.width, levels[c], m, cfg, &res.diag.pgd_reverted);
        if (p.keep_traces) res.diag.pgd_traces.push_back({t, c, std::move(opt.trace)});
        z = std::move(opt.y.values);
      }
      levels[c].back().kappa = to_f32(variance_matched_kappa(z, noise[c], w));
      const double kap = levels[c].back().kappa;
      for (auto& v : z) v *= kap;
      for (std::size_t e = 0; e < plane; ++e)
        R.values[e * C + c] = w * z[e] + (1.0 - w) * noise[c][e];
      zhat[c] = std::move(z);
      hk.channels.push_back(levels[c].back());
    }
    if (p.compensate && p.height % 8 == 0 && p.width % 8 == 0) {
      auto cres = dtams::compensate(roundtrip_transform(R), R, p.comp);
      if (p.keep_traces) res.diag.comp_traces.push_back({t, std::move(cres.trace)});
      auto comp = std::move(cres.x);
      const bool ok = accept_compensation(R, comp, N, levels, w, m);
      if (ok) {
        R = std::move(comp);
        for (int c = 0; c < C; ++c)
          for (std::size_t e = 0; e < plane; ++e)
            zhat[c][e] = (R.values[e * C + c] - (1.0 - w) * noise[c][e]) / w;
      } else {
        ++res.diag.compensation_fallbacks;
      }
    }
    const double s = sched.residual_share(t);
    for (std::size_t i = 0; i < E; ++i) x.values[i] = (1.0 - s) * target.values[i] + s * R.values[i];
    for (int c = 0; c < C; ++c) cur[c] = std::move(zhat[c]);
    key.hooks.push_back(std::move(hk));
    ++k;
  };
  Trajectory stego = run_reverse(p.seed, sched, target, hook);
  res.package.image = to_image(stego.states.back());
  if (p.keep_traces) res.diag.trajectory = std::move(stego);
  key.validate();
  res.package.fingerprint = key_fingerprint(key);
  return res;
}

ExtractResult extract(const StegoPackage& pkg, const MappingKey& key, const ExtractOptions& opt) {
  key.validate();
  if (opt.check_fingerprint && !pkg.fingerprint.empty() && pkg.fingerprint != key_fingerprint(key))
    throw Error(ErrorKind::fingerprint_mismatch, "stego fingerprint does not match the key");
  const PlaneGrid& img = pkg.image;
  if (img.height != key.height || img.width != key.width || img.channels != key.channels)
    throw Error(ErrorKind::shape_mismatch, "stego shape differs from the key");
  ExtractResult out;
  out.symbols.g = key.g;
  if (key.hooks.empty()) {
    out.payload = symbols_to_bytes(out.symbols, key.payload_bytes);
    return out;
  }
  const Schedule sched = key.schedule.build();
  const PlaneGrid target = generate_target(key.master_seed, key.height, key.width, key.channels);
  const PlaneGrid N = initial_state(key.master_seed, key.height, key.width, key.channels);
  const int t_min = key.hooks.back().t;
  const PlaneGrid xt = invert_to_timestep(img, t_min, key.master_seed, sched, target);
  const double s = sched.residual_share(t_min), w = key.w;
  const int C = key.channels;
  const std::size_t E = img.size(), plane = E / C, F = key.hooks.size();
  std::vector<std::uint32_t> slots(F * E, 0);
  for (int c = 0; c < C; ++c) {
    std::vector<NestLevel> lv;
    for (const auto& h : key.hooks) lv.push_back(h.channels[c]);
    std::vector<double> z(plane);
    for (std::size_t e = 0; e < plane; ++e) {
      const std::size_t i = e * C + c;
      const double u = (xt.values[i] - (1.0 - s) * target.values[i]) / s;
      z[e] = (u - (1.0 - w) * N.values[i]) / w / lv.back().kappa;
    }
    const auto dec = decode_levels(z, lv, key.margin, &out.erasures);
    for (std::size_t k = 0; k < F; ++k)
      for (std::size_t e = 0; e < plane; ++e) slots[k * E + e * C + c] = dec[k][e];
  }
  const auto order = scatter_order(key.master_seed, slots.size());
  out.symbols.symbols.assign(slots.size(), 0);
  for (std::size_t j = 0; j < slots.size(); ++j) out.symbols.symbols[order[j]] = slots[j];
  out.payload = symbols_to_bytes(out.symbols, key.payload_bytes);
  return out;
}

void write_stego(const std::string& path, const StegoPackage& pkg) {
  write_pnm(path, pkg.image, pkg.fingerprint.empty() ? "" : kFingerprintTag + pkg.fingerprint);
}

StegoPackage read_stego(const std::string& path) {
  auto f = read_pnm(path);
  StegoPackage pkg;
  pkg.image = std::move(f.image);
  const std::string tag = kFingerprintTag;
  if (f.comment.rfind(tag, 0) == 0) pkg.fingerprint = f.comment.substr(tag.size());
  return pkg;
}

namespace {

double payload_accuracy(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  SymbolStream sa, sb;
  sa.g = sb.g = 8;
  sa.symbols.assign(a.begin(), a.end());
  sb.symbols.assign(b.begin(), b.end());
  return extraction_accuracy(sa, sb);
}

template <class F>
void parallel_jobs(std::size_t n, F&& f) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(n); ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<SweepRow> sweep_capacity(const EmbedParams& base, int n_lo, int n_hi,
                                     const std::vector<std::uint64_t>& seeds) {
  if (n_lo < 0 || n_hi < n_lo || seeds.empty())
    throw Error(ErrorKind::invalid_argument, "bad sweep range");
  std::vector<SweepRow> rows;
  for (int n = n_lo; n <= n_hi; ++n) {
    const std::size_t S = seeds.size();
    std::vector<double> er(S), ma(S), ps(S), ss(S), ac(S);
    parallel_jobs(S, [&](std::size_t i) {
      EmbedParams p = base;
      p.seed = seeds[i];
      p.n = std::max(n, 1);
      p.timesteps.clear();
      const std::size_t bits = n ? capacity_bits(p.height, p.width, p.channels, p.g, n) : 0;
      const auto payload = random_payload(p.seed, bits / 8);
      const auto r = embed(payload, p);
      const auto back = extract(r.package, r.key);
      er[i] = embedding_rate(r.diag.fired * r.package.image.size() * p.g, p.height, p.width);
      ma[i] = mae(r.package.image, r.cover);
      ps[i] = psnr(r.package.image, r.cover);
      ss[i] = ssim(r.package.image, r.cover);
      ac[i] = payload_accuracy(payload, back.payload);
    });
    rows.push_back({n, mean_of(er), mean_of(ma), mean_of(ps), mean_of(ss), mean_of(ac)});
  }
  return rows;
}

std::vector<ReportRow> evaluate(const EmbedParams& base, const std::vector<AttackSpec>& attacks,
                                const std::vector<std::uint64_t>& seeds, std::size_t payload_bytes) {
  if (seeds.empty()) throw Error(ErrorKind::invalid_argument, "no seeds");
  for (const auto& a : attacks) a.validate();
  const std::size_t S = seeds.size(), A = attacks.size();
  const std::size_t bytes =
      payload_bytes ? payload_bytes : capacity_bits(base.height, base.width, base.channels, base.g, base.n) / 8;
  std::vector<double> acc(S * A), ma(S * A), ps(S * A), ss(S * A), er(S);
  parallel_jobs(S, [&](std::size_t i) {
    EmbedParams p = base;
    p.seed = seeds[i];
    const auto payload = random_payload(p.seed, bytes);
    const auto r = embed(payload, p);
    er[i] = embedding_rate(r.diag.fired * r.package.image.size() * p.g, p.height, p.width);
    for (std::size_t a = 0; a < A; ++a) {
      StegoPackage pkg = r.package;
      pkg.image = apply_attack(r.package.image, attacks[a],
                               KeyedRng(p.seed, "attack/" + attacks[a].name()));
      const auto back = extract(pkg, r.key, {.check_fingerprint = false});
      acc[i * A + a] = payload_accuracy(payload, back.payload);
      ma[i * A + a] = mae(pkg.image, r.cover);
      ps[i * A + a] = psnr(pkg.image, r.cover);
      ss[i * A + a] = ssim(pkg.image, r.cover);
    }
  });
  std::vector<ReportRow> rows;
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<double> x, y, z, q;
    for (std::size_t i = 0; i < S; ++i) {
      x.push_back(acc[i * A + a]);
      y.push_back(ma[i * A + a]);
      z.push_back(ps[i * A + a]);
      q.push_back(ss[i * A + a]);
    }
    rows.push_back({attacks[a], mean_of(x), mean_of(y), mean_of(z), mean_of(q), mean_of(er)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "n,ER_bpp,MAE,PSNR_dB,SSIM,accuracy_pct\n" << std::setprecision(10);
  for (const auto& r : rows)
    os << r.n << "," << r.er << "," << r.mae << "," << r.psnr << "," << r.ssim << "," << r.accuracy << "\n";
}

void write_sweep_markdown(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "| Timesteps | ER (bpp) | MAE | PSNR (dB) | SSIM | Acc (%) |\n|---|---|---|---|---|---|\n";
  os << std::fixed;
  for (const auto& r : rows)
    os << "| " << r.n << " | " << std::setprecision(2) << r.er << " | " << std::setprecision(5) << r.mae
       << " | " << std::setprecision(4) << r.psnr << " | " << r.ssim << " | " << std::setprecision(3)
       << r.accuracy << " |\n";
  os << std::defaultfloat;
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "attack,accuracy_pct,MAE,PSNR_dB,SSIM,ER_bpp\n" << std::setprecision(10);
  for (const auto& r : rows)
    os << r.attack.name() << "," << r.accuracy << "," << r.mae << "," << r.psnr << "," << r.ssim << ","
       << r.er << "\n";
}

void write_report_markdown(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "| Distortion | Ratio | Acc (%) | MAE | PSNR (dB) | SSIM |\n|---|---|---|---|---|---|\n";
  os << std::fixed;
  for (const auto& r : rows) {
    const auto name = r.attack.name();
    const auto colon = name.find(':');
    os << "| " << name.substr(0, colon) << " | " << (colon == std::string::npos ? "-" : name.substr(colon + 1))
       << " | " << std::setprecision(3) << r.accuracy << " | " << std::setprecision(5) << r.mae << " | "
       << std::setprecision(4) << r.psnr << " | " << r.ssim << " |\n";
  }
  os << std::defaultfloat;
}

}  // namespace dtams
