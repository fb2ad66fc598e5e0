#include "dtams/compensation.hpp"

#include <algorithm>
#include <cmath>

#include "dtams/error.hpp"

namespace dtams {

void CompensationConfig::validate() const {
  if (!(alpha_p >= 0 && alpha_l >= 0 && alpha_s >= 0 && iters >= 0 && step > 0 && sigma_ref >= 0))
    throw Error(ErrorKind::invalid_argument, "invalid compensation config");
}

namespace {

void check_even(const PlaneGrid& x) {
  if (x.height % 2 || x.width % 2)
    throw Error(ErrorKind::invalid_argument, "roundtrip needs even height and width");
}

inline double quant(double v, double lo, double hi) {
  const double q = std::nearbyint((std::clamp(v, lo, hi) - lo) / (hi - lo) * 255.0);
  return lo + q * (hi - lo) / 255.0;
}

// mid-tread, so a zero detail coefficient survives
inline double quant_detail(double v, double r) {
  const double step = 2.0 * r / 255.0;
  return std::clamp(std::nearbyint(v / step), -127.0, 127.0) * step;
}

void roundtrip_block(const PlaneGrid& x, PlaneGrid& y, int h, int w, int c) {
  const double a = x.at(h, w, c), b = x.at(h, w + 1, c);
  const double d = x.at(h + 1, w, c), e = x.at(h + 1, w + 1, c);
  const double r = x.hi - x.lo;
  const double ll = quant(0.5 * (a + b + d + e), 2 * x.lo, 2 * x.hi);
  const double lh = quant_detail(0.5 * (a - b + d - e), r);
  const double hl = quant_detail(0.5 * (a + b - d - e), r);
  const double hh = quant_detail(0.5 * (a - b - d + e), r);
  y.at(h, w, c) = 0.5 * (ll + lh + hl + hh);
  y.at(h, w + 1, c) = 0.5 * (ll - lh + hl - hh);
  y.at(h + 1, w, c) = 0.5 * (ll + lh - hl - hh);
  y.at(h + 1, w + 1, c) = 0.5 * (ll - lh - hl + hh);
}

void check_blocks(const PlaneGrid& x) {
  if (x.height % 8 || x.width % 8)
    throw Error(ErrorKind::invalid_argument, "semantic term needs dimensions divisible by 8");
}

// per (block, channel) mean differences, raster order
std::vector<double> block_diffs(const PlaneGrid& x, const PlaneGrid& ref) {
  const int bh = x.height / 8, bw = x.width / 8;
  std::vector<double> d(static_cast<std::size_t>(bh) * bw * x.channels, 0.0);
  for (int h = 0; h < x.height; ++h)
    for (int w = 0; w < x.width; ++w)
      for (int c = 0; c < x.channels; ++c)
        d[(static_cast<std::size_t>(h / 8) * bw + w / 8) * x.channels + c] +=
            (x.at(h, w, c) - ref.at(h, w, c)) / 64.0;
  return d;
}

struct Moments {
  double mean, sd;
};

Moments moments(const PlaneGrid& x) {
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x.values) m += v;
  m /= n;
  double s = 0.0;
  for (double v : x.values) s += (v - m) * (v - m);
  return {m, std::sqrt(s / n)};
}

}  // namespace

PlaneGrid roundtrip_transform(const PlaneGrid& x) {
  check_even(x);
  PlaneGrid y = x;
  const long H = x.height / 2;
#pragma omp parallel for schedule(static)
  for (long hb = 0; hb < H; ++hb)
    for (int w = 0; w < x.width; w += 2)
      for (int c = 0; c < x.channels; ++c) roundtrip_block(x, y, 2 * hb, w, c);
  return y;
}

PlaneGrid roundtrip_transform_serial(const PlaneGrid& x) {
  check_even(x);
  PlaneGrid y = x;
  for (int h = 0; h < x.height; h += 2)
    for (int w = 0; w < x.width; w += 2)
      for (int c = 0; c < x.channels; ++c) roundtrip_block(x, y, h, w, c);
  return y;
}

double deviation_pixel(const PlaneGrid& x, const PlaneGrid& ref) {
  require_same_shape(x, ref, "deviation_pixel");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x.values[i] - ref.values[i]) * (x.values[i] - ref.values[i]);
  return s / static_cast<double>(x.size());
}

double deviation_latent(const PlaneGrid& x, double sigma_ref) {
  const auto m = moments(x);
  return m.mean * m.mean + (m.sd - sigma_ref) * (m.sd - sigma_ref);
}

double deviation_semantic(const PlaneGrid& x, const PlaneGrid& ref) {
  require_same_shape(x, ref, "deviation_semantic");
  check_blocks(x);
  const auto d = block_diffs(x, ref);
  double s = 0.0;
  for (double v : d) s += v * v;
  return s / static_cast<double>(d.size());
}

double compensation_loss(const PlaneGrid& x, const PlaneGrid& ref, const CompensationConfig& cfg) {
  return cfg.alpha_p * deviation_pixel(x, ref) + cfg.alpha_l * deviation_latent(x, cfg.sigma_ref) +
         cfg.alpha_s * deviation_semantic(x, ref);
}

std::vector<double> compensation_gradient(const PlaneGrid& x, const PlaneGrid& ref,
                                          const CompensationConfig& cfg) {
  require_same_shape(x, ref, "compensation_gradient");
  check_blocks(x);
  const double n = static_cast<double>(x.size());
  const auto m = moments(x);
  const auto d = block_diffs(x, ref);
  const double nb = static_cast<double>(d.size());
  const int bw = x.width / 8;
  const double sd_coef = m.sd > 0 ? 2.0 * (m.sd - cfg.sigma_ref) / (n * m.sd) : 0.0;
  std::vector<double> g(x.size());
  for (int h = 0; h < x.height; ++h)
    for (int w = 0; w < x.width; ++w)
      for (int c = 0; c < x.channels; ++c) {
        const std::size_t i = x.index(h, w, c);
        const double v = x.values[i];
        const double db = d[(static_cast<std::size_t>(h / 8) * bw + w / 8) * x.channels + c];
        g[i] = cfg.alpha_p * 2.0 * (v - ref.values[i]) / n +
               cfg.alpha_l * (2.0 * m.mean / n + sd_coef * (v - m.mean)) +
               cfg.alpha_s * 2.0 * db / (nb * 64.0);
      }
  return g;
}

CompensationResult compensate(const PlaneGrid& x, const PlaneGrid& ref,
                              const CompensationConfig& cfg) {
  cfg.validate();
  require_same_shape(x, ref, "compensate");
  CompensationResult res{x, {}};
  const double n = static_cast<double>(x.size());
  auto row = [&](int it, const PlaneGrid& y) {
    CompensationRow r{it, deviation_pixel(y, ref), deviation_latent(y, cfg.sigma_ref),
                      deviation_semantic(y, ref), 0.0};
    r.total = cfg.alpha_p * r.d_p + cfg.alpha_l * r.d_l + cfg.alpha_s * r.d_s;
    if (!std::isfinite(r.total)) throw Error(ErrorKind::divergence, "non-finite compensation loss");
    return r;
  };
  res.trace.push_back(row(0, res.x));
  for (int it = 1; it <= cfg.iters; ++it) {
    const auto g = compensation_gradient(res.x, ref, cfg);
    const double prev = res.trace.back().total;
    double step = cfg.step * n;
    PlaneGrid cand = res.x;
    CompensationRow r{};
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
      for (std::size_t i = 0; i < cand.size(); ++i) cand.values[i] = res.x.values[i] - step * g[i];
      r = row(it, cand);
      if (r.total <= prev) {
        accepted = true;
        break;
      }
    }
    if (accepted) {
      res.x = cand;
    } else {
      r = res.trace.back();
      r.iter = it;
    }
    res.trace.push_back(r);
  }
  return res;
}

void write_trace_csv(std::ostream& os, const std::vector<CompensationRow>& trace) {
  os << "iter,D_p,D_l,D_s,L_cm\n";
  os.precision(17);
  for (const auto& r : trace)
    os << r.iter << "," << r.d_p << "," << r.d_l << "," << r.d_s << "," << r.total << "\n";
}

}  // namespace dtams
