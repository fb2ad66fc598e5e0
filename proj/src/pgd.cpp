#include "dtams/pgd.hpp"

#include <algorithm>
#include <cmath>

#include "dtams/error.hpp"

namespace dtams {

RefineConfig RefineConfig::defaults(double min_interval_width, double lambda) {
  RefineConfig c;
  c.lambda = lambda;
  c.eps = 0.25 * min_interval_width;
  c.eta = 1.0 / (2.0 + 8.0 * lambda);
  return c;
}

void RefineConfig::validate() const {
  if (!(lambda >= 0 && eps >= 0 && eta > 0 && max_iters >= 1 && w >= 0 && w <= 1))
    throw Error(ErrorKind::invalid_argument, "invalid refine config");
}

namespace {

bool in_s(const Region& S, std::size_t i) { return S.empty() || S[i]; }

std::size_t count_s(const PlaneGrid& g, const Region& S) {
  if (S.empty()) return g.size();
  if (S.size() != g.size()) throw Error(ErrorKind::shape_mismatch, "region mask size");
  std::size_t n = 0;
  for (char c : S) n += c != 0;
  if (n == 0) throw Error(ErrorKind::invalid_argument, "region S is empty");
  return n;
}

// neighbour mean minus centre
inline double residual_at(const PlaneGrid& y, int h, int w, int c, int& deg) {
  const double x = y.at(h, w, c);
  double s = 0.0;
  deg = 0;
  if (h > 0) { s += y.at(h - 1, w, c) - x; ++deg; }
  if (h + 1 < y.height) { s += y.at(h + 1, w, c) - x; ++deg; }
  if (w > 0) { s += y.at(h, w - 1, c) - x; ++deg; }
  if (w + 1 < y.width) { s += y.at(h, w + 1, c) - x; ++deg; }
  return deg ? s / deg : 0.0;
}

std::vector<double> residuals(const PlaneGrid& y, const Region& S, std::vector<int>& deg) {
  std::vector<double> r(y.size(), 0.0);
  deg.assign(y.size(), 0);
  const long H = y.height;
#pragma omp parallel for schedule(static)
  for (long h = 0; h < H; ++h)
    for (int w = 0; w < y.width; ++w)
      for (int c = 0; c < y.channels; ++c) {
        const std::size_t i = y.index(h, w, c);
        if (in_s(S, i)) r[i] = residual_at(y, h, w, c, deg[i]);
      }
  return r;
}

void accumulate_gradient(const PlaneGrid& y, const PlaneGrid& t, const Region& S, double lambda,
                         const std::vector<double>& r, const std::vector<int>& deg, long h,
                         std::vector<double>& g, double ns) {
  for (int w = 0; w < y.width; ++w)
    for (int c = 0; c < y.channels; ++c) {
      const std::size_t q = y.index(h, w, c);
      double acc = 0.0;
      auto pull = [&](int hh, int ww) {
        const std::size_t i = y.index(hh, ww, c);
        if (in_s(S, i) && deg[i]) acc += r[i] / deg[i];
      };
      if (h > 0) pull(h - 1, w);
      if (h + 1 < y.height) pull(h + 1, w);
      if (w > 0) pull(h, w - 1);
      if (w + 1 < y.width) pull(h, w + 1);
      if (in_s(S, q)) acc -= r[q];
      double gq = 2.0 * lambda * acc / ns;
      if (in_s(S, q)) gq += 2.0 * (y.values[q] - t.values[q]) / ns;
      g[q] = gq;
    }
}

}  // namespace

double smoothness_loss(const PlaneGrid& y, const Region& S, double lambda) {
  const double ns = static_cast<double>(count_s(y, S));
  double acc = 0.0;
  for (int h = 0; h < y.height; ++h)
    for (int w = 0; w < y.width; ++w)
      for (int c = 0; c < y.channels; ++c) {
        const std::size_t i = y.index(h, w, c);
        if (!in_s(S, i)) continue;
        int deg;
        const double d = residual_at(y, h, w, c, deg);
        acc += d * d;
      }
  return lambda * acc / ns;
}

double reconstruction_loss(const PlaneGrid& y, const PlaneGrid& t, const Region& S) {
  require_same_shape(y, t, "reconstruction_loss");
  const double ns = static_cast<double>(count_s(y, S));
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (in_s(S, i)) {
      const double d = y.values[i] - t.values[i];
      acc += d * d;
    }
  return acc / ns;
}

std::vector<double> total_gradient(const PlaneGrid& y, const PlaneGrid& t, const Region& S,
                                   double lambda) {
  require_same_shape(y, t, "total_gradient");
  const double ns = static_cast<double>(count_s(y, S));
  std::vector<int> deg;
  const auto r = residuals(y, S, deg);
  std::vector<double> g(y.size());
  const long H = y.height;
#pragma omp parallel for schedule(static)
  for (long h = 0; h < H; ++h) accumulate_gradient(y, t, S, lambda, r, deg, h, g, ns);
  return g;
}

std::vector<double> total_gradient_serial(const PlaneGrid& y, const PlaneGrid& t,
                                          const Region& S, double lambda) {
  require_same_shape(y, t, "total_gradient");
  const double ns = static_cast<double>(count_s(y, S));
  std::vector<double> r(y.size(), 0.0);
  std::vector<int> deg(y.size(), 0);
  for (int h = 0; h < y.height; ++h)
    for (int w = 0; w < y.width; ++w)
      for (int c = 0; c < y.channels; ++c) {
        const std::size_t i = y.index(h, w, c);
        if (in_s(S, i)) r[i] = residual_at(y, h, w, c, deg[i]);
      }
  std::vector<double> g(y.size());
  for (long h = 0; h < y.height; ++h) accumulate_gradient(y, t, S, lambda, r, deg, h, g, ns);
  return g;
}

double lipschitz_bound(const PlaneGrid& shape, const Region& S, double lambda) {
  count_s(shape, S);
  // ||D||_inf = 2 on every row of S with a neighbour; column sums need the degrees
  std::vector<double> col(shape.size(), 0.0);
  double row_max = 0.0;
  for (int h = 0; h < shape.height; ++h)
    for (int w = 0; w < shape.width; ++w)
      for (int c = 0; c < shape.channels; ++c) {
        const std::size_t i = shape.index(h, w, c);
        if (!in_s(S, i)) continue;
        int nb[4][2], k = 0;
        if (h > 0) { nb[k][0] = h - 1; nb[k++][1] = w; }
        if (h + 1 < shape.height) { nb[k][0] = h + 1; nb[k++][1] = w; }
        if (w > 0) { nb[k][0] = h; nb[k++][1] = w - 1; }
        if (w + 1 < shape.width) { nb[k][0] = h; nb[k++][1] = w + 1; }
        if (k == 0) continue;
        row_max = 2.0;
        col[i] += 1.0;
        for (int m = 0; m < k; ++m) col[shape.index(nb[m][0], nb[m][1], c)] += 1.0 / k;
      }
  const double col_max = col.empty() ? 0.0 : *std::max_element(col.begin(), col.end());
  return 2.0 + 2.0 * lambda * row_max * col_max;
}

PgdResult pgd_optimize(const PlaneGrid& t, const RefineConfig& cfg, const Region& S) {
  cfg.validate();
  const double ns = static_cast<double>(count_s(t, S));
  PgdResult res{t, {}};
  PlaneGrid& y = res.y;
  auto row = [&](int it) {
    const double a = reconstruction_loss(y, t, S), b = smoothness_loss(y, S, cfg.lambda);
    if (!std::isfinite(a + b)) throw Error(ErrorKind::divergence, "non-finite loss in PGD");
    return TraceRow{it, a, b, a + b};
  };
  res.trace.push_back(row(0));
  const long n = static_cast<long>(y.size());
  std::vector<double> prev;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto g = total_gradient(y, t, S, cfg.lambda);
    prev = y.values;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
      const double step = y.values[i] - cfg.eta * ns * g[i];
      y.values[i] = std::clamp(step, t.values[i] - cfg.eps, t.values[i] + cfg.eps);
    }
    const TraceRow r = row(it);
    if (r.total > res.trace.back().total) {
      // converged to rounding level
      y.values = std::move(prev);
      break;
    }
    res.trace.push_back(r);
  }
  return res;
}

PlaneGrid blend_residual(const PlaneGrid& z_hat, const PlaneGrid& z, double w) {
  require_same_shape(z_hat, z, "blend_residual");
  if (!(w >= 0 && w <= 1)) throw Error(ErrorKind::invalid_argument, "w must lie in [0, 1]");
  PlaneGrid out = z_hat;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] = w * z_hat.values[i] + (1.0 - w) * z.values[i];
  return out;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iter,L_rcn,L_sot,total\n";
  os.precision(17);
  for (const auto& r : trace) os << r.iter << "," << r.l_rcn << "," << r.l_sot << "," << r.total << "\n";
}

}  // namespace dtams
