#include "dtams/backbone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "dtams/error.hpp"

namespace dtams {

void Schedule::validate() const {
  if (num_steps <= 0) throw Error(ErrorKind::invalid_argument, "schedule needs T >= 1");
  if (alpha.size() != static_cast<std::size_t>(num_steps) ||
      sigma.size() != static_cast<std::size_t>(num_steps))
    throw Error(ErrorKind::invalid_argument, "schedule arrays must have length T");
  for (int t = 1; t <= num_steps; ++t) {
    if (!(a(t) >= 0.0 && a(t) <= 1.0))
      throw Error(ErrorKind::invalid_argument, "a_t must lie in [0, 1]");
    if (!(s(t) >= 0.0)) throw Error(ErrorKind::invalid_argument, "sigma_t must be >= 0");
  }
}

Schedule Schedule::linear(int num_steps, double a_at_T, double a_at_1, double sigma) {
  Schedule s;
  s.num_steps = num_steps;
  s.alpha.resize(num_steps);
  s.sigma.assign(num_steps, sigma);
  for (int t = 1; t <= num_steps; ++t) {
    const double f = num_steps == 1 ? 0.0 : double(t - 1) / (num_steps - 1);
    s.alpha[t - 1] = a_at_1 + (a_at_T - a_at_1) * f;
  }
  return s;
}

Schedule Schedule::standard() { return linear(100, 0.998, 0.96, 0.0); }

double Schedule::gain_to_zero(int t) const {
  double g = 1.0;
  for (int k = 1; k <= t; ++k) g *= a(k);
  return g;
}

double Schedule::residual_share(int t) const {
  double g = 1.0;
  for (int k = t + 1; k <= num_steps; ++k) g *= a(k);
  return g;
}

PlaneGrid generate_target(std::uint64_t seed, int height, int width, int channels) {
  PlaneGrid img(height, width, channels, 0.0, 1.0);
  const KeyedRng rng(seed, "target");
  std::uint64_t k = 0;
  auto u = [&](double a, double b) { return a + (b - a) * rng.uniform(k++); };
  struct Wave { double fx, fy, ph, amp; };
  struct Blob { double cx, cy, r, amp; };
  for (int c = 0; c < channels; ++c) {
    Wave waves[3];
    Blob blobs[3];
    for (auto& wv : waves) wv = {u(-2.5, 2.5), u(-2.5, 2.5), u(0, 2 * std::numbers::pi), u(0.3, 1.0)};
    for (auto& b : blobs) b = {u(0.1, 0.9), u(0.1, 0.9), u(0.08, 0.3), u(-1.0, 1.0)};
    for (int h = 0; h < height; ++h)
      for (int w = 0; w < width; ++w) {
        const double y = (h + 0.5) / height, x = (w + 0.5) / width;
        double v = 0.0;
        for (const auto& wv : waves)
          v += wv.amp * std::sin(2 * std::numbers::pi * (wv.fx * x + wv.fy * y) + wv.ph);
        for (const auto& b : blobs) {
          const double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
          v += b.amp * std::exp(-d2 / (2 * b.r * b.r));
        }
        img.at(h, w, c) = v;
      }
  }
  const auto [mn, mx] = std::minmax_element(img.values.begin(), img.values.end());
  const double lo = *mn, span = *mx - *mn;
  for (auto& v : img.values) v = span > 0 ? 0.3 + 0.4 * (v - lo) / span : 0.5;
  return img;
}

std::string noise_label(int t) { return "noise/t=" + std::to_string(t); }

static void check_t(int t, const Schedule& sched) {
  if (t < 1 || t > sched.num_steps)
    throw Error(ErrorKind::invalid_argument, "timestep outside [1, T]");
}

PlaneGrid transition_step(const PlaneGrid& x_t, int t, const Schedule& sched,
                          const KeyedRng& rng, const PlaneGrid& target) {
  check_t(t, sched);
  require_same_shape(x_t, target, "transition_step");
  const double a = sched.a(t), s = sched.s(t);
  PlaneGrid out = x_t;
  const long n = static_cast<long>(x_t.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    double v = a * x_t.values[i] + (1.0 - a) * target.values[i];
    if (s != 0.0) v += s * rng.normal(static_cast<std::uint64_t>(i));
    out.values[i] = v;
  }
  return out;
}

PlaneGrid transition_step_serial(const PlaneGrid& x_t, int t, const Schedule& sched,
                                 const KeyedRng& rng, const PlaneGrid& target) {
  check_t(t, sched);
  require_same_shape(x_t, target, "transition_step");
  const double a = sched.a(t), s = sched.s(t);
  PlaneGrid out = x_t;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    double v = a * x_t.values[i] + (1.0 - a) * target.values[i];
    if (s != 0.0) v += s * rng.normal(i);
    out.values[i] = v;
  }
  return out;
}

PlaneGrid initial_state(std::uint64_t seed, int h, int w, int c) {
  return sample_standard_normal(KeyedRng(seed, "init"), h, w, c);
}

Trajectory run_reverse(std::uint64_t seed, const Schedule& sched, const PlaneGrid& target,
                       const HookFn& hook) {
  sched.validate();
  Trajectory traj;
  traj.schedule = sched;
  traj.seed = seed;
  traj.states.reserve(sched.num_steps + 1);
  PlaneGrid x = initial_state(seed, target.height, target.width, target.channels);
  for (int t = sched.num_steps; t >= 1; --t) {
    if (hook) hook(t, x);
    traj.states.push_back(x);
    x = transition_step(x, t, sched, KeyedRng(seed, noise_label(t)), target);
  }
  traj.states.push_back(std::move(x));
  return traj;
}

Trajectory run_reverse(std::uint64_t seed, const Schedule& sched, const PlaneGrid& target,
                       const std::map<int, PlaneGrid>& residual_hooks) {
  for (const auto& [t, g] : residual_hooks) {
    check_t(t, sched);
    require_same_shape(g, target, "run_reverse hook");
  }
  if (residual_hooks.empty()) return run_reverse(seed, sched, target, HookFn{});
  return run_reverse(seed, sched, target, [&](int t, PlaneGrid& x) {
    auto it = residual_hooks.find(t);
    if (it != residual_hooks.end()) x = it->second;
  });
}

PlaneGrid invert_to_timestep(const PlaneGrid& x0, int t, std::uint64_t seed,
                             const Schedule& sched, const PlaneGrid& target) {
  require_same_shape(x0, target, "invert_to_timestep");
  if (t < 0 || t > sched.num_steps)
    throw Error(ErrorKind::invalid_argument, "timestep outside [0, T]");
  for (int k = 1; k <= t; ++k)
    if (sched.a(k) == 0.0) throw Error(ErrorKind::non_invertible, "a_t = 0 in inverted range");
  PlaneGrid x = x0;
  x.lo = kStateLo;
  x.hi = kStateHi;
  if (t == 0) return x0;
  for (int k = 1; k <= t; ++k) {
    const double a = sched.a(k), s = sched.s(k);
    const KeyedRng rng(seed, noise_label(k));
    const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
      double v = x.values[i] - (1.0 - a) * target.values[i];
      if (s != 0.0) v -= s * rng.normal(static_cast<std::uint64_t>(i));
      x.values[i] = v / a;
    }
  }
  return x;
}

namespace {

void put_bytes(std::ostream& os, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

bool get_bytes(std::istream& is, std::uint64_t& v, int n) {
  v = 0;
  for (int i = 0; i < n; ++i) {
    const int ch = is.get();
    if (ch == EOF) return false;
    v |= static_cast<std::uint64_t>(ch & 0xFF) << (8 * i);
  }
  return true;
}

}  // namespace

void save_trajectory(const std::string& path, const Trajectory& traj) {
  const auto& s = traj.schedule;
  if (traj.states.size() != static_cast<std::size_t>(s.num_steps + 1))
    throw Error(ErrorKind::state_count_mismatch, "trajectory needs T+1 states");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path);
  const auto& g0 = traj.states.front();
  os.write("DTTJ", 4);
  put_bytes(os, s.num_steps, 4);
  put_bytes(os, traj.seed, 8);
  put_bytes(os, g0.height, 4);
  put_bytes(os, g0.width, 4);
  put_bytes(os, g0.channels, 4);
  for (const auto& g : traj.states) write_grid_payload(os, g);
  for (double a : s.alpha) put_bytes(os, std::bit_cast<std::uint32_t>(static_cast<float>(a)), 4);
  for (double v : s.sigma) put_bytes(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
  if (!os) throw Error(ErrorKind::io, "write failed: " + path);
}

Trajectory load_external_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "DTTJ", 4) != 0)
    throw Error(ErrorKind::malformed_header, "not a DTTJ trajectory file");
  std::uint64_t T, seed, h, w, c;
  if (!get_bytes(is, T, 4) || !get_bytes(is, seed, 8) || !get_bytes(is, h, 4) ||
      !get_bytes(is, w, 4) || !get_bytes(is, c, 4))
    throw Error(ErrorKind::malformed_header, "truncated trajectory header");
  if (T == 0 || h == 0 || w == 0 || c == 0 || T > 100000)
    throw Error(ErrorKind::malformed_header, "bad trajectory header fields");
  Trajectory traj;
  traj.seed = seed;
  traj.target_id = "external";
  traj.schedule.num_steps = static_cast<int>(T);
  for (std::uint64_t i = 0; i <= T; ++i) {
    PlaneGrid g(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), kStateLo, kStateHi);
    try {
      read_grid_payload(is, g);
    } catch (const Error&) {
      throw Error(ErrorKind::state_count_mismatch,
                  "trajectory holds " + std::to_string(i) + " of " + std::to_string(T + 1) + " states");
    }
    traj.states.push_back(std::move(g));
  }
  auto read_arr = [&](std::vector<double>& arr) {
    arr.resize(T);
    for (auto& v : arr) {
      std::uint64_t u;
      if (!get_bytes(is, u, 4)) throw Error(ErrorKind::state_count_mismatch, "truncated schedule");
      v = std::bit_cast<float>(static_cast<std::uint32_t>(u));
    }
  };
  read_arr(traj.schedule.alpha);
  read_arr(traj.schedule.sigma);
  return traj;
}

}  // namespace dtams
