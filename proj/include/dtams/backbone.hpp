#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dtams/grid.hpp"
#include "dtams/rng.hpp"

namespace dtams {

// Per-timestep coefficients, index t-1 for timestep t in [1, T].
struct Schedule {
  int num_steps = 0;
  std::vector<double> alpha;
  std::vector<double> sigma;

  double a(int t) const { return alpha[t - 1]; }
  double s(int t) const { return sigma[t - 1]; }
  void validate() const;

  // a_t linear from a_at_1 (t = 1) to a_at_T (t = T); constant sigma
  static Schedule linear(int num_steps, double a_at_T, double a_at_1,
                         double sigma = 0.0);
  // a_t from 0.998 (t = 100) down to 0.96 (t = 1), sigma = 0
  static Schedule standard();

  // prod_{k=1..t} a_k : gain from X_t to X_0
  double gain_to_zero(int t) const;
  // prod_{k=t+1..T} a_k : surviving share of X_T in the clean X_t
  double residual_share(int t) const;
};

struct Trajectory {
  std::vector<PlaneGrid> states;  // X_T first, X_0 last
  Schedule schedule;
  std::uint64_t seed = 0;
  std::string target_id;

  const PlaneGrid& at(int t) const { return states[schedule.num_steps - t]; }
  PlaneGrid& at(int t) { return states[schedule.num_steps - t]; }
};

PlaneGrid generate_target(std::uint64_t seed, int height, int width,
                          int channels);

PlaneGrid transition_step(const PlaneGrid& x_t, int t, const Schedule& sched,
                          const KeyedRng& rng, const PlaneGrid& target);
PlaneGrid transition_step_serial(const PlaneGrid& x_t, int t,
                                 const Schedule& sched, const KeyedRng& rng,
                                 const PlaneGrid& target);
std::string noise_label(int t);

PlaneGrid initial_state(std::uint64_t seed, int h, int w, int c);

using HookFn = std::function<void(int t, PlaneGrid& state)>;

Trajectory run_reverse(std::uint64_t seed, const Schedule& sched,
                       const PlaneGrid& target,
                       const std::map<int, PlaneGrid>& residual_hooks = {});
// hook callback runs at every timestep and may overwrite the state in place
Trajectory run_reverse(std::uint64_t seed, const Schedule& sched,
                       const PlaneGrid& target, const HookFn& hook);

PlaneGrid invert_to_timestep(const PlaneGrid& x0, int t, std::uint64_t seed,
                             const Schedule& sched, const PlaneGrid& target);

// "DTTJ", u32 T, u64 seed, u32 H, W, C, (T+1) grid payloads (X_T first),
// then alpha[T] and sigma[T] as f32
void save_trajectory(const std::string& path, const Trajectory& traj);
Trajectory load_external_trajectory(const std::string& path);

}  // namespace dtams
