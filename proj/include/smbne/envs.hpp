#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "smbne/cgp.hpp"
#include "smbne/rng.hpp"

namespace smbne {

enum class EnvId { CartPole, MountainCar };

struct EnvSpec {
  EnvId id = EnvId::CartPole;
  int obs_dim = 4;
  int action_count = 2;
  int max_steps = 200;

  static EnvSpec cartpole() { return {EnvId::CartPole, 4, 2, 200}; }
  static EnvSpec mountain_car() { return {EnvId::MountainCar, 2, 3, 200}; }
  static EnvSpec by_name(const std::string& name);
  const char* name() const;
  CgpConfig default_cgp_config() const;
};

// Raw physical variables. CartPole: cart position, cart velocity, pole angle,
// pole angular velocity. MountainCar: position, velocity (rest unused).
struct EnvState {
  std::array<double, 4> v{};
};

struct StepOutcome {
  EnvState state;
  double reward = 0.0;
  bool terminated = false;
};

EnvState reset(const EnvSpec& spec, Rng& rng);
StepOutcome step(const EnvSpec& spec, const EnvState& s, int action);

// Maps raw variables into [-1, 1] per dimension (velocities are clipped).
std::vector<double> normalize_observation(const EnvSpec& spec, const EnvState& s);

struct EpisodeResult {
  double total_reward = 0.0;
  double fitness = 0.0;
  int steps = 0;
  std::vector<std::vector<double>> trace;  // normalized observation per step
  std::vector<EnvState> raw_trace;         // states seen plus the final state
  std::vector<int> actions;
  std::vector<double> rewards;
  bool solved_flag = false;  // episode-level success (full balance / goal hit)
};

EpisodeResult run_episode(const EnvSpec& spec, const ActiveNetwork& net, Rng& rng);

// Minimization-sense fitness. CartPole: -total_reward. MountainCar:
// -(maxHeight + total_reward / 100) with maxHeight over the raw positions.
double fitness_for(const EnvSpec& spec, double total_reward,
                   std::span<const EnvState> raw_trace);

// 100 fresh episodes with per-trial derived seeds. CartPole: mean reward
// >= 195; MountainCar: mean reward > -110.
bool solved_check(const EnvSpec& spec, const ActiveNetwork& net, Rng& rng);

// CSV export: step, obs_1..obs_d (normalized), action, reward.
std::string trace_to_csv(const EnvSpec& spec, const EpisodeResult& episode);

}  // namespace smbne
