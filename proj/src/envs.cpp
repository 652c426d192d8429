#include "smbne/envs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace smbne {

namespace {

// CartPole-v1 constants
constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kTotalMass = kMassCart + kMassPole;
constexpr double kHalfPoleLength = 0.5;
constexpr double kPoleMassLength = kMassPole * kHalfPoleLength;
constexpr double kForceMag = 10.0;
constexpr double kTau = 0.02;
constexpr double kPositionLimit = 2.4;
constexpr double kAngleLimit = 12.0 * 2.0 * M_PI / 360.0;

// MountainCar-v0 constants
constexpr double kMcForce = 0.001;
constexpr double kMcGravity = 0.0025;
constexpr double kMcMinPos = -1.2;
constexpr double kMcMaxPos = 0.6;
constexpr double kMcMaxSpeed = 0.07;
constexpr double kMcGoal = 0.5;

}  // namespace

EnvSpec EnvSpec::by_name(const std::string& name) {
  if (name == "cartpole") return cartpole();
  if (name == "mountaincar") return mountain_car();
  throw std::invalid_argument("unknown environment: " + name);
}

const char* EnvSpec::name() const {
  return id == EnvId::CartPole ? "cartpole" : "mountaincar";
}

CgpConfig EnvSpec::default_cgp_config() const {
  return id == EnvId::CartPole ? CgpConfig::cartpole() : CgpConfig::mountain_car();
}

EnvState reset(const EnvSpec& spec, Rng& rng) {
  EnvState s;
  if (spec.id == EnvId::CartPole) {
    for (int i = 0; i < 4; ++i) s.v[i] = rng.uniform(-0.05, 0.05);
  } else {
    s.v[0] = rng.uniform(-0.6, -0.4);
    s.v[1] = 0.0;
  }
  return s;
}

StepOutcome step(const EnvSpec& spec, const EnvState& s, int action) {
  if (action < 0 || action >= spec.action_count)
    throw std::invalid_argument("invalid action index");
  StepOutcome out;
  if (spec.id == EnvId::CartPole) {
    double x = s.v[0], x_dot = s.v[1], theta = s.v[2], theta_dot = s.v[3];
    const double force = action == 1 ? kForceMag : -kForceMag;
    const double cos_theta = std::cos(theta);
    const double sin_theta = std::sin(theta);
    const double temp =
        (force + kPoleMassLength * theta_dot * theta_dot * sin_theta) / kTotalMass;
    const double theta_acc =
        (kGravity * sin_theta - cos_theta * temp) /
        (kHalfPoleLength * (4.0 / 3.0 - kMassPole * cos_theta * cos_theta / kTotalMass));
    const double x_acc = temp - kPoleMassLength * theta_acc * cos_theta / kTotalMass;
    x += kTau * x_dot;
    x_dot += kTau * x_acc;
    theta += kTau * theta_dot;
    theta_dot += kTau * theta_acc;
    out.state.v = {x, x_dot, theta, theta_dot};
    out.reward = 1.0;
    out.terminated = std::fabs(x) > kPositionLimit || std::fabs(theta) > kAngleLimit;
  } else {
    double position = s.v[0], velocity = s.v[1];
    velocity += (action - 1) * kMcForce - std::cos(3.0 * position) * kMcGravity;
    velocity = std::clamp(velocity, -kMcMaxSpeed, kMcMaxSpeed);
    position += velocity;
    position = std::clamp(position, kMcMinPos, kMcMaxPos);
    if (position <= kMcMinPos && velocity < 0.0) velocity = 0.0;  // left wall
    out.state.v = {position, velocity, 0.0, 0.0};
    out.reward = -1.0;
    out.terminated = position >= kMcGoal;
  }
  return out;
}

std::vector<double> normalize_observation(const EnvSpec& spec, const EnvState& s) {
  std::vector<double> obs(spec.obs_dim);
  if (spec.id == EnvId::CartPole) {
    // Velocities are formally unbounded; divide by a fixed scale and clip.
    static constexpr double scale[4] = {4.8, 10.0, 0.418, 10.0};
    for (int i = 0; i < 4; ++i)
      obs[i] = std::clamp(s.v[i] / scale[i], -1.0, 1.0);
  } else {
    obs[0] = std::clamp((s.v[0] - (kMcMinPos + kMcMaxPos) / 2.0) /
                            ((kMcMaxPos - kMcMinPos) / 2.0),
                        -1.0, 1.0);
    obs[1] = std::clamp(s.v[1] / kMcMaxSpeed, -1.0, 1.0);
  }
  return obs;
}

double fitness_for(const EnvSpec& spec, double total_reward,
                   std::span<const EnvState> raw_trace) {
  if (raw_trace.empty()) throw std::invalid_argument("empty trace");
  if (spec.id == EnvId::CartPole) return -total_reward;
  double max_height = -std::numeric_limits<double>::infinity();
  for (const EnvState& s : raw_trace)
    max_height = std::max(max_height, std::sin(3.0 * s.v[0]) * 0.45 + 0.55);
  return -(max_height + total_reward / 100.0);
}

EpisodeResult run_episode(const EnvSpec& spec, const ActiveNetwork& net, Rng& rng) {
  if (net.num_inputs() != spec.obs_dim ||
      net.num_outputs() != spec.action_count)
    throw std::invalid_argument("network arity does not match environment");
  EpisodeResult ep;
  EnvState state = reset(spec, rng);
  bool goal = false;
  for (int t = 0; t < spec.max_steps; ++t) {
    std::vector<double> obs = normalize_observation(spec, state);
    int action = net.select_action(obs);
    StepOutcome out = step(spec, state, action);
    ep.trace.push_back(std::move(obs));
    ep.raw_trace.push_back(state);
    ep.actions.push_back(action);
    ep.rewards.push_back(out.reward);
    ep.total_reward += out.reward;
    ++ep.steps;
    state = out.state;
    if (out.terminated) {
      goal = true;
      break;
    }
  }
  ep.raw_trace.push_back(state);  // terminal state, counted for maxHeight
  ep.fitness = fitness_for(spec, ep.total_reward, ep.raw_trace);
  ep.solved_flag = spec.id == EnvId::CartPole ? ep.steps == spec.max_steps : goal;
  return ep;
}

bool solved_check(const EnvSpec& spec, const ActiveNetwork& net, Rng& rng) {
  constexpr int kTrials = 100;
  const std::uint64_t base = rng.raw();
  double sum = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng trial_rng = Rng::derive(base, static_cast<std::uint64_t>(trial));
    sum += run_episode(spec, net, trial_rng).total_reward;
  }
  const double mean = sum / kTrials;
  return spec.id == EnvId::CartPole ? mean >= 195.0 : mean > -110.0;
}

std::string trace_to_csv(const EnvSpec& spec, const EpisodeResult& episode) {
  std::ostringstream os;
  os << "step";
  for (int d = 1; d <= spec.obs_dim; ++d) os << ",obs_" << d;
  os << ",action,reward\n";
  os.precision(17);
  for (int t = 0; t < episode.steps; ++t) {
    os << t;
    for (double x : episode.trace[t]) os << ',' << x;
    os << ',' << episode.actions[t] << ',' << episode.rewards[t] << '\n';
  }
  return os.str();
}

}  // namespace smbne
