#pragma once

// Learned relocation of idle and newly entered vehicles: state encoding, the
// relative action neighbourhood, the shaped reward, experience replay with a
// DQN learner, zone ranking for pricing, and the non-learned baseline policies.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetsim/city.hpp"
#include "fleetsim/demand.hpp"
#include "fleetsim/fleet.hpp"
#include "fleetsim/pricing.hpp"
#include "fleetsim/qnet.hpp"
#include "fleetsim/random.hpp"

namespace fleetsim {

// ---- state ---------------------------------------------------------------

// [x, y, free seats, free trunk, supply[k][zone]..., demand[k][zone]...]
struct StateLayout {
  int width = 1;
  int height = 1;
  int horizon = 1;

  int zones() const { return width * height; }
  std::size_t size() const { return 4 + 2 * block(); }
  std::size_t block() const { return static_cast<std::size_t>(horizon) * zones(); }
  std::size_t supply_offset() const { return 4; }
  std::size_t demand_offset() const { return 4 + block(); }

  // "grid=WxH horizon=T features=N"
  std::string describe() const;
  friend bool operator==(const StateLayout&, const StateLayout&) = default;
};

// Multipliers that bring the forecast blocks to order-one magnitudes.
struct FeatureScale {
  double supply = 1.0;
  double demand = 1.0;
};

struct StateInputs {
  ZoneId zone = 0;
  double seat_fraction = 0.0;   // free seats / seat capacity
  double trunk_fraction = 0.0;  // free trunk / trunk capacity
};

// Throws invalid_argument when the forecasts disagree with the layout.
std::vector<double> encode_state(const StateLayout& layout, const StateInputs& vehicle,
                                 const SupplyForecast& supply, const DemandForecast& demand,
                                 const FeatureScale& scale);

struct DecodedState {
  StateInputs vehicle;
  SupplyForecast supply;
  DemandForecast demand;
};

DecodedState decode_state(const StateLayout& layout, std::span<const double> features,
                          const FeatureScale& scale);

// Overwrites the coordinate block with zone z's normalized center.
void set_state_zone(const StateLayout& layout, std::span<double> features, ZoneId z);

// ---- actions -------------------------------------------------------------

using ActionMask = std::uint64_t;  // bit a set when action a is valid

// Relative moves within a (2r+1)x(2r+1) block centred on the vehicle's zone.
// Action index is row-major over the block, so for a fixed origin a larger
// index always means a larger target zone id.
class ActionSpace {
 public:
  ActionSpace() = default;
  ActionSpace(int width, int height, int radius = 3);

  int size() const { return side_ * side_; }
  int radius() const { return radius_; }

  // nullopt when the move leaves the grid.
  std::optional<ZoneId> target(ZoneId from, int action) const;
  ActionMask valid(ZoneId from) const;
  int stay_action() const { return radius_ * side_ + radius_; }

 private:
  int width_ = 1;
  int height_ = 1;
  int radius_ = 0;
  int side_ = 1;
};

// Greedy over valid actions with the lowest index winning ties; with
// probability epsilon a uniformly random valid action instead. Draws from
// `rng` only when epsilon > 0.
int select_action(std::span<const double> q_values, ActionMask valid, double epsilon, Rng& rng);
int select_action(const Mlp& q, std::span<const double> state, ActionMask valid, double epsilon, Rng& rng);

// ---- reward --------------------------------------------------------------

struct RewardWeights {
  double service = 1.0;     // beta1, per passenger served or package carried
  double detour = 0.1;      // beta2, per minute of detour
  double delay = 0.1;       // beta3, per weighted minute of extra travel
  double profit = 0.5;      // beta4, per unit of money
  double activation = 1.0;  // beta5, per vehicle that becomes utilized
  double gamma = 0.95;      // per-minute discount
  double passenger_urgency = 1.0;
  double goods_urgency = 0.5;
  // Restores the signs as printed: profit penalized, activation rewarded.
  bool printed_signs = false;
};

struct StepSummary {
  int served = 0;               // b: passengers picked up
  int packages = 0;             // p: packages picked up
  double detour_min = 0.0;      // c
  double weighted_delay = 0.0;  // sum over orders of urgency * extra minutes
  double profit = 0.0;          // P: revenue minus fuel
  bool was_active = false;      // e_{t-1}
  bool is_active = false;       // e_t

  StepSummary& operator+=(const StepSummary& other);
};

struct RewardBreakdown {
  double service = 0.0;
  double detour = 0.0;
  double delay = 0.0;
  double profit = 0.0;
  double activation = 0.0;
  double total = 0.0;
};

RewardBreakdown compute_reward(const StepSummary& s, const RewardWeights& w);

// ---- replay and learning -------------------------------------------------

struct Transition {
  std::vector<float> state;
  int action = 0;
  double reward = 0.0;
  std::vector<float> next_state;
  ActionMask next_valid = 0;
  double discount = 0.0;  // 0 for terminal transitions
};

// Bounded FIFO; at(0) is the oldest surviving transition.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  const Transition& at(std::size_t i) const { return items_[i]; }

  void push(Transition t);

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

enum class OptimizerKind { adam, sgd };

struct DqnConfig {
  std::vector<int> hidden{64, 64};
  double learning_rate = 5e-4;
  OptimizerKind optimizer = OptimizerKind::adam;
  int batch_size = 32;
  std::size_t replay_capacity = 5000;
  std::size_t min_replay = 256;  // transitions collected before training starts
  int train_interval = 4;        // simulation steps between gradient steps
  int target_sync = 250;         // gradient steps between target-network copies
  double grad_clip = 10.0;       // global norm; <= 0 disables
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of the training run
};

// Linear decay from start to end over the first `decay_fraction` of training.
double epsilon_at(const DqnConfig& config, double progress);

// Mean squared TD error over the batch. y = r + discount * max over valid
// next actions of the target network (y = r when the mask is empty or the
// discount is zero). When `grad` is non-empty, adds the gradient with respect
// to the online parameters, holding y fixed.
double td_loss(const Mlp& online, const Mlp& target, std::span<const Transition* const> batch,
               std::span<double> grad = {});

class DqnLearner {
 public:
  DqnLearner(Mlp network, DqnConfig config);

  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  const DqnConfig& config() const { return config_; }
  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  long steps() const { return steps_; }

  // One optimizer step on the batch; returns the loss before the step.
  double train_step(std::span<const Transition* const> batch);

  // Samples a batch from replay once it holds min_replay transitions.
  std::optional<double> train_from_replay(Rng& rng);

  void sync_target() { target_ = online_; }

 private:
  DqnConfig config_;
  Mlp online_;
  Mlp target_;
  Adam adam_;
  ReplayBuffer replay_;
  long steps_ = 0;
  std::vector<double> grad_;
};

// ---- ranking and dispatch -------------------------------------------------

// value(z) = max over valid actions of Q(template with own zone = z); zones in
// descending value, ties to the lower id; the first `top_count` form L.
HotspotRanking rank_zones(const Mlp& q, const StateLayout& layout, std::span<const double> state_template,
                          const ActionSpace& actions, int top_count);

struct DispatchRequest {
  VehicleId vehicle = 0;
  ZoneId zone = 0;
  std::vector<double> state;
};

struct DispatchDecision {
  VehicleId vehicle = 0;
  int action = 0;
  ZoneId target = 0;
};

// Each vehicle decides on its own state, unaware of the others' choices.
std::vector<DispatchDecision> dispatch_idle(std::span<const DispatchRequest> requests, const Mlp& q,
                                            const ActionSpace& actions, double epsilon, Rng& rng);

enum class PolicyKind { dqn, random, nearest_demand };

struct PolicySpec {
  PolicyKind kind = PolicyKind::random;
  std::filesystem::path checkpoint;  // dqn only
};

// "random", "nearest-demand" or "dqn:<checkpoint path>".
PolicySpec parse_policy(const std::string& text);
std::string to_string(const PolicySpec& spec);

// Uniform over the valid neighbourhood.
int random_action(ZoneId from, const ActionSpace& actions, Rng& rng);

// Neighbourhood zone with the largest forecast demand surplus over supply
// summed across the horizon; ties to the nearer zone, then the lower id.
int nearest_demand_action(ZoneId from, const ActionSpace& actions, const SupplyForecast& supply,
                          const DemandForecast& demand, const RoadGraph& graph);

// ---- checkpoints ---------------------------------------------------------

void save_checkpoint(std::ostream& out, const Mlp& q, const StateLayout& layout, int action_count);
void save_checkpoint(const std::filesystem::path& path, const Mlp& q, const StateLayout& layout,
                     int action_count);

// Throws Error(layout) naming both layouts when the file was written for a
// different grid, horizon or action set; Error(schema) when malformed.
Mlp load_checkpoint(std::istream& in, const StateLayout& layout, int action_count);
Mlp load_checkpoint(const std::filesystem::path& path, const StateLayout& layout, int action_count);

}  // namespace fleetsim
