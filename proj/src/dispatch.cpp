#include "fleetsim/dispatch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fleetsim/error.hpp"

namespace fleetsim {

// ---- state ---------------------------------------------------------------

std::string StateLayout::describe() const {
  std::ostringstream out;
  out << "grid=" << width << "x" << height << " horizon=" << horizon << " features=" << size();
  return out.str();
}

std::vector<double> encode_state(const StateLayout& layout, const StateInputs& vehicle,
                                 const SupplyForecast& supply, const DemandForecast& demand,
                                 const FeatureScale& scale) {
  if (supply.horizon != layout.horizon || demand.horizon != layout.horizon) {
    throw Error(ErrorKind::invalid_argument, "forecast horizon does not match the state layout");
  }
  if (supply.zones != layout.zones() || demand.zones != layout.zones()) {
    throw Error(ErrorKind::invalid_argument, "forecast zone count does not match the state layout");
  }
  std::vector<double> f(layout.size(), 0.0);
  set_state_zone(layout, f, vehicle.zone);
  f[2] = vehicle.seat_fraction;
  f[3] = vehicle.trunk_fraction;
  for (std::size_t i = 0; i < layout.block(); ++i) {
    f[layout.supply_offset() + i] = supply.counts[i] * scale.supply;
    f[layout.demand_offset() + i] = demand.counts[i] * scale.demand;
  }
  return f;
}

void set_state_zone(const StateLayout& layout, std::span<double> features, ZoneId z) {
  features[0] = (z % layout.width + 0.5) / layout.width;
  features[1] = (z / layout.width + 0.5) / layout.height;
}

DecodedState decode_state(const StateLayout& layout, std::span<const double> features,
                          const FeatureScale& scale) {
  if (features.size() != layout.size()) {
    throw Error(ErrorKind::invalid_argument, "feature vector length does not match the state layout");
  }
  DecodedState d;
  const int col = std::clamp(static_cast<int>(std::floor(features[0] * layout.width)), 0, layout.width - 1);
  const int row = std::clamp(static_cast<int>(std::floor(features[1] * layout.height)), 0, layout.height - 1);
  d.vehicle = {row * layout.width + col, features[2], features[3]};
  d.supply = {layout.horizon, layout.zones(), std::vector<double>(layout.block())};
  d.demand = {layout.horizon, layout.zones(), std::vector<double>(layout.block())};
  for (std::size_t i = 0; i < layout.block(); ++i) {
    d.supply.counts[i] = features[layout.supply_offset() + i] / scale.supply;
    d.demand.counts[i] = features[layout.demand_offset() + i] / scale.demand;
  }
  return d;
}

// ---- actions -------------------------------------------------------------

ActionSpace::ActionSpace(int width, int height, int radius)
    : width_(width), height_(height), radius_(radius), side_(2 * radius + 1) {
  if (radius < 0 || side_ * side_ > 64) {
    throw Error(ErrorKind::invalid_argument, "action radius must be in [0, 3]");
  }
}

std::optional<ZoneId> ActionSpace::target(ZoneId from, int action) const {
  const int col = from % width_ + action % side_ - radius_;
  const int row = from / width_ + action / side_ - radius_;
  if (col < 0 || row < 0 || col >= width_ || row >= height_) return std::nullopt;
  return row * width_ + col;
}

ActionMask ActionSpace::valid(ZoneId from) const {
  ActionMask mask = 0;
  for (int a = 0; a < size(); ++a) {
    if (target(from, a)) mask |= ActionMask{1} << a;
  }
  return mask;
}

int select_action(std::span<const double> q_values, ActionMask valid, double epsilon, Rng& rng) {
  if (valid == 0) throw Error(ErrorKind::invalid_argument, "no valid action");
  if (epsilon > 0.0 && uniform01(rng) < epsilon) {
    std::size_t pick = uniform_index(rng, static_cast<std::size_t>(std::popcount(valid)));
    for (int a = 0; a < 64; ++a) {
      if ((valid >> a & 1) && pick-- == 0) return a;
    }
  }
  int best = -1;
  for (int a = 0; a < static_cast<int>(q_values.size()) && a < 64; ++a) {
    if (!(valid >> a & 1)) continue;
    if (best < 0 || q_values[a] > q_values[best]) best = a;
  }
  return best;
}

int select_action(const Mlp& q, std::span<const double> state, ActionMask valid, double epsilon, Rng& rng) {
  return select_action(q.predict(state), valid, epsilon, rng);
}

// ---- reward --------------------------------------------------------------

StepSummary& StepSummary::operator+=(const StepSummary& o) {
  served += o.served;
  packages += o.packages;
  detour_min += o.detour_min;
  weighted_delay += o.weighted_delay;
  profit += o.profit;
  is_active = o.is_active;
  return *this;
}

RewardBreakdown compute_reward(const StepSummary& s, const RewardWeights& w) {
  RewardBreakdown r;
  const double sign = w.printed_signs ? -1.0 : 1.0;
  const double activated = std::max((s.is_active ? 1.0 : 0.0) - (s.was_active ? 1.0 : 0.0), 0.0);
  r.service = w.service * (s.served + s.packages);
  r.detour = -w.detour * s.detour_min;
  r.delay = -w.delay * s.weighted_delay;
  r.profit = sign * w.profit * s.profit;
  r.activation = -sign * w.activation * activated;
  r.total = r.service + r.detour + r.delay + r.profit + r.activation;
  return r;
}

// ---- replay and learning -------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorKind::invalid_argument, "replay capacity must be >= 1");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

double epsilon_at(const DqnConfig& config, double progress) {
  if (config.epsilon_decay_fraction <= 0.0) return config.epsilon_end;
  const double f = std::clamp(progress / config.epsilon_decay_fraction, 0.0, 1.0);
  return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * f;
}

namespace {

double max_valid(std::span<const double> q, ActionMask valid) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < q.size() && a < 64; ++a) {
    if (valid >> a & 1) best = std::max(best, q[a]);
  }
  return best;
}

}  // namespace

double td_loss(const Mlp& online, const Mlp& target, std::span<const Transition* const> batch,
               std::span<double> grad) {
  if (batch.empty()) throw Error(ErrorKind::invalid_argument, "training batch is empty");
  const double n = static_cast<double>(batch.size());
  Mlp::Tape tape;
  std::vector<double> x;
  std::vector<double> d_out(static_cast<std::size_t>(online.output_size()), 0.0);
  double loss = 0.0;
  for (const Transition* t : batch) {
    double y = t->reward;
    if (t->discount > 0.0 && t->next_valid != 0) {
      x.assign(t->next_state.begin(), t->next_state.end());
      y += t->discount * max_valid(target.predict(x), t->next_valid);
    }
    x.assign(t->state.begin(), t->state.end());
    online.forward(x, tape);
    const double err = tape.act.back()[static_cast<std::size_t>(t->action)] - y;
    loss += err * err;
    if (!grad.empty()) {
      d_out[static_cast<std::size_t>(t->action)] = 2.0 * err / n;
      online.backward(tape, d_out, grad);
      d_out[static_cast<std::size_t>(t->action)] = 0.0;
    }
  }
  return loss / n;
}

DqnLearner::DqnLearner(Mlp network, DqnConfig config)
    : config_(std::move(config)),
      online_(std::move(network)),
      target_(online_),
      adam_(online_.param_count(), config_.learning_rate),
      replay_(config_.replay_capacity),
      grad_(online_.param_count(), 0.0) {}

double DqnLearner::train_step(std::span<const Transition* const> batch) {
  std::fill(grad_.begin(), grad_.end(), 0.0);
  const Mlp& bootstrap = config_.target_sync > 0 ? target_ : online_;
  const double loss = td_loss(online_, bootstrap, batch, grad_);
  if (config_.grad_clip > 0.0) {
    double norm2 = 0.0;
    for (double g : grad_) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > config_.grad_clip) {
      for (double& g : grad_) g *= config_.grad_clip / norm;
    }
  }
  if (config_.optimizer == OptimizerKind::adam) {
    adam_.step(online_.params(), grad_);
  } else {
    auto p = online_.params();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= config_.learning_rate * grad_[i];
  }
  ++steps_;
  if (config_.target_sync > 0 && steps_ % config_.target_sync == 0) sync_target();
  return loss;
}

std::optional<double> DqnLearner::train_from_replay(Rng& rng) {
  if (replay_.size() < std::max<std::size_t>(config_.min_replay, 1)) return std::nullopt;
  std::vector<const Transition*> batch;
  batch.reserve(static_cast<std::size_t>(config_.batch_size));
  for (int i = 0; i < config_.batch_size; ++i) batch.push_back(&replay_.at(uniform_index(rng, replay_.size())));
  return train_step(batch);
}

// ---- ranking and dispatch -------------------------------------------------

HotspotRanking rank_zones(const Mlp& q, const StateLayout& layout, std::span<const double> state_template,
                          const ActionSpace& actions, int top_count) {
  std::vector<double> state(state_template.begin(), state_template.end());
  std::vector<double> values(static_cast<std::size_t>(layout.zones()));
  for (ZoneId z = 0; z < layout.zones(); ++z) {
    set_state_zone(layout, state, z);
    values[static_cast<std::size_t>(z)] = max_valid(q.predict(state), actions.valid(z));
  }
  return rank_by_value(values, top_count);
}

std::vector<DispatchDecision> dispatch_idle(std::span<const DispatchRequest> requests, const Mlp& q,
                                            const ActionSpace& actions, double epsilon, Rng& rng) {
  std::vector<DispatchDecision> out;
  out.reserve(requests.size());
  for (const DispatchRequest& r : requests) {
    const int a = select_action(q, r.state, actions.valid(r.zone), epsilon, rng);
    out.push_back({r.vehicle, a, *actions.target(r.zone, a)});
  }
  return out;
}

PolicySpec parse_policy(const std::string& text) {
  if (text == "random") return {PolicyKind::random, {}};
  if (text == "nearest-demand") return {PolicyKind::nearest_demand, {}};
  if (text.rfind("dqn:", 0) == 0 && text.size() > 4) return {PolicyKind::dqn, text.substr(4)};
  throw Error(ErrorKind::usage, "unknown policy '" + text + "' (expected random, nearest-demand or dqn:<path>)");
}

std::string to_string(const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::random: return "random";
    case PolicyKind::nearest_demand: return "nearest-demand";
    case PolicyKind::dqn: return "dqn:" + spec.checkpoint.string();
  }
  return "unknown";
}

int random_action(ZoneId from, const ActionSpace& actions, Rng& rng) {
  const std::vector<double> flat(static_cast<std::size_t>(actions.size()), 0.0);
  return select_action(flat, actions.valid(from), 1.0, rng);
}

int nearest_demand_action(ZoneId from, const ActionSpace& actions, const SupplyForecast& supply,
                          const DemandForecast& demand, const RoadGraph& graph) {
  int best = actions.stay_action();
  double best_surplus = -std::numeric_limits<double>::infinity();
  double best_dist = 0.0;
  for (int a = 0; a < actions.size(); ++a) {
    const auto z = actions.target(from, a);
    if (!z) continue;
    double surplus = 0.0;
    for (int k = 0; k < demand.horizon; ++k) surplus += demand.at(k, *z) - supply.at(k, *z);
    const double d = graph.dist(from, *z);
    if (surplus > best_surplus || (surplus == best_surplus && d < best_dist)) {
      best = a;
      best_surplus = surplus;
      best_dist = d;
    }
  }
  return best;
}

// ---- checkpoints ---------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "fleetsim-checkpoint 1";

std::string layout_line(const StateLayout& layout, int action_count) {
  return "layout " + layout.describe() + " actions=" + std::to_string(action_count);
}

}  // namespace

void save_checkpoint(std::ostream& out, const Mlp& q, const StateLayout& layout, int action_count) {
  out << kMagic << '\n' << layout_line(layout, action_count) << '\n' << "layers";
  for (int s : q.sizes()) out << ' ' << s;
  out << '\n' << std::hexfloat;
  for (double p : q.params()) out << p << '\n';
  out << std::defaultfloat;
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& q, const StateLayout& layout,
                     int action_count) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write checkpoint " + path.string());
  save_checkpoint(out, q, layout, action_count);
  if (!out) throw Error(ErrorKind::io, "failed writing checkpoint " + path.string());
}

Mlp load_checkpoint(std::istream& in, const StateLayout& layout, int action_count) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw Error(ErrorKind::schema, "not a checkpoint file (bad first line)");
  }
  if (!std::getline(in, line) || line.rfind("layout ", 0) != 0) {
    throw Error(ErrorKind::schema, "checkpoint is missing its layout line");
  }
  const std::string expected = layout_line(layout, action_count);
  if (line != expected) {
    throw Error(ErrorKind::layout, "checkpoint " + line.substr(7) + " does not match scenario " +
                                       expected.substr(7));
  }
  if (!std::getline(in, line) || line.rfind("layers", 0) != 0) {
    throw Error(ErrorKind::schema, "checkpoint is missing its layers line");
  }
  std::istringstream sizes_in(line.substr(6));
  std::vector<int> sizes;
  for (int s; sizes_in >> s;) sizes.push_back(s);
  if (sizes.size() < 2 || sizes.front() != static_cast<int>(layout.size()) || sizes.back() != action_count) {
    throw Error(ErrorKind::schema, "checkpoint layer sizes disagree with its layout line");
  }
  Mlp q(sizes);
  for (double& p : q.params()) {
    if (!std::getline(in, line)) throw Error(ErrorKind::schema, "checkpoint is truncated");
    char* end = nullptr;
    p = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || !std::isfinite(p)) throw Error(ErrorKind::schema, "bad parameter value '" + line + "'");
  }
  return q;
}

Mlp load_checkpoint(const std::filesystem::path& path, const StateLayout& layout, int action_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  return load_checkpoint(in, layout, action_count);
}

}  // namespace fleetsim
