#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "cprm/envs.hpp"
#include "cprm/machines.hpp"

namespace cprm {

struct LearnParams {
  double gamma = 0.9;
  double alpha = 0.1;
  double epsilon = 0.1;
  std::size_t max_episode_steps = 400;
  /// Update towards one sampled machine successor instead of the
  /// expectation over tau.
  bool sampled_update = false;

  void validate() const;
};

/// A gridworld paired with a reward machine; labels are precomputed per
/// destination cell in the machine's alphabet.
class Task {
public:
  Task(const Gridworld& g, const Prm& p);

  const Gridworld& world() const noexcept { return *g_; }
  const Prm& machine() const noexcept { return *p_; }
  LabelMask mask(Gridworld::Cell c) const { return masks_[c]; }
  std::size_t num_pairs() const { return g_->num_cells() * p_->num_states(); }
  std::size_t pair(Gridworld::Cell c, Prm::State u) const { return c * p_->num_states() + u; }

private:
  const Gridworld* g_;
  const Prm* p_;
  std::vector<LabelMask> masks_;
};

class QTable {
public:
  QTable(std::size_t cells, std::size_t states, double init = 0.0)
      : states_(states), q_(cells * states * kNumActions, init) {}

  double& at(std::size_t c, std::size_t u, Action a) {
    return q_[(c * states_ + u) * kNumActions + static_cast<std::size_t>(a)];
  }
  double at(std::size_t c, std::size_t u, Action a) const {
    return q_[(c * states_ + u) * kNumActions + static_cast<std::size_t>(a)];
  }
  double max(std::size_t c, std::size_t u) const;
  /// Lowest-index action among the maximizers.
  Action greedy(std::size_t c, std::size_t u) const;

private:
  std::size_t states_;
  std::vector<double> q_;
};

struct EpisodeLog {
  std::size_t steps = 0;
  double reward = 0;
  bool reached_terminal = false;
};

/// Tabular QRM with counterfactual updates for every non-terminal machine
/// state. Steps are driven one at a time so curves can sample mid-episode.
class QrmLearner {
public:
  QrmLearner(const Task& task, LearnParams params, std::uint64_t seed);

  /// One environment step (resetting first if the last episode ended).
  /// Returns the reward of the tracked machine transition.
  double step();
  EpisodeLog run_episode();

  const QTable& q() const noexcept { return q_; }
  void set_q(QTable q) { q_ = std::move(q); }
  std::size_t episodes() const noexcept { return episodes_; }

private:
  Action choose(Gridworld::Cell c, Prm::State u);
  void update(Gridworld::Cell s, Action a, Gridworld::Cell s2);

  const Task* task_;
  LearnParams params_;
  std::mt19937_64 rng_;
  QTable q_;
  Gridworld::Cell cell_;
  Prm::State u_;
  std::size_t t_ = 0;
  bool done_ = true;
  std::size_t episodes_ = 0;
  std::vector<Prm::State> live_states_;
};

/// Runs one episode of QRM from the start state, updating q in place.
EpisodeLog qrm_episode(QTable& q, const Task& task, const LearnParams& params,
                       std::mt19937_64& rng);

using Curve = std::vector<std::pair<std::size_t, double>>;

struct CurveParams {
  std::size_t total_steps = 100'000;
  std::size_t window = 1000;
  std::size_t sample_interval = 100;
};

/// Trains one seed and records the reward per step over the trailing window
/// (or over all steps so far, before one window has elapsed).
Curve train_curve(const Task& task, const LearnParams& params, const CurveParams& cp,
                  std::uint64_t seed);

/// Pointwise mean of curves sampled at the same steps.
Curve average_curves(const std::vector<Curve>& curves);

/// First sampled step from which the curve stays at or above `threshold`
/// for one full window; nullopt if that never happens.
std::optional<std::size_t> steps_to_sustain(const Curve& c, double threshold, std::size_t window);

using Policy = std::vector<Action>;  // indexed by Task::pair(c, u)

struct ExactSolution {
  std::vector<double> values;  // indexed by Task::pair(c, u)
  Policy policy;
  std::size_t iterations = 0;

  double value(const Task& t, Gridworld::Cell c, Prm::State u) const {
    return values[t.pair(c, u)];
  }
  double initial_value(const Task& t) const {
    return value(t, t.world().start(), t.machine().initial());
  }
};

/// Value iteration on the cross product M x machine.
ExactSolution exact_solve(const Task& task, double gamma, double tol = 1e-12);

/// Exact discounted values of a fixed policy.
std::vector<double> evaluate_policy(const Task& task, const Policy& policy, double gamma,
                                    double tol = 1e-12);

/// Pairs (c, u) reachable from (start, initial) with positive probability.
std::vector<bool> reachable_pairs(const Task& task);

/// Maps a policy on M x product onto M x (original machine): each (c, u)
/// copies the action at the reachable product pair with u as its base state
/// and the smallest product id.
Policy project_policy(const Task& product_task, const ProductPrm& product,
                      const ExactSolution& sol, const Task& base_task);

/// Long-run reward per step of the epsilon-greedy version of `policy` with
/// episodes restarting after a terminal or `max_steps`.
double reward_per_step(const Task& task, const Policy& policy, double epsilon,
                       std::size_t max_steps);

} // namespace cprm
