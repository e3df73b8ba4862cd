#include "cprm/learn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace cprm {

void LearnParams::validate() const {
  if (!(gamma > 0 && gamma < 1))
    throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(alpha >= 0 && alpha <= 1))
    throw std::invalid_argument("alpha must lie in [0,1]");
  if (!(epsilon >= 0 && epsilon <= 1))
    throw std::invalid_argument("epsilon must lie in [0,1]");
  if (max_episode_steps == 0)
    throw std::invalid_argument("max_episode_steps must be positive");
}

Task::Task(const Gridworld& g, const Prm& p) : g_(&g), p_(&p), masks_(g.num_cells()) {
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    masks_[c] = p.alphabet().project(g.label(c));
}

double QTable::max(std::size_t c, std::size_t u) const {
  const double* row = &q_[(c * states_ + u) * kNumActions];
  return *std::max_element(row, row + kNumActions);
}

Action QTable::greedy(std::size_t c, std::size_t u) const {
  const double* row = &q_[(c * states_ + u) * kNumActions];
  return static_cast<Action>(std::max_element(row, row + kNumActions) - row);
}

QrmLearner::QrmLearner(const Task& task, LearnParams params, std::uint64_t seed)
    : task_(&task), params_(params), rng_(seed),
      q_(task.world().num_cells(), task.machine().num_states()), cell_(task.world().start()),
      u_(task.machine().initial()) {
  params_.validate();
  for (std::size_t u = 0; u < task.machine().num_states(); ++u)
    if (!task.machine().is_terminal(u))
      live_states_.push_back(u);
}

Action QrmLearner::choose(Gridworld::Cell c, Prm::State u) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < params_.epsilon)
    return kActions[std::uniform_int_distribution<std::size_t>(0, kNumActions - 1)(rng_)];
  // Random tie-break keeps the untrained agent from walking into a wall.
  double best = -std::numeric_limits<double>::infinity();
  std::size_t ties = 0;
  Action pick = Action::North;
  for (Action a : kActions) {
    const double v = q_.at(c, u, a);
    if (v > best) {
      best = v;
      pick = a;
      ties = 1;
    } else if (v == best && std::uniform_int_distribution<std::size_t>(0, ties++)(rng_) == 0) {
      pick = a;
    }
  }
  return pick;
}

void QrmLearner::update(Gridworld::Cell s, Action a, Gridworld::Cell s2) {
  const Prm& p = task_->machine();
  const LabelMask l = task_->mask(s2);
  for (Prm::State u : live_states_) {
    const auto& outs = p.outcomes(u, l);
    double target = 0;
    if (params_.sampled_update) {
      auto [u2, r] = prm_step(p, u, l, rng_);
      target = r + (p.is_terminal(u2) ? 0.0 : params_.gamma * q_.max(s2, u2));
    } else {
      for (const auto& o : outs)
        target += o.prob *
                  (o.reward + (p.is_terminal(o.to) ? 0.0 : params_.gamma * q_.max(s2, o.to)));
    }
    double& q = q_.at(s, u, a);
    q += params_.alpha * (target - q);
  }
}

double QrmLearner::step() {
  if (done_) {
    cell_ = task_->world().start();
    u_ = task_->machine().initial();
    t_ = 0;
    done_ = false;
    ++episodes_;
  }
  const Action a = choose(cell_, u_);
  const auto s2 = task_->world().step(cell_, a, rng_);
  update(cell_, a, s2);
  auto [u2, r] = prm_step(task_->machine(), u_, task_->mask(s2), rng_);
  cell_ = s2;
  u_ = u2;
  ++t_;
  done_ = task_->machine().is_terminal(u_) || t_ >= params_.max_episode_steps;
  return r;
}

EpisodeLog QrmLearner::run_episode() {
  EpisodeLog log;
  done_ = true;
  do {
    log.reward += step();
    ++log.steps;
  } while (!done_);
  log.reached_terminal = task_->machine().is_terminal(u_);
  return log;
}

EpisodeLog qrm_episode(QTable& q, const Task& task, const LearnParams& params,
                       std::mt19937_64& rng) {
  QrmLearner learner(task, params, rng());
  learner.set_q(q);
  auto log = learner.run_episode();
  q = learner.q();
  return log;
}

Curve train_curve(const Task& task, const LearnParams& params, const CurveParams& cp,
                  std::uint64_t seed) {
  if (cp.window == 0 || cp.sample_interval == 0 || cp.total_steps <= cp.window)
    throw std::invalid_argument("need total_steps > window > 0 and a positive sample interval");
  QrmLearner learner(task, params, seed);
  std::vector<double> ring(cp.window, 0.0);
  double sum = 0;
  Curve curve;
  for (std::size_t t = 1; t <= cp.total_steps; ++t) {
    const double r = learner.step();
    double& slot = ring[(t - 1) % cp.window];
    sum += r - slot;
    slot = r;
    if (t % cp.sample_interval == 0) {
      // Recompute occasionally so rounding drift cannot accumulate.
      if (t % (cp.window * 64) == 0) {
        sum = 0;
        for (double x : ring)
          sum += x;
      }
      curve.emplace_back(t, sum / static_cast<double>(std::min(t, cp.window)));
    }
  }
  return curve;
}

Curve average_curves(const std::vector<Curve>& curves) {
  if (curves.empty())
    return {};
  Curve out = curves.front();
  for (std::size_t i = 1; i < curves.size(); ++i) {
    if (curves[i].size() != out.size())
      throw std::invalid_argument("curves are sampled at different steps");
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k].second += curves[i][k].second;
  }
  for (auto& [step, v] : out)
    v /= static_cast<double>(curves.size());
  return out;
}

std::optional<std::size_t> steps_to_sustain(const Curve& c, double threshold, std::size_t window) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].second < threshold)
      continue;
    const std::size_t until = c[i].first + window;
    if (c.back().first < until)
      return std::nullopt;
    bool held = true;
    for (std::size_t j = i; j < c.size() && c[j].first <= until; ++j)
      if (c[j].second < threshold) {
        held = false;
        break;
      }
    if (held)
      return c[i].first;
  }
  return std::nullopt;
}

namespace {

// Expected return of action a in pair (c, u) under values v.
double action_value(const Task& task, Gridworld::Cell c, Prm::State u, Action a,
                    const std::vector<double>& v, double gamma) {
  const Prm& p = task.machine();
  double sum = 0;
  for (const auto& m : task.world().transitions(c, a)) {
    for (const auto& o : p.outcomes(u, task.mask(m.to))) {
      const double cont = p.is_terminal(o.to) ? 0.0 : v[task.pair(m.to, o.to)];
      sum += m.prob * o.prob * (o.reward + gamma * cont);
    }
  }
  return sum;
}

} // namespace

ExactSolution exact_solve(const Task& task, double gamma, double tol) {
  const auto& g = task.world();
  const auto& p = task.machine();
  ExactSolution sol;
  sol.values.assign(task.num_pairs(), 0.0);
  sol.policy.assign(task.num_pairs(), Action::North);
  std::vector<double> next(task.num_pairs(), 0.0);
  for (;;) {
    double residual = 0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      if (g.is_wall(c))
        continue;
      for (std::size_t u = 0; u < p.num_states(); ++u) {
        if (p.is_terminal(u))
          continue;
        double best = -std::numeric_limits<double>::infinity();
        for (Action a : kActions)
          best = std::max(best, action_value(task, c, u, a, sol.values, gamma));
        const auto x = task.pair(c, u);
        next[x] = best;
        residual = std::max(residual, std::abs(best - sol.values[x]));
      }
    }
    sol.values.swap(next);
    ++sol.iterations;
    if (residual < tol)
      break;
  }
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    if (g.is_wall(c))
      continue;
    for (std::size_t u = 0; u < p.num_states(); ++u) {
      if (p.is_terminal(u))
        continue;
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : kActions) {
        const double v = action_value(task, c, u, a, sol.values, gamma);
        if (v > best + 1e-12) {
          best = v;
          sol.policy[task.pair(c, u)] = a;
        }
      }
    }
  }
  return sol;
}

std::vector<double> evaluate_policy(const Task& task, const Policy& policy, double gamma,
                                    double tol) {
  const auto& g = task.world();
  const auto& p = task.machine();
  std::vector<double> v(task.num_pairs(), 0.0), next(task.num_pairs(), 0.0);
  for (;;) {
    double residual = 0;
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      if (g.is_wall(c))
        continue;
      for (std::size_t u = 0; u < p.num_states(); ++u) {
        if (p.is_terminal(u))
          continue;
        const auto x = task.pair(c, u);
        next[x] = action_value(task, c, u, policy[x], v, gamma);
        residual = std::max(residual, std::abs(next[x] - v[x]));
      }
    }
    v.swap(next);
    if (residual < tol)
      break;
  }
  return v;
}

std::vector<bool> reachable_pairs(const Task& task) {
  const auto& g = task.world();
  const auto& p = task.machine();
  std::vector<bool> seen(task.num_pairs(), false);
  const auto root = task.pair(g.start(), p.initial());
  seen[root] = true;
  std::deque<std::size_t> work{root};
  while (!work.empty()) {
    const auto x = work.front();
    work.pop_front();
    const auto c = x / p.num_states(), u = x % p.num_states();
    if (p.is_terminal(u))
      continue;
    for (Action a : kActions)
      for (const auto& m : g.transitions(c, a)) {
        if (m.prob <= 0)
          continue;
        for (const auto& o : p.outcomes(u, task.mask(m.to))) {
          const auto y = task.pair(m.to, o.to);
          if (o.prob > 0 && !seen[y]) {
            seen[y] = true;
            work.push_back(y);
          }
        }
      }
  }
  return seen;
}

Policy project_policy(const Task& product_task, const ProductPrm& product,
                      const ExactSolution& sol, const Task& base_task) {
  const auto& g = base_task.world();
  const std::size_t nb = base_task.machine().num_states();
  const std::size_t np = product_task.machine().num_states();
  const auto reach = reachable_pairs(product_task);
  Policy out(base_task.num_pairs(), Action::North);
  std::vector<bool> set(base_task.num_pairs(), false);
  for (std::size_t c = 0; c < g.num_cells(); ++c)
    for (std::size_t x = 0; x < np; ++x) {
      if (!reach[product_task.pair(c, x)])
        continue;
      const auto u = product.base_state[x];
      const auto y = base_task.pair(c, u);
      if (u < nb && !set[y]) {
        out[y] = sol.policy[product_task.pair(c, x)];
        set[y] = true;
      }
    }
  return out;
}

double reward_per_step(const Task& task, const Policy& policy, double epsilon,
                       std::size_t max_steps) {
  const auto& g = task.world();
  const auto& p = task.machine();
  std::vector<double> dist(task.num_pairs(), 0.0), next(task.num_pairs(), 0.0);
  dist[task.pair(g.start(), p.initial())] = 1.0;
  double reward = 0, length = 0;
  for (std::size_t t = 0; t < max_steps; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    double alive = 0;
    for (std::size_t x = 0; x < dist.size(); ++x) {
      const double mass = dist[x];
      if (mass == 0)
        continue;
      alive += mass;
      const auto c = x / p.num_states(), u = x % p.num_states();
      for (Action a : kActions) {
        const double pa = epsilon / kNumActions + (policy[x] == a ? 1 - epsilon : 0.0);
        if (pa == 0)
          continue;
        for (const auto& m : g.transitions(c, a))
          for (const auto& o : p.outcomes(u, task.mask(m.to))) {
            const double w = mass * pa * m.prob * o.prob;
            reward += w * o.reward;
            if (!p.is_terminal(o.to))
              next[task.pair(m.to, o.to)] += w;
          }
      }
    }
    length += alive;
    if (alive < 1e-15)
      break;
    dist.swap(next);
  }
  return reward / length;
}

} // namespace cprm
