#include "cprm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace cprm {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (map.empty() || prm.empty())
    throw ConfigError("config needs 'map' and 'prm'");
  if (curve.window == 0 || curve.total_steps <= curve.window)
    throw ConfigError("need total_steps > window > 0");
  if (curve.sample_interval == 0)
    throw ConfigError("sample_interval must be positive");
  if (seeds.empty())
    throw ConfigError("seed list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  if (!redundant_tlcds.empty() && !tlcd)
    throw ConfigError("redundant TL-CDs need a primary 'tlcd'");
  try {
    learn.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

template <typename T> T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key))
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

} // namespace

ExperimentConfig config_from_json(const json& j, const fs::path& base) {
  if (!j.is_object())
    throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "name",        "map",         "prm",     "tlcd",   "redundant_tlcds", "gamma",
      "alpha",       "epsilon",     "max_episode_steps", "total_steps",     "window",
      "sample_interval", "seeds",   "output",  "sampled_update", "max_dfa_states"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("unknown config field '" + key + "'");

  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  ExperimentConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  c.map = resolve(get_or<std::string>(j, "map", ""));
  c.prm = resolve(get_or<std::string>(j, "prm", ""));
  if (j.contains("tlcd") && !j["tlcd"].is_null())
    c.tlcd = resolve(get_or<std::string>(j, "tlcd", ""));
  for (const auto& p : get_or<std::vector<std::string>>(j, "redundant_tlcds", {}))
    c.redundant_tlcds.push_back(resolve(p));
  c.learn.gamma = get_or(j, "gamma", c.learn.gamma);
  c.learn.alpha = get_or(j, "alpha", c.learn.alpha);
  c.learn.epsilon = get_or(j, "epsilon", c.learn.epsilon);
  c.learn.max_episode_steps = get_or(j, "max_episode_steps", c.learn.max_episode_steps);
  c.learn.sampled_update = get_or(j, "sampled_update", c.learn.sampled_update);
  c.curve.total_steps = get_or(j, "total_steps", c.curve.total_steps);
  c.curve.window = get_or(j, "window", c.curve.window);
  c.curve.sample_interval = get_or(j, "sample_interval", c.curve.sample_interval);
  c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
  c.output = get_or<std::string>(j, "output", c.output.string());
  c.max_dfa_states = get_or(j, "max_dfa_states", c.max_dfa_states);
  if (j.contains("map") == false || j.contains("prm") == false)
    throw ConfigError("config needs 'map' and 'prm'");
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return config_from_json(j, file.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["map"] = c.map.string();
  j["prm"] = c.prm.string();
  j["tlcd"] = c.tlcd ? json(c.tlcd->string()) : json(nullptr);
  j["redundant_tlcds"] = json::array();
  for (const auto& p : c.redundant_tlcds)
    j["redundant_tlcds"].push_back(p.string());
  j["gamma"] = c.learn.gamma;
  j["alpha"] = c.learn.alpha;
  j["epsilon"] = c.learn.epsilon;
  j["max_episode_steps"] = c.learn.max_episode_steps;
  j["sampled_update"] = c.learn.sampled_update;
  j["total_steps"] = c.curve.total_steps;
  j["window"] = c.curve.window;
  j["sample_interval"] = c.curve.sample_interval;
  j["seeds"] = c.seeds;
  j["output"] = c.output.string();
  j["max_dfa_states"] = c.max_dfa_states;
  return j;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read '" + file.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path())
    fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out || !(out << text))
    throw std::runtime_error("cannot write '" + file.string() + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty())
      continue;
    try {
      const auto dash = item.find('-');
      if (dash != std::string::npos && dash > 0) {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo)
          throw ConfigError("empty seed range '" + item + "'");
        for (auto s = lo; s <= hi; ++s)
          out.push_back(s);
      } else {
        std::size_t used = 0;
        out.push_back(std::stoull(item, &used));
        if (used != item.size())
          throw ConfigError("bad seed '" + item + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (out.empty())
    throw ConfigError("seed list is empty");
  return out;
}

std::vector<CausalDfa> CaseStudy::dfas(std::size_t max_states) const {
  std::vector<CausalDfa> out;
  if (tlcd)
    out.push_back(compile_tlcd(*tlcd, max_states));
  for (const auto& r : redundant)
    out.push_back(compile_tlcd(r, max_states));
  return out;
}

CaseStudy load_case(const ExperimentConfig& c) {
  auto tagged = [](const fs::path& p, auto&& parse) {
    try {
      return parse(read_file(p));
    } catch (const std::exception& e) {
      throw ConfigError(p.string() + ": " + e.what());
    }
  };
  CaseStudy cs{tagged(c.map, [](const std::string& t) { return load_map(t); }),
               tagged(c.prm, [](const std::string& t) { return parse_prm(t); }),
               std::nullopt,
               {}};
  if (c.tlcd)
    cs.tlcd = tagged(*c.tlcd, [](const std::string& t) { return parse_tlcd(t); });
  for (const auto& p : c.redundant_tlcds)
    cs.redundant.push_back(tagged(p, [](const std::string& t) { return parse_tlcd(t); }));
  return cs;
}

TrainResult train(const Task& task, const LearnParams& params, const CurveParams& cp,
                  const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));
  TrainResult out;
  out.per_seed.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < seeds.size();) {
      try {
        out.per_seed[i] = train_curve(task, params, cp, seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
  out.mean = average_curves(out.per_seed);
  return out;
}

std::string format_csv(const Curve& c) {
  std::string out = "Step,Value\n";
  for (const auto& [step, v] : c) {
    out += std::to_string(step);
    out += ',';
    out += format_double(v);
    out += '\n';
  }
  return out;
}

TrainOutputs run_training(const ExperimentConfig& c, unsigned threads) {
  c.validate();
  const CaseStudy cs = load_case(c);
  TrainOutputs out;

  auto emit = [&](const std::string& variant, const TrainResult& r) {
    out.files.push_back(c.output / (variant + ".csv"));
    write_file(out.files.back(), format_csv(r.mean));
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
      out.files.push_back(c.output / (variant + "_seed" + std::to_string(c.seeds[i]) + ".csv"));
      write_file(out.files.back(), format_csv(r.per_seed[i]));
    }
  };

  json meta;
  meta["config"] = to_json(c);
  meta["prm_states"] = cs.prm.num_states();

  const Task plain(cs.world, cs.prm);
  out.no_causal = train(plain, c.learn, c.curve, c.seeds, threads);
  emit("no_causal", out.no_causal);

  if (cs.tlcd) {
    const auto b = build_causal_prm(cs.prm, cs.dfas(c.max_dfa_states), c.learn.gamma);
    const Task causal(cs.world, b.product.prm);
    out.causal = train(causal, c.learn, c.curve, c.seeds, threads);
    emit("causal", *out.causal);
    meta["causal_states"] = b.product.prm.num_states();
    meta["added_terminals"] = b.added_terminals.size();
    meta["minimal_reward"] = b.product.minimal_reward;
  }

  out.files.push_back(c.output / "metadata.json");
  write_file(out.files.back(), meta.dump(2) + "\n");
  return out;
}

} // namespace cprm
