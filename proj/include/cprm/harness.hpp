#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cprm/learn.hpp"

namespace cprm {

namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name = "experiment";
  fs::path map, prm;
  std::optional<fs::path> tlcd;
  std::vector<fs::path> redundant_tlcds;
  LearnParams learn;
  CurveParams curve;
  std::vector<std::uint64_t> seeds;
  fs::path output = "results";
  std::size_t max_dfa_states = kDefaultMaxDfaStates;

  /// total_steps > window > 0, seeds non-empty and distinct, valid learning
  /// parameters. Throws ConfigError.
  void validate() const;
};

/// File paths in the JSON are resolved against `base` (the config's folder).
ExperimentConfig config_from_json(const nlohmann::json& j, const fs::path& base);
ExperimentConfig load_config(const fs::path& file);
nlohmann::json to_json(const ExperimentConfig& c);

std::string read_file(const fs::path& file);
void write_file(const fs::path& file, const std::string& text);

/// Parses a comma separated seed list such as "1,2,3" or a range "0-19".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Inputs of one case study, loaded and validated.
struct CaseStudy {
  Gridworld world;
  Prm prm;
  std::optional<TlCd> tlcd;
  std::vector<TlCd> redundant;

  /// Causal DFAs in product order: the TL-CD, then the redundant ones.
  std::vector<CausalDfa> dfas(std::size_t max_states = kDefaultMaxDfaStates) const;
};

CaseStudy load_case(const ExperimentConfig& c);

struct TrainResult {
  std::vector<Curve> per_seed;
  Curve mean;
};

/// One independent training per seed, fanned out over worker threads.
TrainResult train(const Task& task, const LearnParams& params, const CurveParams& cp,
                  const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

/// `Step,Value` header, one row per sample, shortest round-trip decimals.
std::string format_csv(const Curve& c);

struct TrainOutputs {
  std::vector<fs::path> files;
  TrainResult no_causal;
  std::optional<TrainResult> causal;
};

/// Trains the plain PRM and, when a TL-CD is configured, the causal product;
/// writes `<variant>.csv`, `<variant>_seed<k>.csv` and `metadata.json`.
TrainOutputs run_training(const ExperimentConfig& c, unsigned threads = 0);

} // namespace cprm
