#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irt/coreset.hpp"
#include "irt/model.hpp"
#include "irt/mu.hpp"
#include "irt/solver.hpp"
#include "irt/synth.hpp"
#include "irt/weighted_coreset.hpp"

namespace irt {

enum class LabelFormat { PlusMinusOne, ZeroOne };
LabelFormat parse_label_format(std::string_view name);

/// Long form `item,examinee,y` or dense form (header `item,<examinee ids>`,
/// then one line per item). The header decides which one is read.
ResponseMatrix read_responses_csv(const std::string& path, LabelFormat labels = LabelFormat::PlusMinusOne);
void write_responses_csv(const ResponseMatrix& y, const std::string& path, bool dense = false,
                         LabelFormat labels = LabelFormat::PlusMinusOne);

void write_items_csv(const ItemParameters& items, const std::string& path);
void write_abilities_csv(const AbilityParameters& abilities, const std::string& path);
ItemParameters read_items_csv(const std::string& path);
AbilityParameters read_abilities_csv(const std::string& path);
void write_trace_csv(const FitTrace& trace, const std::string& path);

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);

enum class Method { Full, Coreset, Uniform, Distance, L1Lev, Lewis };
Method parse_method(std::string_view name);
std::string_view to_string(Method method);

struct Metrics {
  double f_full = 0.0;
  /// Objective attained by the subsample run on its own weighted data.
  double f_core = 0.0;
  /// Full-data objective at the subsample run's parameters.
  double f_full_at_core = 0.0;
  double rel_err = 0.0;
  double lemma_ratio = 0.0;
  /// Item deviations averaged over m, ability deviations over n.
  double mad_alpha = 0.0;
  double mad_theta = 0.0;
};

/// Both parameter sets must already be standardized.
Metrics compute_metrics(const ItemParameters& full_items, const AbilityParameters& full_abilities,
                        const ItemParameters& core_items, const AbilityParameters& core_abilities,
                        double f_full, double f_core, double f_full_at_core);

std::vector<MuEstimate> mu_table(const ResponseMatrix& y, const ItemParameters& items,
                                 const AbilityParameters& abilities, MuPolicy policy);
void write_mu_csv(const std::vector<MuEstimate>& table, const std::string& path);

struct ExperimentConfig {
  int schema = 1;
  /// Empty: generate synthetic data from `gen`.
  std::string data_path;
  LabelFormat labels = LabelFormat::PlusMinusOne;
  GenConfig gen{};
  ModelKind model = ModelKind::TwoPL;
  std::vector<Method> methods{Method::Coreset};
  std::size_t k = 100;
  int repetitions = 5;
  int iterations = 50;
  std::uint64_t seed = 1;
  bool sketched = false;
  int rounds = 1;
  SamplingMethod sampling = SamplingMethod::IIDAlias;
  double epsilon = 0.1;
  double kappa = 10.0;
  MuPolicy mu_policy = MuPolicy::Auto;
  std::size_t distance_centers = 25;
  bool write_mu_table = false;
  bool parallel_reps = false;
  /// Empty: nothing is written to disk.
  std::string out_dir;

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
};

struct RunRecord {
  Method method = Method::Full;
  int repetition = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::size_t coreset_distinct = 0;
  std::size_t coreset_forced = 0;
  double seconds_construction = 0.0;
  double seconds_ability_step = 0.0;
  double seconds_item_step = 0.0;
  double seconds_total = 0.0;
  int iterations = 0;
  bool monotone = true;
};

struct MethodSummary {
  Method method = Method::Full;
  /// Repetition with the smallest f_core; its metrics are the reported ones.
  int best_repetition = 0;
  Metrics best;
  double mean_seconds = 0.0;
  double gain_percent = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t n = 0;
  std::size_t m = 0;
  RunRecord full;
  FitResult full_fit;  // standardized
  std::vector<RunRecord> runs;
  std::vector<MethodSummary> summaries;
  std::vector<MuEstimate> mu;

  const MethodSummary* summary(Method method) const;
  std::string to_json() const;
};

/// Runs the full fit once, then `repetitions` subsample fits per method with
/// seeds derived from config.seed (the same seed grid for every method).
/// Writes report.json, runs.csv and per-method plot data when out_dir is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Same as run_experiment on an already loaded response matrix.
ExperimentReport run_experiment(const ExperimentConfig& config, const ResponseMatrix& y);

/// Coreset for one subsample method, built from the fit's starting point.
WeightedCoreset build_subsample(Method method, const ResponseMatrix& y, const ItemParameters& items,
                                const AbilityParameters& abilities, ModelKind model, std::size_t k,
                                std::uint64_t seed, const ExperimentConfig& config);

}  // namespace irt
