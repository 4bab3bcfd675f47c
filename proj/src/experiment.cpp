#include "irt/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <set>

#include "irt/baselines.hpp"
#include "irt/error.hpp"
#include "irt/parallel.hpp"
#include "irt/rng.hpp"
#include "irt/summation.hpp"
#include "json.hpp"

namespace irt {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

long long parse_int(std::string_view s, const std::string& ctx) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    fail(ErrorCode::Io, ctx + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s, const std::string& ctx) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    fail(ErrorCode::Io, ctx + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

std::int8_t parse_label(std::string_view s, LabelFormat labels, const std::string& ctx) {
  const long long v = parse_int(s, ctx);
  if (labels == LabelFormat::ZeroOne) {
    if (v == 0) return -1;
    if (v == 1) return 1;
    fail(ErrorCode::Io, ctx + ": label must be 0 or 1");
  }
  if (v == -1 || v == 1) return static_cast<std::int8_t>(v);
  fail(ErrorCode::Io, ctx + ": label must be -1 or 1");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

std::string label_text(std::int8_t v, LabelFormat labels) {
  if (labels == LabelFormat::ZeroOne) return v > 0 ? "1" : "0";
  return v > 0 ? "1" : "-1";
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

json metrics_json(const Metrics& m) {
  return {{"f_full", m.f_full},
          {"f_core", m.f_core},
          {"f_full_at_core", m.f_full_at_core},
          {"rel_err", m.rel_err},
          {"lemma_ratio", m.lemma_ratio},
          {"mad_alpha", m.mad_alpha},
          {"mad_theta", m.mad_theta}};
}

json run_json(const RunRecord& r) {
  return {{"method", std::string(to_string(r.method))},
          {"repetition", r.repetition},
          {"seed", r.seed},
          {"metrics", metrics_json(r.metrics)},
          {"coreset_distinct", r.coreset_distinct},
          {"coreset_forced", r.coreset_forced},
          {"seconds_construction", r.seconds_construction},
          {"seconds_ability_step", r.seconds_ability_step},
          {"seconds_item_step", r.seconds_item_step},
          {"seconds_total", r.seconds_total},
          {"iterations", r.iterations},
          {"monotone", r.monotone}};
}

bool is_monotone(const std::vector<double>& trace) {
  for (std::size_t t = 1; t < trace.size(); ++t)
    if (trace[t] > trace[t - 1]) return false;
  return true;
}

std::string_view policy_name(MuPolicy p) {
  switch (p) {
    case MuPolicy::Auto: return "auto";
    case MuPolicy::Heuristic: return "heuristic";
    case MuPolicy::Exact: return "exact";
  }
  return "auto";
}

MuPolicy parse_policy(std::string_view s) {
  if (s == "auto") return MuPolicy::Auto;
  if (s == "heuristic") return MuPolicy::Heuristic;
  if (s == "exact") return MuPolicy::Exact;
  fail(ErrorCode::Config, "unknown mu policy '" + std::string(s) + "'");
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

LabelFormat parse_label_format(std::string_view name) {
  if (name == "pm1") return LabelFormat::PlusMinusOne;
  if (name == "01") return LabelFormat::ZeroOne;
  fail(ErrorCode::Config, "labels must be pm1 or 01, got '" + std::string(name) + "'");
}

ResponseMatrix read_responses_csv(const std::string& path, LabelFormat labels) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) fail(ErrorCode::Io, path + ": empty file");
  const auto header = split(line);
  std::size_t line_no = 1;
  if (header.size() == 3 && header[0] == "item" && header[1] == "examinee" && header[2] == "y") {
    struct Cell {
      std::size_t i, j;
      std::int8_t y;
    };
    std::vector<Cell> cells;
    std::size_t m = 0, n = 0;
    while (std::getline(f, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const std::string ctx = path + ":" + std::to_string(line_no);
      const auto fields = split(line);
      if (fields.size() != 3) fail(ErrorCode::Io, ctx + ": expected 3 columns");
      const long long i = parse_int(fields[0], ctx), j = parse_int(fields[1], ctx);
      if (i < 0 || j < 0) fail(ErrorCode::Io, ctx + ": negative index");
      cells.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), parse_label(fields[2], labels, ctx)});
      m = std::max(m, cells.back().i + 1);
      n = std::max(n, cells.back().j + 1);
    }
    if (cells.size() != m * n) fail(ErrorCode::Io, path + ": long form must list every (item, examinee) pair once");
    std::vector<std::int8_t> y(m * n, 0);
    for (const Cell& c : cells) {
      if (y[c.i * n + c.j] != 0) fail(ErrorCode::Io, path + ": duplicate entry");
      y[c.i * n + c.j] = c.y;
    }
    return ResponseMatrix(m, n, std::move(y));
  }

  const std::size_t n = header.size() - 1;
  if (header.size() < 2) fail(ErrorCode::Io, path + ": dense header needs at least one examinee column");
  std::vector<std::int8_t> y;
  std::size_t m = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const auto fields = split(line);
    if (fields.size() != n + 1) fail(ErrorCode::Io, ctx + ": expected " + std::to_string(n + 1) + " columns");
    for (std::size_t j = 1; j <= n; ++j) y.push_back(parse_label(fields[j], labels, ctx));
    ++m;
  }
  if (m == 0) fail(ErrorCode::Io, path + ": no item rows");
  return ResponseMatrix(m, n, std::move(y));
}

void write_responses_csv(const ResponseMatrix& y, const std::string& path, bool dense,
                         LabelFormat labels) {
  auto f = open_out(path);
  const std::size_t m = y.items(), n = y.examinees();
  if (dense) {
    f << "item";
    for (std::size_t j = 0; j < n; ++j) f << ',' << j;
    f << '\n';
    for (std::size_t i = 0; i < m; ++i) {
      f << i;
      for (std::size_t j = 0; j < n; ++j) f << ',' << label_text(y(i, j), labels);
      f << '\n';
    }
  } else {
    f << "item,examinee,y\n";
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) f << i << ',' << j << ',' << label_text(y(i, j), labels) << '\n';
  }
  if (!f) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

void write_items_csv(const ItemParameters& items, const std::string& path) {
  auto f = open_out(path);
  f << "item,a,b,c\n";
  for (std::size_t i = 0; i < items.size(); ++i)
    f << i << ',' << format_number(items.a[i]) << ',' << format_number(items.b[i]) << ','
      << format_number(items.c[i]) << '\n';
}

void write_abilities_csv(const AbilityParameters& abilities, const std::string& path) {
  auto f = open_out(path);
  f << "examinee,theta\n";
  for (std::size_t j = 0; j < abilities.size(); ++j) f << j << ',' << format_number(abilities.theta[j]) << '\n';
}

ItemParameters read_items_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  std::getline(f, line);
  ItemParameters items;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const auto fields = split(line);
    if (fields.size() != 4) fail(ErrorCode::Io, ctx + ": expected item,a,b,c");
    items.a.push_back(parse_real(fields[1], ctx));
    items.b.push_back(parse_real(fields[2], ctx));
    items.c.push_back(parse_real(fields[3], ctx));
  }
  return items;
}

AbilityParameters read_abilities_csv(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  std::getline(f, line);
  AbilityParameters out;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const auto fields = split(line);
    if (fields.size() != 2) fail(ErrorCode::Io, ctx + ": expected examinee,theta");
    out.theta.push_back(parse_real(fields[1], ctx));
  }
  return out;
}

void write_trace_csv(const FitTrace& trace, const std::string& path) {
  auto f = open_out(path);
  f << "iteration,objective\n";
  for (std::size_t t = 0; t < trace.objective.size(); ++t) f << t << ',' << format_number(trace.objective[t]) << '\n';
}

Method parse_method(std::string_view name) {
  if (name == "full") return Method::Full;
  if (name == "coreset") return Method::Coreset;
  if (name == "uniform") return Method::Uniform;
  if (name == "distance") return Method::Distance;
  if (name == "l1lev") return Method::L1Lev;
  if (name == "lewis") return Method::Lewis;
  fail(ErrorCode::Config, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Full: return "full";
    case Method::Coreset: return "coreset";
    case Method::Uniform: return "uniform";
    case Method::Distance: return "distance";
    case Method::L1Lev: return "l1lev";
    case Method::Lewis: return "lewis";
  }
  return "?";
}

Metrics compute_metrics(const ItemParameters& full_items, const AbilityParameters& full_abilities,
                        const ItemParameters& core_items, const AbilityParameters& core_abilities,
                        double f_full, double f_core, double f_full_at_core) {
  require(full_items.size() == core_items.size() && full_abilities.size() == core_abilities.size(),
          ErrorCode::DimensionMismatch, "compute_metrics: parameter sets differ in size");
  require(f_full > 0, ErrorCode::InvalidArgument, "compute_metrics: f_full must be positive");
  auto standardized = [](const AbilityParameters& ab) {
    const double n = static_cast<double>(ab.size());
    const double mean = pairwise_sum(ab.theta) / n;
    PairwiseSum<double> ss;
    for (double t : ab.theta) ss.add((t - mean) * (t - mean));
    return std::abs(mean) <= 1e-8 && std::abs(std::sqrt(ss.total() / n) - 1.0) <= 1e-8;
  };
  require(standardized(full_abilities) && standardized(core_abilities), ErrorCode::InvalidArgument,
          "compute_metrics: abilities must be standardized first");
  Metrics out;
  out.f_full = f_full;
  out.f_core = f_core;
  out.f_full_at_core = f_full_at_core;
  out.rel_err = std::abs(f_core - f_full) / f_full;
  out.lemma_ratio = f_full_at_core / f_full;
  PairwiseSum<double> ma, mt;
  for (std::size_t i = 0; i < full_items.size(); ++i)
    ma.add(std::abs(full_items.a[i] - core_items.a[i]) + std::abs(full_items.b[i] - core_items.b[i]) +
           std::abs(full_items.c[i] - core_items.c[i]));
  for (std::size_t j = 0; j < full_abilities.size(); ++j)
    mt.add(std::abs(full_abilities.theta[j] - core_abilities.theta[j]));
  out.mad_alpha = full_items.size() ? ma.total() / static_cast<double>(full_items.size()) : 0.0;
  out.mad_theta = full_abilities.size() ? mt.total() / static_cast<double>(full_abilities.size()) : 0.0;
  return out;
}

std::vector<MuEstimate> mu_table(const ResponseMatrix& y, const ItemParameters& items,
                                 const AbilityParameters& abilities, MuPolicy policy) {
  std::vector<MuEstimate> out(y.items());
  parallel_for(y.items(), [&](std::size_t i) { out[i] = item_mu(y, items, abilities, i, policy); });
  return out;
}

void write_mu_csv(const std::vector<MuEstimate>& table, const std::string& path) {
  auto f = open_out(path);
  f << "item,mu0,mu1,method\n";
  for (std::size_t i = 0; i < table.size(); ++i)
    f << i << ',' << format_number(table[i].mu0) << ',' << format_number(table[i].mu1) << ','
      << (table[i].method == MuMethod::ExactSweep ? "exact" : "heuristic") << '\n';
}

// Config --------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  require(schema == 1, ErrorCode::Config, "config schema must be 1");
  require(repetitions >= 1, ErrorCode::Config, "repetitions must be >= 1");
  require(iterations >= 1, ErrorCode::Config, "iterations must be >= 1");
  require(k >= 1, ErrorCode::Config, "k must be >= 1");
  require(rounds >= 1, ErrorCode::Config, "rounds must be >= 1");
  require(epsilon > 0 && kappa > 0, ErrorCode::Config, "epsilon and kappa must be positive");
  require(distance_centers >= 1, ErrorCode::Config, "distance centers must be >= 1");
  if (data_path.empty()) {
    gen.validate();
    for (Method mth : methods)
      if (mth != Method::Full)
        require(k < gen.n, ErrorCode::Config, "k must be smaller than n for subsampling methods");
  } else {
    require(std::filesystem::exists(data_path), ErrorCode::Config, "data file does not exist");
  }
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["schema"] = schema;
  j["data_path"] = data_path;
  j["labels"] = labels == LabelFormat::ZeroOne ? "01" : "pm1";
  j["n"] = gen.n;
  j["m"] = gen.m;
  j["model"] = std::string(to_string(model));
  json ms = json::array();
  for (Method mth : methods) ms.push_back(std::string(to_string(mth)));
  j["methods"] = ms;
  j["k"] = k;
  j["repetitions"] = repetitions;
  j["iterations"] = iterations;
  j["seed"] = seed;
  j["sketched"] = sketched;
  j["rounds"] = rounds;
  j["sampling"] = sampling == SamplingMethod::IIDAlias ? "iid" : "chao";
  j["epsilon"] = epsilon;
  j["kappa"] = kappa;
  j["mu_policy"] = std::string(policy_name(mu_policy));
  j["distance_centers"] = distance_centers;
  j["write_mu_table"] = write_mu_table;
  j["parallel_reps"] = parallel_reps;
  j["out_dir"] = out_dir;
  j["c_sd"] = gen.c.sd;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("invalid JSON config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::Config, "config must be a JSON object");
  static const std::set<std::string> known{
      "schema", "data_path", "labels",   "n",       "m",       "model",   "methods",
      "k",      "repetitions", "iterations", "seed", "sketched", "rounds", "sampling",
      "epsilon", "kappa",   "mu_policy", "distance_centers", "write_mu_table", "parallel_reps",
      "out_dir", "c_sd"};
  for (const auto& item : j.items())
    if (!known.count(item.key())) fail(ErrorCode::Config, "unknown config key '" + item.key() + "'");
  ExperimentConfig c;
  try {
    c.schema = j.value("schema", 0);
    if (c.schema != 1) fail(ErrorCode::Config, "config schema must be 1");
    c.data_path = j.value("data_path", std::string());
    c.labels = parse_label_format(j.value("labels", std::string("pm1")));
    c.gen.n = j.value("n", c.gen.n);
    c.gen.m = j.value("m", c.gen.m);
    c.model = parse_model_kind(j.value("model", std::string("2pl")));
    c.gen.model = c.model;
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& mth : j.at("methods")) c.methods.push_back(parse_method(mth.get<std::string>()));
    }
    c.k = j.value("k", c.k);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.iterations = j.value("iterations", c.iterations);
    c.seed = j.value("seed", c.seed);
    c.gen.seed = c.seed;
    c.sketched = j.value("sketched", c.sketched);
    c.rounds = j.value("rounds", c.rounds);
    const std::string sampling = j.value("sampling", std::string("iid"));
    if (sampling != "iid" && sampling != "chao") fail(ErrorCode::Config, "sampling must be iid or chao");
    c.sampling = sampling == "iid" ? SamplingMethod::IIDAlias : SamplingMethod::ChaoReservoir;
    c.epsilon = j.value("epsilon", c.epsilon);
    c.kappa = j.value("kappa", c.kappa);
    c.mu_policy = parse_policy(j.value("mu_policy", std::string("auto")));
    c.distance_centers = j.value("distance_centers", c.distance_centers);
    c.write_mu_table = j.value("write_mu_table", c.write_mu_table);
    c.parallel_reps = j.value("parallel_reps", c.parallel_reps);
    c.out_dir = j.value("out_dir", std::string());
    c.gen.c.sd = j.value("c_sd", c.gen.c.sd);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

// Orchestration ---------------------------------------------------------------------

const MethodSummary* ExperimentReport::summary(Method method) const {
  for (const auto& s : summaries)
    if (s.method == method) return &s;
  return nullptr;
}

std::string ExperimentReport::to_json() const {
  json j;
  j["config"] = json::parse(config.to_json());
  j["n"] = n;
  j["m"] = m;
  j["full"] = run_json(full);
  json runs_json = json::array();
  for (const auto& r : runs) runs_json.push_back(run_json(r));
  j["runs"] = runs_json;
  json sums = json::array();
  for (const auto& s : summaries)
    sums.push_back({{"method", std::string(to_string(s.method))},
                    {"best_repetition", s.best_repetition},
                    {"best", metrics_json(s.best)},
                    {"mean_seconds", s.mean_seconds},
                    {"gain_percent", s.gain_percent}});
  j["summaries"] = sums;
  if (!mu.empty()) {
    std::vector<double> mu0, mu1;
    std::size_t degenerate = 0;
    for (const auto& e : mu) {
      mu0.push_back(e.mu0);
      mu1.push_back(e.mu1);
      degenerate += e.degenerate();
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t h = v.size() / 2;
      return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    };
    j["mu"] = {{"median_mu0", number_or_string(median(mu0))},
               {"median_mu1", number_or_string(median(mu1))},
               {"max_mu0", number_or_string(*std::max_element(mu0.begin(), mu0.end()))},
               {"max_mu1", number_or_string(*std::max_element(mu1.begin(), mu1.end()))},
               {"degenerate_items", degenerate}};
  }
  return j.dump(2);
}

WeightedCoreset build_subsample(Method method, const ResponseMatrix& y, const ItemParameters& items,
                                const AbilityParameters& abilities, ModelKind model, std::size_t k,
                                std::uint64_t seed, const ExperimentConfig& config) {
  const auto rows = ability_rows(abilities.theta);
  switch (method) {
    case Method::Coreset: {
      CoresetOptions opt;
      opt.sketched = config.sketched;
      opt.rounds = config.rounds;
      opt.mu_policy = config.mu_policy;
      opt.epsilon = config.epsilon;
      opt.kappa = config.kappa;
      opt.method = config.sampling;
      opt.seed = seed;
      return build_coreset(y, items, abilities, model, k, opt);
    }
    case Method::Uniform: return uniform_coreset(y.examinees(), k, seed);
    case Method::Distance:
      return distance_sampling_coreset(rows, k, std::min(config.distance_centers, rows.size()), seed);
    case Method::L1Lev: return score_based_coreset(BaselineKind::L1Leverage, rows, k, seed);
    case Method::Lewis: return score_based_coreset(BaselineKind::LewisL1, rows, k, seed);
    case Method::Full: break;
  }
  fail(ErrorCode::Config, "build_subsample: full is not a subsampling method");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!config.data_path.empty()) return run_experiment(config, read_responses_csv(config.data_path, config.labels));
  GenConfig gen = config.gen;
  gen.model = config.model;
  gen.seed = config.seed;
  return run_experiment(config, generate_synthetic(gen).y);
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ResponseMatrix& y) {
  require(config.repetitions >= 1 && config.iterations >= 1, ErrorCode::Config,
          "repetitions and iterations must be >= 1");
  ExperimentReport report;
  report.config = config;
  report.n = y.examinees();
  report.m = y.items();
  for (Method mth : config.methods)
    if (mth != Method::Full)
      require(config.k < y.examinees(), ErrorCode::Config, "k must be smaller than n");

  FitConfig fit_cfg;
  fit_cfg.max_main_iterations = config.iterations;
  fit_cfg.seed = config.seed;
  const auto start = initial_parameters(y, config.model, fit_cfg);

  // Full-data reference fit.
  const auto t_full = Clock::now();
  FitResult full = alternate_fit(y, config.model, fit_cfg, nullptr, start);
  const double full_seconds = seconds_since(t_full);
  const double f_full = full.trace.objective.back();
  auto [full_items, full_abilities] = standardize(full.items, full.abilities);
  report.full.method = Method::Full;
  report.full.seed = config.seed;
  report.full.metrics = compute_metrics(full_items, full_abilities, full_items, full_abilities, f_full,
                                        f_full, f_full);
  report.full.seconds_ability_step = full.trace.seconds_ability_step;
  report.full.seconds_item_step = full.trace.seconds_item_step;
  report.full.seconds_total = full_seconds;
  report.full.iterations = full.trace.iterations;
  report.full.monotone = is_monotone(full.trace.objective);
  report.full.coreset_distinct = y.examinees();
  if (config.write_mu_table) report.mu = mu_table(y, full.items, full.abilities, config.mu_policy);

  const bool write = !config.out_dir.empty();
  if (write) {
    std::filesystem::create_directories(config.out_dir);
    write_trace_csv(full.trace, config.out_dir + "/trace_full.csv");
    write_items_csv(full_items, config.out_dir + "/items_full.csv");
    write_abilities_csv(full_abilities, config.out_dir + "/abilities_full.csv");
    if (!report.mu.empty()) write_mu_csv(report.mu, config.out_dir + "/mu.csv");
  }

  struct RepOutcome {
    RunRecord record;
    FitResult fit;  // standardized
    WeightedCoreset coreset;
    FitTrace trace;
  };

  auto run_rep = [&](Method mth, int r) {
    RepOutcome out;
    RunRecord& rec = out.record;
    rec.method = mth;
    rec.repetition = r;
    rec.seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const auto t0 = Clock::now();
    out.coreset = build_subsample(mth, y, start.first, start.second, config.model, config.k, rec.seed, config);
    rec.seconds_construction = seconds_since(t0);
    FitResult fit = alternate_fit(y, config.model, fit_cfg, &out.coreset, start);
    rec.seconds_total = seconds_since(t0);
    rec.seconds_ability_step = fit.trace.seconds_ability_step;
    rec.seconds_item_step = fit.trace.seconds_item_step;
    rec.iterations = fit.trace.iterations;
    rec.monotone = is_monotone(fit.trace.objective);
    rec.coreset_distinct = out.coreset.distinct();
    rec.coreset_forced = out.coreset.forced;
    const double f_core = fit.trace.objective.back();
    const double f_full_at_core = full_nll(y, fit.items, fit.abilities);
    auto [ci, ca] = standardize(fit.items, fit.abilities);
    rec.metrics = compute_metrics(full_items, full_abilities, ci, ca, f_full, f_core, f_full_at_core);
    out.trace = std::move(fit.trace);
    out.fit.items = std::move(ci);
    out.fit.abilities = std::move(ca);
    return out;
  };

  for (Method mth : config.methods) {
    if (mth == Method::Full) continue;
    std::vector<RepOutcome> reps;
    if (config.parallel_reps) {
      std::vector<std::future<RepOutcome>> jobs;
      for (int r = 0; r < config.repetitions; ++r)
        jobs.push_back(std::async(std::launch::async, run_rep, mth, r));
      for (auto& job : jobs) reps.push_back(job.get());
    } else {
      for (int r = 0; r < config.repetitions; ++r) reps.push_back(run_rep(mth, r));
    }
    MethodSummary s;
    s.method = mth;
    double total_seconds = 0.0;
    for (const auto& rep : reps) {
      report.runs.push_back(rep.record);
      total_seconds += rep.record.seconds_total;
      // Ties keep the earlier repetition.
      if (rep.record.metrics.f_core < reps[static_cast<std::size_t>(s.best_repetition)].record.metrics.f_core)
        s.best_repetition = rep.record.repetition;
    }
    const RepOutcome& best = reps[static_cast<std::size_t>(s.best_repetition)];
    s.best = best.record.metrics;
    s.mean_seconds = total_seconds / static_cast<double>(reps.size());
    s.gain_percent = (1.0 - s.mean_seconds / full_seconds) * 100.0;
    report.summaries.push_back(s);

    if (write) {
      const std::string tag(to_string(mth));
      write_coreset_csv(best.coreset, config.out_dir + "/coreset_" + tag + ".csv");
      write_trace_csv(best.trace, config.out_dir + "/trace_" + tag + ".csv");
      auto items_f = open_out(config.out_dir + "/items_bias_" + tag + ".csv");
      items_f << "item,a_full,a_core,b_full,b_core,c_full,c_core\n";
      for (std::size_t i = 0; i < full_items.size(); ++i)
        items_f << i << ',' << format_number(full_items.a[i]) << ',' << format_number(best.fit.items.a[i]) << ','
                << format_number(full_items.b[i]) << ',' << format_number(best.fit.items.b[i]) << ','
                << format_number(full_items.c[i]) << ',' << format_number(best.fit.items.c[i]) << '\n';
      auto theta_f = open_out(config.out_dir + "/theta_pairs_" + tag + ".csv");
      theta_f << "examinee,theta_full,theta_core\n";
      for (std::size_t j = 0; j < full_abilities.size(); ++j)
        theta_f << j << ',' << format_number(full_abilities.theta[j]) << ','
                << format_number(best.fit.abilities.theta[j]) << '\n';
    }
  }
  report.full_fit.items = std::move(full_items);
  report.full_fit.abilities = std::move(full_abilities);
  report.full_fit.trace = std::move(full.trace);

  if (write) {
    write_text(config.out_dir + "/report.json", report.to_json() + "\n");
    auto f = open_out(config.out_dir + "/runs.csv");
    f << "method,repetition,seed,f_full,f_core,f_full_at_core,rel_err,lemma_ratio,mad_alpha,mad_theta,"
         "coreset_distinct,coreset_forced,seconds_construction,seconds_ability_step,seconds_item_step,"
         "seconds_total,iterations,monotone\n";
    std::vector<RunRecord> all{report.full};
    all.insert(all.end(), report.runs.begin(), report.runs.end());
    for (const auto& r : all) {
      const Metrics& mt = r.metrics;
      f << to_string(r.method) << ',' << r.repetition << ',' << r.seed << ',' << format_number(mt.f_full) << ','
        << format_number(mt.f_core) << ',' << format_number(mt.f_full_at_core) << ',' << format_number(mt.rel_err)
        << ',' << format_number(mt.lemma_ratio) << ',' << format_number(mt.mad_alpha) << ','
        << format_number(mt.mad_theta) << ',' << r.coreset_distinct << ',' << r.coreset_forced << ','
        << format_number(r.seconds_construction) << ',' << format_number(r.seconds_ability_step) << ','
        << format_number(r.seconds_item_step) << ',' << format_number(r.seconds_total) << ',' << r.iterations
        << ',' << (r.monotone ? 1 : 0) << '\n';
    }
  }
  return report;
}

}  // namespace irt
