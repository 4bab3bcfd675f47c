#include "irt/irt.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "irt/coreset.hpp"
#include "irt/error.hpp"
#include "irt/experiment.hpp"
#include "irt/solver.hpp"
#include "irt/synth.hpp"
#include "json.hpp"

struct irt_dataset {
  irt::ResponseMatrix y;
  std::optional<irt::ItemParameters> true_items;
  std::optional<irt::AbilityParameters> true_abilities;
};

struct irt_coreset {
  irt::WeightedCoreset coreset;
};

struct irt_fit {
  irt::FitResult raw;
  irt::ItemParameters items;        // standardized
  irt::AbilityParameters abilities; // standardized
  double seconds = 0.0;
};

struct irt_report {
  std::string json;
  std::string text;
  nlohmann::json parsed;
};

namespace {

thread_local std::string last_error;

irt_status map_code(irt::ErrorCode code) {
  using irt::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return IRT_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return IRT_ERR_DIMENSION;
    case ErrorCode::DegenerateScale: return IRT_ERR_DEGENERATE_SCALE;
    case ErrorCode::DegenerateLabels: return IRT_ERR_DEGENERATE_LABELS;
    case ErrorCode::UndefinedComplexity: return IRT_ERR_UNDEFINED_COMPLEXITY;
    case ErrorCode::EmptyCoreset: return IRT_ERR_EMPTY_CORESET;
    case ErrorCode::Config: return IRT_ERR_CONFIG;
    case ErrorCode::Io: return IRT_ERR_IO;
    case ErrorCode::Numeric: return IRT_ERR_NUMERIC;
  }
  return IRT_ERR_INTERNAL;
}

template <class F>
irt_status guarded(F&& f) {
  try {
    f();
    return IRT_OK;
  } catch (const irt::Error& e) {
    last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return IRT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return IRT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return IRT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) irt::fail(irt::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::string fmt(double v, int precision = 5) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string render_text(const nlohmann::json& j) {
  std::ostringstream os;
  const auto& cfg = j.at("config");
  os << "model " << cfg.value("model", std::string("?")) << "  n " << j.value("n", 0) << "  m "
     << j.value("m", 0) << "  k " << cfg.value("k", 0) << "  reps " << cfg.value("repetitions", 0)
     << "  iterations " << cfg.value("iterations", 0) << '\n';
  const auto& full = j.at("full");
  os << "full: f_full " << fmt(full.at("metrics").value("f_full", 0.0), 3) << "  seconds "
     << fmt(full.value("seconds_total", 0.0), 2) << '\n';
  os << "method      rel_err    lemma      mad_alpha  mad_theta  mean_s     gain_%\n";
  for (const auto& s : j.at("summaries")) {
    const auto& b = s.at("best");
    std::string name = s.value("method", std::string("?"));
    name.resize(std::max<std::size_t>(name.size(), 10), ' ');
    os << name << "  " << fmt(b.value("rel_err", 0.0)) << "    " << fmt(b.value("lemma_ratio", 0.0)) << "    "
       << fmt(b.value("mad_alpha", 0.0)) << "    " << fmt(b.value("mad_theta", 0.0)) << "    "
       << fmt(s.value("mean_seconds", 0.0), 2) << "    " << fmt(s.value("gain_percent", 0.0), 1) << '\n';
  }
  if (j.contains("mu")) {
    const auto& mu = j.at("mu");
    os << "mu: median mu0 " << mu.at("median_mu0").dump() << "  median mu1 " << mu.at("median_mu1").dump()
       << "  degenerate items " << mu.value("degenerate_items", 0) << '\n';
  }
  return os.str();
}

irt::MuPolicy parse_policy(const char* p) {
  const std::string s = p ? p : "auto";
  if (s == "auto") return irt::MuPolicy::Auto;
  if (s == "heuristic") return irt::MuPolicy::Heuristic;
  if (s == "exact") return irt::MuPolicy::Exact;
  irt::fail(irt::ErrorCode::Config, "unknown mu policy '" + s + "'");
}

}  // namespace

extern "C" {

const char* irt_version(void) { return "1.0.0"; }

const char* irt_last_error(void) { return last_error.c_str(); }

const char* irt_status_name(irt_status status) {
  switch (status) {
    case IRT_OK: return "ok";
    case IRT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case IRT_ERR_DIMENSION: return "dimension mismatch";
    case IRT_ERR_DEGENERATE_SCALE: return "degenerate scale";
    case IRT_ERR_DEGENERATE_LABELS: return "degenerate labels";
    case IRT_ERR_UNDEFINED_COMPLEXITY: return "undefined complexity";
    case IRT_ERR_EMPTY_CORESET: return "empty coreset";
    case IRT_ERR_CONFIG: return "configuration error";
    case IRT_ERR_IO: return "i/o error";
    case IRT_ERR_NUMERIC: return "numeric failure";
    case IRT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

irt_status irt_dataset_generate(size_t n, size_t m, const char* model, uint64_t seed, irt_dataset** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    irt::GenConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.model = irt::parse_model_kind(model);
    cfg.seed = seed;
    auto data = irt::generate_synthetic(cfg);
    *out = new irt_dataset{std::move(data.y), std::move(data.items), std::move(data.abilities)};
  });
}

irt_status irt_dataset_from_labels(size_t m, size_t n, const int8_t* labels, irt_dataset** out) {
  return guarded([&] {
    need(labels, "labels");
    need(out, "out");
    std::vector<std::int8_t> y(labels, labels + m * n);
    *out = new irt_dataset{irt::ResponseMatrix(m, n, std::move(y)), std::nullopt, std::nullopt};
  });
}

irt_status irt_dataset_load(const char* path, const char* labels, irt_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto fmt = irt::parse_label_format(labels ? labels : "pm1");
    *out = new irt_dataset{irt::read_responses_csv(path, fmt), std::nullopt, std::nullopt};
  });
}

irt_status irt_dataset_save(const irt_dataset* data, const char* path, int dense, const char* labels) {
  return guarded([&] {
    need(data, "data");
    need(path, "path");
    irt::write_responses_csv(data->y, path, dense != 0, irt::parse_label_format(labels ? labels : "pm1"));
  });
}

irt_status irt_dataset_save_truth(const irt_dataset* data, const char* dir) {
  return guarded([&] {
    need(data, "data");
    need(dir, "dir");
    if (!data->true_items || !data->true_abilities)
      irt::fail(irt::ErrorCode::InvalidArgument, "dataset has no generating parameters");
    std::filesystem::create_directories(dir);
    irt::write_items_csv(*data->true_items, std::string(dir) + "/items_true.csv");
    irt::write_abilities_csv(*data->true_abilities, std::string(dir) + "/abilities_true.csv");
  });
}

irt_status irt_dataset_dims(const irt_dataset* data, size_t* m, size_t* n) {
  return guarded([&] {
    need(data, "data");
    if (m) *m = data->y.items();
    if (n) *n = data->y.examinees();
  });
}

void irt_dataset_free(irt_dataset* data) { delete data; }

irt_status irt_coreset_build(const irt_dataset* data, const char* model, const char* method, size_t k,
                             uint64_t seed, int sketched, int rounds, irt_coreset** out) {
  return guarded([&] {
    need(data, "data");
    need(model, "model");
    need(method, "method");
    need(out, "out");
    const auto kind = irt::parse_model_kind(model);
    const auto mth = irt::parse_method(method);
    irt::ExperimentConfig cfg;
    cfg.sketched = sketched != 0;
    cfg.rounds = rounds;
    cfg.model = kind;
    irt::FitConfig fit_cfg;
    const auto start = irt::initial_parameters(data->y, kind, fit_cfg);
    if (k == 0 || k >= data->y.examinees())
      irt::fail(irt::ErrorCode::Config, "k must satisfy 1 <= k < n");
    *out = new irt_coreset{irt::build_subsample(mth, data->y, start.first, start.second, kind, k, seed, cfg)};
  });
}

irt_status irt_coreset_size(const irt_coreset* coreset, size_t* distinct, size_t* forced) {
  return guarded([&] {
    need(coreset, "coreset");
    if (distinct) *distinct = coreset->coreset.distinct();
    if (forced) *forced = coreset->coreset.forced;
  });
}

irt_status irt_coreset_save(const irt_coreset* coreset, const char* path) {
  return guarded([&] {
    need(coreset, "coreset");
    need(path, "path");
    irt::write_coreset_csv(coreset->coreset, path);
  });
}

void irt_coreset_free(irt_coreset* coreset) { delete coreset; }

irt_status irt_fit_run(const irt_dataset* data, const irt_coreset* coreset, const char* model, int iterations,
                   irt_fit** out) {
  return guarded([&] {
    need(data, "data");
    need(model, "model");
    need(out, "out");
    irt::FitConfig cfg;
    cfg.max_main_iterations = iterations;
    const auto kind = irt::parse_model_kind(model);
    auto fit = std::make_unique<irt_fit>();
    fit->raw = irt::alternate_fit(data->y, kind, cfg, coreset ? &coreset->coreset : nullptr);
    fit->seconds = fit->raw.trace.seconds_total;
    auto [items, abilities] = irt::standardize(fit->raw.items, fit->raw.abilities);
    fit->items = std::move(items);
    fit->abilities = std::move(abilities);
    *out = fit.release();
  });
}

irt_status irt_fit_trace(const irt_fit* fit, double* values, size_t capacity, size_t* count) {
  return guarded([&] {
    need(fit, "fit");
    const auto& t = fit->raw.trace.objective;
    if (count) *count = t.size();
    if (values) std::copy_n(t.begin(), std::min(capacity, t.size()), values);
  });
}

irt_status irt_fit_parameters(const irt_fit* fit, double* a, double* b, double* c, double* theta) {
  return guarded([&] {
    need(fit, "fit");
    if (a) std::copy(fit->items.a.begin(), fit->items.a.end(), a);
    if (b) std::copy(fit->items.b.begin(), fit->items.b.end(), b);
    if (c) std::copy(fit->items.c.begin(), fit->items.c.end(), c);
    if (theta) std::copy(fit->abilities.theta.begin(), fit->abilities.theta.end(), theta);
  });
}

irt_status irt_fit_full_objective(const irt_dataset* data, const irt_fit* fit, double* out) {
  return guarded([&] {
    need(data, "data");
    need(fit, "fit");
    need(out, "out");
    *out = irt::full_nll(data->y, fit->raw.items, fit->raw.abilities);
  });
}

irt_status irt_fit_seconds(const irt_fit* fit, double* total) {
  return guarded([&] {
    need(fit, "fit");
    need(total, "total");
    *total = fit->seconds;
  });
}

irt_status irt_fit_save(const irt_fit* fit, const char* dir) {
  return guarded([&] {
    need(fit, "fit");
    need(dir, "dir");
    std::filesystem::create_directories(dir);
    irt::write_items_csv(fit->items, std::string(dir) + "/items.csv");
    irt::write_abilities_csv(fit->abilities, std::string(dir) + "/abilities.csv");
    irt::write_trace_csv(fit->raw.trace, std::string(dir) + "/trace.csv");
  });
}

void irt_fit_free(irt_fit* fit) { delete fit; }

irt_status irt_mu_table(const irt_dataset* data, const irt_fit* fit, const char* policy, const char* path,
                        double* median_mu0, double* median_mu1, size_t* degenerate_items) {
  return guarded([&] {
    need(data, "data");
    need(fit, "fit");
    const auto table = irt::mu_table(data->y, fit->raw.items, fit->raw.abilities, parse_policy(policy));
    if (path) irt::write_mu_csv(table, path);
    std::vector<double> mu0, mu1;
    std::size_t degenerate = 0;
    for (const auto& e : table) {
      mu0.push_back(e.mu0);
      mu1.push_back(e.mu1);
      degenerate += e.degenerate();
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t h = v.size() / 2;
      return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    };
    if (median_mu0) *median_mu0 = median(mu0);
    if (median_mu1) *median_mu1 = median(mu1);
    if (degenerate_items) *degenerate_items = degenerate;
  });
}

irt_status irt_experiment_run(const irt_dataset* data, const char* config_json, irt_report** out) {
  return guarded([&] {
    need(config_json, "config_json");
    need(out, "out");
    const auto cfg = irt::ExperimentConfig::from_json(config_json);
    const auto report = data ? irt::run_experiment(cfg, data->y) : irt::run_experiment(cfg);
    auto rep = std::make_unique<irt_report>();
    rep->json = report.to_json();
    rep->parsed = nlohmann::json::parse(rep->json);
    rep->text = render_text(rep->parsed);
    *out = rep.release();
  });
}

irt_status irt_report_load(const char* path, irt_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream f(path);
    if (!f) irt::fail(irt::ErrorCode::Io, std::string("cannot open '") + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    auto rep = std::make_unique<irt_report>();
    rep->json = ss.str();
    try {
      rep->parsed = nlohmann::json::parse(rep->json);
      rep->text = render_text(rep->parsed);
    } catch (const nlohmann::json::exception& e) {
      irt::fail(irt::ErrorCode::Io, std::string(path) + ": not a report: " + e.what());
    }
    *out = rep.release();
  });
}

const char* irt_report_json(const irt_report* report) { return report ? report->json.c_str() : ""; }

const char* irt_report_text(const irt_report* report) { return report ? report->text.c_str() : ""; }

irt_status irt_report_summary(const irt_report* report, const char* method, double* rel_err,
                              double* mad_theta, double* gain_percent) {
  return guarded([&] {
    need(report, "report");
    need(method, "method");
    for (const auto& s : report->parsed.at("summaries")) {
      if (s.value("method", std::string()) != method) continue;
      if (rel_err) *rel_err = s.at("best").value("rel_err", 0.0);
      if (mad_theta) *mad_theta = s.at("best").value("mad_theta", 0.0);
      if (gain_percent) *gain_percent = s.value("gain_percent", 0.0);
      return;
    }
    irt::fail(irt::ErrorCode::InvalidArgument, std::string("report has no method '") + method + "'");
  });
}

void irt_report_free(irt_report* report) { delete report; }

}  // extern "C"
