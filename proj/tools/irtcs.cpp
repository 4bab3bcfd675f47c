// irtcs: command-line front end over the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irt/irt.h"
#include "json.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::size_t n = 1000;
  std::size_t m = 20;
  std::size_t k = 100;
  std::string model = "2pl";
  std::string method = "coreset";
  std::string methods = "coreset,uniform";
  int reps = 5;
  int iters = 50;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool sketched = false;
  int rounds = 1;
  std::string labels = "pm1";
  std::string data;
  std::string config;
  bool dense = false;
  std::string mu_policy = "auto";
  bool mu_table = false;
  bool parallel_reps = false;
};

struct Failure {
  int exit_code;
};

int exit_code_for(irt_status s) {
  switch (s) {
    case IRT_ERR_INVALID_ARGUMENT:
    case IRT_ERR_CONFIG:
    case IRT_ERR_IO:
    case IRT_ERR_DIMENSION:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

void check(irt_status s, const char* what) {
  if (s == IRT_OK) return;
  std::fprintf(stderr, "irtcs: %s failed (%s): %s\n", what, irt_status_name(s), irt_last_error());
  throw Failure{exit_code_for(s)};
}

struct Dataset {
  irt_dataset* ptr = nullptr;
  ~Dataset() { irt_dataset_free(ptr); }
};

void load_data(const Options& o, Dataset& d) {
  if (!o.data.empty()) {
    check(irt_dataset_load(o.data.c_str(), o.labels.c_str(), &d.ptr), "loading responses");
  } else {
    check(irt_dataset_generate(o.n, o.m, o.model.c_str(), o.seed, &d.ptr), "generating data");
  }
}

std::vector<std::string> split_methods(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_gen(const Options& o) {
  Dataset d;
  check(irt_dataset_generate(o.n, o.m, o.model.c_str(), o.seed, &d.ptr), "generating data");
  std::filesystem::create_directories(o.out);
  const std::string path = o.out + "/responses.csv";
  check(irt_dataset_save(d.ptr, path.c_str(), o.dense ? 1 : 0, o.labels.c_str()), "writing responses");
  check(irt_dataset_save_truth(d.ptr, o.out.c_str()), "writing generating parameters");
  std::printf("wrote %s (%zu items x %zu examinees)\n", path.c_str(), o.m, o.n);
  return 0;
}

void print_trace_tail(const irt_fit* fit) {
  std::size_t count = 0;
  check(irt_fit_trace(fit, nullptr, 0, &count), "reading trace");
  std::vector<double> trace(count);
  check(irt_fit_trace(fit, trace.data(), trace.size(), &count), "reading trace");
  double seconds = 0.0;
  check(irt_fit_seconds(fit, &seconds), "reading timings");
  std::printf("iterations %zu  objective %.6f -> %.6f  seconds %.2f\n", count - 1, trace.front(),
              trace.back(), seconds);
}

int cmd_fit(const Options& o) {
  Dataset d;
  load_data(o, d);
  irt_fit* fit = nullptr;
  check(irt_fit_run(d.ptr, nullptr, o.model.c_str(), o.iters, &fit), "fitting");
  print_trace_tail(fit);
  const irt_status s = irt_fit_save(fit, o.out.c_str());
  irt_fit_free(fit);
  check(s, "writing fit");
  std::printf("wrote %s/items.csv, abilities.csv, trace.csv\n", o.out.c_str());
  return 0;
}

int cmd_coreset_fit(const Options& o) {
  Dataset d;
  load_data(o, d);
  std::filesystem::create_directories(o.out);
  double best_objective = 0.0;
  int best_rep = -1;
  for (int r = 0; r < o.reps; ++r) {
    irt_coreset* cs = nullptr;
    check(irt_coreset_build(d.ptr, o.model.c_str(), o.method.c_str(), o.k, o.seed + static_cast<std::uint64_t>(r),
                            o.sketched ? 1 : 0, o.rounds, &cs),
          "building subsample");
    irt_fit* fit = nullptr;
    const irt_status s = irt_fit_run(d.ptr, cs, o.model.c_str(), o.iters, &fit);
    if (s != IRT_OK) irt_coreset_free(cs);
    check(s, "fitting on subsample");
    std::size_t count = 0;
    irt_fit_trace(fit, nullptr, 0, &count);
    std::vector<double> trace(count);
    irt_fit_trace(fit, trace.data(), count, &count);
    std::size_t distinct = 0, forced = 0;
    irt_coreset_size(cs, &distinct, &forced);
    std::printf("rep %d: rows %zu (forced %zu)  f_core %.6f\n", r, distinct, forced, trace.back());
    if (best_rep < 0 || trace.back() < best_objective) {
      best_rep = r;
      best_objective = trace.back();
      check(irt_fit_save(fit, o.out.c_str()), "writing fit");
      const std::string path = o.out + "/coreset.csv";
      check(irt_coreset_save(cs, path.c_str()), "writing coreset");
    }
    irt_fit_free(fit);
    irt_coreset_free(cs);
  }
  std::printf("best repetition %d (f_core %.6f) written to %s\n", best_rep, best_objective, o.out.c_str());
  return 0;
}

std::string experiment_json(const Options& o, const std::vector<std::string>& methods) {
  nlohmann::json j;
  if (!o.config.empty()) {
    std::ifstream f(o.config);
    if (!f) {
      std::fprintf(stderr, "irtcs: cannot open config '%s'\n", o.config.c_str());
      throw Failure{kExitConfig};
    }
    try {
      j = nlohmann::json::parse(f);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "irtcs: invalid config: %s\n", e.what());
      throw Failure{kExitConfig};
    }
    if (!j.contains("out_dir")) j["out_dir"] = o.out;
    return j.dump();
  }
  j["schema"] = 1;
  j["n"] = o.n;
  j["m"] = o.m;
  j["k"] = o.k;
  j["model"] = o.model;
  j["methods"] = methods;
  j["repetitions"] = o.reps;
  j["iterations"] = o.iters;
  j["seed"] = o.seed;
  j["sketched"] = o.sketched;
  j["rounds"] = o.rounds;
  j["labels"] = o.labels;
  j["data_path"] = o.data;
  j["mu_policy"] = o.mu_policy;
  j["write_mu_table"] = o.mu_table;
  j["parallel_reps"] = o.parallel_reps;
  j["out_dir"] = o.out;
  return j.dump();
}

int cmd_compare(const Options& o) {
  const std::string cfg = experiment_json(o, split_methods(o.methods));
  irt_report* rep = nullptr;
  check(irt_experiment_run(nullptr, cfg.c_str(), &rep), "running experiment");
  std::fputs(irt_report_text(rep), stdout);
  irt_report_free(rep);
  return 0;
}

int cmd_mu(const Options& o) {
  Dataset d;
  load_data(o, d);
  irt_fit* fit = nullptr;
  check(irt_fit_run(d.ptr, nullptr, o.model.c_str(), o.iters, &fit), "fitting");
  std::filesystem::create_directories(o.out);
  const std::string path = o.out + "/mu.csv";
  double mu0 = 0, mu1 = 0;
  std::size_t degenerate = 0;
  const irt_status s = irt_mu_table(d.ptr, fit, o.mu_policy.c_str(), path.c_str(), &mu0, &mu1, &degenerate);
  irt_fit_free(fit);
  check(s, "computing mu table");
  std::printf("median mu0 %.4f  median mu1 %.4f  degenerate items %zu\nwrote %s\n", mu0, mu1, degenerate,
              path.c_str());
  return 0;
}

int cmd_report(const Options& o) {
  std::string path = o.out;
  if (std::filesystem::is_directory(path)) path += "/report.json";
  irt_report* rep = nullptr;
  check(irt_report_load(path.c_str(), &rep), "reading report");
  std::fputs(irt_report_text(rep), stdout);
  irt_report_free(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coreset-accelerated IRT estimation"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool sizes) {
    if (sizes) {
      sub->add_option("--n", o.n, "examinees (synthetic data)")->check(CLI::PositiveNumber);
      sub->add_option("--m", o.m, "items (synthetic data)")->check(CLI::PositiveNumber);
    }
    sub->add_option("--model", o.model, "1pl, 2pl or 3pl")->check(CLI::IsMember({"1pl", "2pl", "3pl"}));
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--labels", o.labels, "label encoding of CSV input/output")->check(CLI::IsMember({"pm1", "01"}));
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "response CSV (long or dense); synthetic data when omitted");
    sub->add_option("--iters", o.iters, "main-loop iterations")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen", "generate synthetic responses");
  add_common(gen, true);
  gen->add_flag("--dense", o.dense, "write the dense matrix form");

  auto* fit = app.add_subcommand("fit", "fit on the full data");
  add_common(fit, true);
  add_data(fit);

  auto* cfit = app.add_subcommand("coreset-fit", "fit on a subsample");
  add_common(cfit, true);
  add_data(cfit);
  cfit->add_option("--k", o.k, "subsample size")->check(CLI::PositiveNumber);
  cfit->add_option("--method", o.method, "coreset, uniform, distance, l1lev or lewis");
  cfit->add_option("--reps", o.reps, "repetitions")->check(CLI::PositiveNumber);
  cfit->add_flag("--sketched", o.sketched, "CountSketch leverage scores");
  cfit->add_option("--rounds", o.rounds, "coreset rounds (experimental above 1)")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "full fit against subsample methods with metrics");
  add_common(cmp, true);
  add_data(cmp);
  cmp->add_option("--k", o.k, "subsample size")->check(CLI::PositiveNumber);
  cmp->add_option("--method", o.methods, "comma-separated methods");
  cmp->add_option("--reps", o.reps, "repetitions")->check(CLI::PositiveNumber);
  cmp->add_flag("--sketched", o.sketched, "CountSketch leverage scores");
  cmp->add_option("--rounds", o.rounds, "coreset rounds")->check(CLI::PositiveNumber);
  cmp->add_option("--config", o.config, "JSON experiment config (schema 1)");
  cmp->add_option("--mu-policy", o.mu_policy, "auto, heuristic or exact");
  cmp->add_flag("--mu-table", o.mu_table, "also write the per-item mu table");
  cmp->add_flag("--parallel-reps", o.parallel_reps, "run repetitions concurrently");

  auto* mu = app.add_subcommand("mu", "per-item mu table at the fitted optimum");
  add_common(mu, true);
  add_data(mu);
  mu->add_option("--mu-policy", o.mu_policy, "auto, heuristic or exact")
      ->check(CLI::IsMember({"auto", "heuristic", "exact"}));

  auto* report = app.add_subcommand("report", "summarize a report.json (or a directory holding one)");
  report->add_option("--out", o.out, "report file or directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (cfit->parsed() && o.method.find(',') != std::string::npos) {
    std::fprintf(stderr, "irtcs: coreset-fit takes a single method\n");
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(o);
    if (fit->parsed()) return cmd_fit(o);
    if (cfit->parsed()) return cmd_coreset_fit(o);
    if (cmp->parsed()) return cmd_compare(o);
    if (mu->parsed()) return cmd_mu(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return 0;
}
