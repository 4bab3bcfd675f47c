#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "irt/error.hpp"
#include "irt/experiment.hpp"
#include "json.hpp"

using namespace irt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("irt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentConfig tiny(std::vector<Method> methods) {
  ExperimentConfig c;
  c.gen.n = 500;
  c.gen.m = 10;
  c.k = 100;
  c.iterations = 5;
  c.repetitions = 2;
  c.methods = std::move(methods);
  return c;
}

std::pair<ItemParameters, AbilityParameters> standardized_params(unsigned seed, std::size_t m, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  ItemParameters it(m);
  for (std::size_t i = 0; i < m; ++i) {
    it.a[i] = 1 + std::abs(nd(gen));
    it.b[i] = nd(gen);
  }
  AbilityParameters ab(n);
  for (auto& t : ab.theta) t = nd(gen);
  return standardize(it, ab);
}

}  // namespace

TEST_CASE("metrics of identical fits vanish") {
  auto [it, ab] = standardized_params(1, 4, 20);
  Metrics m = compute_metrics(it, ab, it, ab, 10.0, 10.0, 10.0);
  CHECK(m.rel_err == 0.0);
  CHECK(m.mad_alpha == 0.0);
  CHECK(m.mad_theta == 0.0);
  CHECK(m.lemma_ratio == 1.0);
}

TEST_CASE("metrics by hand") {
  ItemParameters full(2), core(2);
  full.a = {1.0, 2.0};
  full.b = {0.0, -1.0};
  full.c = {0.1, 0.2};
  core.a = {1.5, 2.0};
  core.b = {0.25, -1.0};
  core.c = {0.1, 0.3};
  AbilityParameters fa(std::vector<double>{-1, 1}), ca(std::vector<double>{1, -1});
  Metrics m = compute_metrics(full, fa, core, ca, 100.0, 110.0, 104.0);
  CHECK(m.rel_err == doctest::Approx(0.1));
  CHECK(m.lemma_ratio == doctest::Approx(1.04));
  // Items: (0.5 + 0.25 + 0) + (0 + 0 + 0.1) over m = 2.
  CHECK(m.mad_alpha == doctest::Approx(0.425));
  // Abilities: (2 + 2) over n = 2.
  CHECK(m.mad_theta == doctest::Approx(2.0));

  AbilityParameters raw(std::vector<double>{0.0, 3.0});
  CHECK_THROWS_AS(compute_metrics(full, raw, core, ca, 1, 1, 1), Error);
  CHECK_THROWS_AS(compute_metrics(full, fa, ItemParameters(3), ca, 1, 1, 1), Error);
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int t = 0; t < 1000; ++t) {
    double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("response CSV round trips in both layouts and label formats") {
  auto dir = scratch("responses");
  GenConfig g;
  g.n = 37;
  g.m = 5;
  ResponseMatrix y = generate_synthetic(g).y;
  for (bool dense : {false, true})
    for (LabelFormat lf : {LabelFormat::PlusMinusOne, LabelFormat::ZeroOne}) {
      auto p = dir / "y.csv";
      write_responses_csv(y, p.string(), dense, lf);
      CHECK(read_responses_csv(p.string(), lf) == y);
    }
}

TEST_CASE("response CSV errors") {
  auto dir = scratch("bad_responses");
  CHECK_THROWS_AS(read_responses_csv((dir / "missing.csv").string()), Error);
  write_file(dir / "bad_label.csv", "item,examinee,y\n0,0,1\n0,1,2\n");
  CHECK_THROWS_AS(read_responses_csv((dir / "bad_label.csv").string()), Error);
  write_file(dir / "wrong_format.csv", "item,examinee,y\n0,0,1\n0,1,0\n");
  CHECK_THROWS_AS(read_responses_csv((dir / "wrong_format.csv").string()), Error);
  CHECK(read_responses_csv((dir / "wrong_format.csv").string(), LabelFormat::ZeroOne).examinees() == 2);
  write_file(dir / "hole.csv", "item,examinee,y\n0,0,1\n1,1,-1\n");
  CHECK_THROWS_AS(read_responses_csv((dir / "hole.csv").string()), Error);
  try {
    read_responses_csv((dir / "missing.csv").string());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("parameter CSVs are bit-identical after a round trip") {
  auto dir = scratch("params");
  auto [it, ab] = standardized_params(5, 6, 40);
  it.c = {0.1, 0.2, 0.0, 0.3, 0.05, 1.0 / 3.0};
  write_items_csv(it, (dir / "items.csv").string());
  write_abilities_csv(ab, (dir / "ab.csv").string());
  ItemParameters it2 = read_items_csv((dir / "items.csv").string());
  AbilityParameters ab2 = read_abilities_csv((dir / "ab.csv").string());
  CHECK(it2.a == it.a);
  CHECK(it2.b == it.b);
  CHECK(it2.c == it.c);
  CHECK(ab2.theta == ab.theta);
}

TEST_CASE("config JSON round trip and validation") {
  ExperimentConfig c = tiny({Method::Coreset, Method::Uniform, Method::Lewis});
  c.sampling = SamplingMethod::ChaoReservoir;
  c.mu_policy = MuPolicy::Exact;
  c.out_dir = "/tmp/x";
  ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.methods.size() == 3);
  CHECK(back.sampling == SamplingMethod::ChaoReservoir);
  CHECK_NOTHROW(back.validate());

  CHECK_THROWS_AS(ExperimentConfig::from_json("{"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json("[]"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"schema": 2})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"schema": 1, "k": "ten"})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"schema": 1, "kk": 5})"), Error);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"schema": 1, "methods": ["magic"]})"), Error);
  try {
    ExperimentConfig::from_json(R"({"schema": 1, "sampling": "poisson"})");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
  ExperimentConfig bad = tiny({Method::Coreset});
  bad.k = 500;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tiny({Method::Full});
  bad.k = 500;
  CHECK_NOTHROW(bad.validate());
  bad.data_path = "/nonexistent/file.csv";
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("full-only experiments are reproducible") {
  ExperimentConfig c = tiny({Method::Full});
  ExperimentReport a = run_experiment(c), b = run_experiment(c);
  CHECK(a.full.metrics.f_full == b.full.metrics.f_full);
  CHECK(a.full_fit.items.a == b.full_fit.items.a);
  CHECK(a.runs.empty());
  CHECK(a.summaries.empty());
}

TEST_CASE("tiny comparison run writes consistent artifacts") {
  auto dir = scratch("experiment");
  ExperimentConfig c = tiny({Method::Coreset, Method::Uniform, Method::Distance, Method::L1Lev, Method::Lewis});
  c.out_dir = dir.string();
  c.write_mu_table = true;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r = run_experiment(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 10.0 * 5);  // five subsample methods, each the size of the smoke benchmark

  CHECK(r.runs.size() == 10);
  CHECK(r.summaries.size() == 5);
  CHECK(r.mu.size() == 10);
  // Same seed grid for every method.
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t mth = 1; mth < 5; ++mth) CHECK(r.runs[mth * 2 + t].seed == r.runs[t].seed);
  for (const auto& s : r.summaries) {
    CHECK(s.gain_percent == doctest::Approx((1 - s.mean_seconds / r.full.seconds_total) * 100).epsilon(1e-12));
    CHECK(s.best.rel_err >= 0);
    double best_f = 1e300;
    for (const auto& run : r.runs)
      if (run.method == s.method) best_f = std::min(best_f, run.metrics.f_core);
    CHECK(s.best.f_core == best_f);
  }
  for (const auto& run : r.runs) {
    CHECK(run.monotone);
    CHECK(run.seconds_total >= 0);
  }
  CHECK(r.full.monotone);

  for (const char* f : {"report.json", "runs.csv", "trace_full.csv", "items_full.csv", "abilities_full.csv", "mu.csv",
                        "coreset_coreset.csv", "trace_uniform.csv", "items_bias_lewis.csv", "theta_pairs_distance.csv"})
    CHECK(fs::exists(dir / f));

  auto j = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(j["full"]["metrics"]["f_full"].get<double>() == r.full.metrics.f_full);
  CHECK(j["summaries"].size() == 5);
  CHECK(ExperimentConfig::from_json(j["config"].dump()).to_json() == c.to_json());

  // Parameters written to disk re-parse to the in-memory values.
  ItemParameters items = read_items_csv((dir / "items_full.csv").string());
  CHECK(items.a == r.full_fit.items.a);
  AbilityParameters ab = read_abilities_csv((dir / "abilities_full.csv").string());
  CHECK(ab.theta == r.full_fit.abilities.theta);
}

TEST_CASE("experiments on loaded data") {
  auto dir = scratch("loaded");
  GenConfig g;
  g.n = 300;
  g.m = 6;
  g.model = ModelKind::ThreePL;
  ResponseMatrix y = generate_synthetic(g).y;
  write_responses_csv(y, (dir / "y.csv").string(), true, LabelFormat::ZeroOne);
  ExperimentConfig c;
  c.data_path = (dir / "y.csv").string();
  c.labels = LabelFormat::ZeroOne;
  c.model = ModelKind::ThreePL;
  c.methods = {Method::Coreset};
  c.k = 80;
  c.iterations = 3;
  c.repetitions = 1;
  ExperimentReport r = run_experiment(c);
  CHECK(r.n == 300);
  CHECK(r.m == 6);
  CHECK(r.runs.size() == 1);
  c.k = 300;
  CHECK_THROWS_AS(run_experiment(c, y), Error);
}

TEST_CASE("mu table CSV") {
  auto dir = scratch("mu");
  GenConfig g;
  g.n = 400;
  g.m = 4;
  SyntheticData d = generate_synthetic(g);
  auto table = mu_table(d.y, d.items, d.abilities, MuPolicy::Exact);
  write_mu_csv(table, (dir / "mu.csv").string());
  std::string text = read_file(dir / "mu.csv");
  CHECK(text.rfind("item,mu0,mu1,method\n", 0) == 0);
  CHECK(text.find("exact") != std::string::npos);
  for (auto& e : table) CHECK(e.mu0 >= 1);
}

TEST_CASE("method names") {
  for (Method m : {Method::Full, Method::Coreset, Method::Uniform, Method::Distance, Method::L1Lev, Method::Lewis})
    CHECK(parse_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_method("bogus"), Error);
  CHECK_THROWS_AS(parse_label_format("yes"), Error);
}
