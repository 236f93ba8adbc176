#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ftkit/errors.hpp"
#include "ftkit/experiment.hpp"
#include "ftkit/report.hpp"

using namespace ftkit;
using nlohmann::json;

namespace {

std::string error_path(const json &doc) {
  try {
    parse_experiment(doc);
  } catch (const ConfigError &e) {
    return e.path();
  }
  return "<no error>";
}

std::filesystem::path temp_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / "ftkit_test_experiment" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

json small_mixture() {
  return json::parse(R"({
    "task": "mixture-forecast",
    "model": {"type": "ft0"},
    "train": {"epochs": 3, "seed": 4},
    "data": {"mixture": {"length": 120, "train_length": 100}}
  })");
}

}  // namespace

TEST_CASE("config defaults") {
  const auto cfg = parse_experiment(json{{"task", "mixture-forecast"}});
  CHECK(cfg.task == Task::MixtureForecast);
  CHECK(cfg.model.type == ModelType::FT0);
  CHECK(cfg.model.a == 1.0);
  CHECK(cfg.model.b == 1.0);
  CHECK(cfg.train.learning_rate == 0.01);
  CHECK(cfg.train.gradient_mode == GradientMode::Full);
  CHECK(cfg.mixture.mixture.length == 900);
  CHECK(cfg.mixture.train_length == 800);
  CHECK(cfg.output_dir == "out");
}

TEST_CASE("config fields are parsed") {
  const auto cfg = parse_experiment(json::parse(R"({
    "task": "activation-study",
    "model": {"type": "ft1", "hidden": 4, "activation": "modrelu:-0.2", "a": 0.5, "b": 2},
    "train": {"learning_rate": 0.02, "epochs": 7, "gradient_mode": "diagonal", "seed": 9,
              "clip_norm": 3, "track_test_mse": true, "r0": "zeros"},
    "data": {"mixture": {"num_components": 3, "period_min": 2, "period_max": 4, "length": 200,
                         "noise_min": 0, "noise_max": 0.1, "seed": 5, "lags": 2,
                         "train_length": 150, "amplitude_scale": 0.5}},
    "output_dir": "runs/x"
  })"));
  CHECK(cfg.model.hidden == 4);
  CHECK(cfg.model.activation == ActivationKind::mod_relu(-0.2));
  CHECK(cfg.model.b == 2.0);
  CHECK(cfg.train.gradient_mode == GradientMode::Diagonal);
  CHECK(cfg.train.clip_norm == 3.0);
  CHECK(cfg.train.track_test_mse);
  CHECK(cfg.mixture.mixture.num_components == 3);
  CHECK(cfg.mixture.mixture.seed == 5);
  CHECK(cfg.mixture.lags == 2);
  CHECK(cfg.mixture.amplitude_scale == 0.5);
  CHECK(cfg.output_dir == "runs/x");
}

TEST_CASE("config errors name the field") {
  CHECK(error_path(json::object()) == "/task");
  CHECK(error_path({{"task", "forecast"}}) == "/task");
  CHECK(error_path({{"task", "mixture-forecast"}, {"epochs", 3}}) == "/epochs");
  CHECK(error_path({{"task", "mixture-forecast"}, {"train", {{"epochs", 0}}}}) == "/train/epochs");
  CHECK(error_path({{"task", "mixture-forecast"}, {"train", {{"epochs", 2.5}}}}) == "/train/epochs");
  CHECK(error_path({{"task", "mixture-forecast"}, {"train", {{"learning_rate", -1}}}}) ==
        "/train/learning_rate");
  CHECK(error_path({{"task", "mixture-forecast"}, {"train", {{"gradient_mode", "sparse"}}}}) ==
        "/train/gradient_mode");
  CHECK(error_path({{"task", "mixture-forecast"}, {"train", {{"r0", {1, 2}}}}}) == "/train/r0");
  CHECK(error_path({{"task", "mixture-forecast"}, {"train", {{"lr", 0.1}}}}) == "/train/lr");
  CHECK(error_path({{"task", "mixture-forecast"}, {"model", {{"type", "lstm"}}}}) == "/model/type");
  CHECK(error_path({{"task", "mixture-forecast"}, {"model", {{"activation", "relu"}}}}) ==
        "/model/activation");
  CHECK(error_path({{"task", "mixture-forecast"}, {"model", "ft0"}}) == "/model");
  CHECK(error_path({{"task", "mixture-forecast"},
                    {"data", {{"mixture", {{"period_min", 9}}}}}}) == "/data/mixture");
  CHECK(error_path({{"task", "mixture-forecast"},
                    {"data", {{"mixture", {{"train_length", 900}}}}}}) ==
        "/data/mixture/train_length");
  CHECK(error_path({{"task", "mixture-forecast"}, {"data", {{"curve", json::object()}}}}) == "/data");
  CHECK(error_path({{"task", "csv-forecast"}}) == "/data/csv");
  CHECK(error_path({{"task", "csv-forecast"}, {"data", {{"csv", json::object()}}}}) ==
        "/data/csv/path");
  CHECK(error_path({{"task", "csv-forecast"},
                    {"data", {{"csv", {{"path", "x.csv"}, {"delimiter", ";;"}}}}}}) ==
        "/data/csv/delimiter");
  CHECK(error_path({{"task", "csv-forecast"},
                    {"data", {{"csv", {{"path", "x.csv"}, {"train_fraction", 1.0}}}}}}) ==
        "/data/csv/train_fraction");
  CHECK(error_path({{"task", "single-neuron-fit"}, {"model", {{"type", "ft1"}}}}) == "/model/type");
  CHECK(error_path({{"task", "baseline-comparison"}, {"model", {{"activation", "zrelu"}}}}) ==
        "/model/activation");
  CHECK(error_path({{"task", "activation-study"}, {"model", {{"type", "mp"}}}}) == "/model/type");
  CHECK(error_path({{"task", "mixture-forecast"}, {"model", {{"type", "elman"}, {"activation", "prelu"}}}}) ==
        "/model/activation");
  CHECK(error_path({{"task", "mixture-forecast"}, {"grad_check", json::object()}}) == "/grad_check");
  CHECK(error_path({{"task", "grad-check"}, {"data", {{"mixture", json::object()}}}}) == "/data");
  CHECK(error_path({{"task", "single-neuron-fit"}, {"data", {{"curve", {{"kind", "sin"}}}}}}) ==
        "/data/curve/kind");
  CHECK(error_path(json::array()) == "/");
}

TEST_CASE("load_experiment errors") {
  CHECK_THROWS_AS(load_experiment("/nonexistent/ftkit.json"), ConfigError);
  const auto dir = temp_dir("load");
  std::ofstream(dir / "bad.json") << "{ not json";
  try {
    load_experiment(dir / "bad.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(e.path().empty());
    CHECK(std::string(e.what()).rfind("config is not valid JSON", 0) == 0);
  }
  std::ofstream(dir / "ok.json") << small_mixture().dump();
  CHECK(load_experiment(dir / "ok.json").train.epochs == 3);
}

TEST_CASE("seed precedence") {
  unsetenv("FTKIT_SEED");
  CHECK(resolve_seed(5, std::nullopt) == 5);
  setenv("FTKIT_SEED", "17", 1);
  CHECK(resolve_seed(5, std::nullopt) == 17);
  CHECK(resolve_seed(5, 3) == 3);
  setenv("FTKIT_SEED", "x1", 1);
  CHECK_THROWS_AS(resolve_seed(5, std::nullopt), ConfigError);
  unsetenv("FTKIT_SEED");
}

TEST_CASE("mixture dataset keeps the last 100 steps for testing") {
  MixtureSpec spec;
  const auto d = make_mixture_dataset(spec);
  CHECK(d.t0 == 1);
  CHECK(d.dataset.size() == 899);
  CHECK(d.dataset.train_length == 799);
  CHECK(d.dataset.test_targets().size() == 100);

  const Mixture mix = generate_mixture(spec.mixture);
  // input is the noisy value one step back, target is the clean value, both scaled by 1/5
  CHECK(d.dataset.inputs[10][0] == mix.noisy.values(10, 0) * 0.2);
  CHECK(d.dataset.targets[10][0] == mix.clean.values(11, 0) * 0.2);
  CHECK(d.dataset.targets.back()[0] == mix.clean.values(899, 0) * 0.2);

  spec.lags = 5;
  spec.amplitude_scale = 1.0;
  const auto l5 = make_mixture_dataset(spec);
  CHECK(l5.t0 == 5);
  CHECK(l5.dataset.inputs[0].size() == 5);
  CHECK(l5.dataset.test_targets().size() == 100);
  CHECK(l5.dataset.targets[0][0] == mix.clean.values(5, 0));
}

TEST_CASE("curve dataset") {
  CurveSpec spec;
  spec.with_sin = true;
  const auto d = make_curve_dataset(spec);
  CHECK(d.t0 == 1);
  CHECK(d.dataset.size() == 299);
  CHECK(d.dataset.train_length == 299);
  CHECK(d.dataset.inputs[0][0] == 1.0);
  CHECK(d.dataset.inputs[1][0] == d.dataset.targets[0][0]);
  CHECK(d.dataset.targets[2][0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixture-forecast runs deterministically") {
  const auto cfg = parse_experiment(small_mixture());
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  CHECK(a.files == b.files);
  CHECK(a.metrics.dump() == b.metrics.dump());
  CHECK(a.files.count("predictions.csv") == 1);
  CHECK(a.files.count("loss_curve.csv") == 1);
  CHECK(a.files.count("model.txt") == 1);
  CHECK(a.files.at("predictions.csv").rfind("t,target,prediction\n1,", 0) == 0);
  CHECK(a.files.at("loss_curve.csv").rfind("epoch,loss\n1,", 0) == 0);
  CHECK(a.metrics["report"]["epochs_run"] == 3);
  CHECK(a.metrics["report"]["test_mse"].is_number());
  std::istringstream model(a.files.at("model.txt"));
  CHECK(load_model(model).signature_string() == "size(1,0,1)");

  const auto dir = temp_dir("outputs");
  write_outputs(a, dir);
  CHECK(std::filesystem::exists(dir / "metrics.json"));
  std::ifstream in(dir / "predictions.csv");
  std::stringstream s;
  s << in.rdbuf();
  CHECK(s.str() == a.files.at("predictions.csv"));
}

TEST_CASE("single-neuron fit and baseline comparison") {
  auto doc = json::parse(R"({"task": "single-neuron-fit", "train": {"epochs": 5}})");
  const auto fit = run_experiment(parse_experiment(doc));
  CHECK(fit.metrics["reference_parameters"]["W"] == -1.3467);
  CHECK(fit.metrics["report"]["test_mse"].is_null());

  doc = json::parse(R"({"task": "baseline-comparison", "train": {"epochs": 5},
                        "data": {"curve": {"kind": "cos+sin"}}})");
  const auto cmp = run_experiment(parse_experiment(doc));
  for (const char *k : {"ft", "mp", "elman"}) CHECK(cmp.metrics[k]["train_mse"].is_number());
  CHECK(cmp.metrics["mp"]["model"] == "mp size(1,1)");
  CHECK(cmp.metrics["ft_beats_mp"].is_boolean());
  for (const char *f : {"predictions_ft.csv", "predictions_mp.csv", "predictions_elman.csv",
                        "loss_curve_elman.csv", "predictions.csv"})
    CHECK(cmp.files.count(f) == 1);
}

TEST_CASE("activation study trains one run per activation") {
  auto doc = small_mixture();
  doc["task"] = "activation-study";
  const auto res = run_experiment(parse_experiment(doc));
  CHECK(res.metrics["runs"].size() == 5);
  for (const char *tag : {"sigmoid", "tanh", "modrelu", "zrelu", "prelu"}) {
    CHECK(res.files.count(std::string("loss_curve_") + tag + ".csv") == 1);
    CHECK(res.files.at(std::string("loss_curve_") + tag + ".csv").rfind("epoch,loss,test_mse\n", 0) == 0);
  }
  const std::string best = res.metrics["best_activation"];
  CHECK(res.metrics["runs"].contains(best));
  // concurrent runs give the same result as a second pass
  CHECK(run_experiment(parse_experiment(doc)).files == res.files);
}

TEST_CASE("a diverging activation is recorded, not fatal") {
  auto doc = json::parse(R"({"task": "activation-study", "model": {"type": "ft0", "init_scale": 8},
                             "train": {"epochs": 300, "seed": 1, "clip_norm": 5}})");
  const auto res = run_experiment(parse_experiment(doc));
  const auto &mod = res.metrics["runs"]["modrelu:-0.3"];
  CHECK(mod["diverged"] == true);
  CHECK(mod["epoch"].get<int>() >= 0);
  CHECK(res.files.count("loss_curve_modrelu.csv") == 0);
  CHECK(res.metrics["best_activation"] != "modrelu:-0.3");

  doc["train"]["learning_rate"] = 1e308;
  CHECK_THROWS_AS(run_experiment(parse_experiment(doc)), NumericOverflow);
}

TEST_CASE("init_scale") {
  CHECK(error_path({{"task", "mixture-forecast"}, {"model", {{"init_scale", 0}}}}) ==
        "/model/init_scale");
  auto doc = small_mixture();
  doc["model"]["init_scale"] = 2.0;
  const auto cfg = parse_experiment(doc);
  CHECK(cfg.model.init_scale == 2.0);
  CHECK(run_experiment(cfg).metrics["init_scale"] == 2.0);

  auto one = FTNetwork::from_signature({3, 4, 2}), two = one;
  one.initialize(9);
  two.initialize(9, 2.0);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t i = 0; i < one.layer(l).W.size(); ++i)
      CHECK(two.layer(l).W.flat()[i] == 2.0 * one.layer(l).W.flat()[i]);
  CHECK_THROWS_AS(one.initialize(9, 0.0), std::invalid_argument);
}

TEST_CASE("csv-forecast") {
  const auto dir = temp_dir("csv");
  {
    std::ofstream out(dir / "flow.csv");
    out << "flow,speed\n";
    for (int t = 0; t < 60; ++t) out << 100 + 40 * std::sin(0.5 * t) << ',' << 30 + t % 7 << '\n';
  }
  json doc = {{"task", "csv-forecast"},
              {"model", {{"type", "ft1"}, {"hidden", 3}}},
              {"train", {{"epochs", 5}}},
              {"data", {{"csv", {{"path", (dir / "flow.csv").string()}, {"lags", 2}}}}}};
  const auto res = run_experiment(parse_experiment(doc));
  CHECK(res.metrics["test_mse_original_units"].is_number());
  CHECK(res.metrics["threshold"].is_number());
  CHECK(res.metrics["report"]["model"] == "size(4,3,1)");
  // 58 samples, floor(0.8 * 58) = 46 train
  CHECK(res.files.at("predictions.csv").rfind("t,target,prediction\n2,", 0) == 0);

  doc["data"]["csv"]["threshold"] = 1e9;
  const auto absent = run_experiment(parse_experiment(doc));
  CHECK(absent.metrics["tpr"].is_null());
  CHECK(absent.metrics.contains("confusion_note"));

  doc["data"]["csv"]["target_column"] = 5;
  CHECK_THROWS_AS(run_experiment(parse_experiment(doc)), ConfigError);
  doc["data"]["csv"]["target_column"] = 0;
  doc["data"]["csv"]["path"] = (dir / "missing.csv").string();
  CHECK_THROWS(run_experiment(parse_experiment(doc)));
}

TEST_CASE("grad check") {
  auto cfg = parse_experiment(json{{"task", "grad-check"}});
  const auto res = run_grad_check(cfg);
  CHECK(res.model == "size(3,0,2)");
  CHECK(res.passed);
  CHECK(res.full_vs_fd.max_rel_error() < 1e-4);
  CHECK_FALSE(res.static_backprop_diff.has_value());
  CHECK_FALSE(res.diagonal_diff.has_value());

  cfg.model.b = 0.0;
  cfg.grad_check.outputs = 1;
  const auto special = run_grad_check(cfg);
  REQUIRE(special.static_backprop_diff.has_value());
  CHECK(*special.static_backprop_diff == 0.0);
  REQUIRE(special.diagonal_diff.has_value());
  CHECK(*special.diagonal_diff == 0.0);

  cfg.model.type = ModelType::FT1;
  CHECK_THROWS_AS(run_grad_check(cfg), ConfigError);
  CHECK_THROWS_AS(run_experiment(parse_experiment(json{{"task", "grad-check"}})), ConfigError);
}

TEST_CASE("generated data") {
  auto doc = small_mixture();
  const auto csv = generated_data_csv(parse_experiment(doc));
  CHECK(csv.rfind("t,noisy,clean,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 121);
  const auto curve = generated_data_csv(parse_experiment(json{{"task", "single-neuron-fit"}}));
  CHECK(curve.rfind("t,y\n0,1\n1,", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 301);
  CHECK_THROWS_AS(generated_data_csv(parse_experiment(json{{"task", "grad-check"}})), ConfigError);
}

TEST_CASE("report serialization") {
  TrainReport r;
  r.model = "size(1,0,1)";
  r.epoch_loss = {2.0, 1.0};
  r.test_mse_curve = {0.5, 0.25};
  CHECK(loss_curve_csv(r) == "epoch,loss,test_mse\n1,2,0.5\n2,1,0.25\n");
  const auto j = report_to_json(r);
  CHECK(j["initial_loss"] == 2.0);
  CHECK(j["test_mse"].is_null());
  CHECK_FALSE(j.contains("wall_clock_seconds"));
  CHECK(predictions_csv(3, {{1.0}}, {{0.5}}) == "t,target,prediction\n3,1,0.5\n");
  CHECK_THROWS_AS(predictions_csv(0, {{1.0}}, {}), std::invalid_argument);
}
