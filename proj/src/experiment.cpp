// SPDX-License-Identifier: Apache-2.0
#include "ftkit/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "ftkit/baselines.hpp"
#include "ftkit/errors.hpp"
#include "ftkit/format.hpp"
#include "ftkit/io.hpp"
#include "ftkit/network.hpp"
#include "ftkit/report.hpp"

namespace ftkit {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string to_string(Task task) {
  switch (task) {
    case Task::MixtureForecast: return "mixture-forecast";
    case Task::SingleNeuronFit: return "single-neuron-fit";
    case Task::CsvForecast: return "csv-forecast";
    case Task::BaselineComparison: return "baseline-comparison";
    case Task::ActivationStudy: return "activation-study";
    case Task::GradCheck: return "grad-check";
  }
  return "?";
}

std::string to_string(ModelType model) {
  switch (model) {
    case ModelType::FT0: return "ft0";
    case ModelType::FT1: return "ft1";
    case ModelType::MP: return "mp";
    case ModelType::Elman: return "elman";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

const std::vector<std::string> kStudyActivations = {"sigmoid", "tanh", "modrelu:-0.3", "zrelu",
                                                    "prelu"};

/// Strict reader for one JSON object: typed lookups that report the field
/// path, and a final check that rejects unknown keys.
class Section {
 public:
  Section(const json &doc, std::string path) : path_(std::move(path)) {
    if (!doc.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    doc_ = &doc;
  }

  const std::string &path() const noexcept { return path_; }
  std::string at(const std::string &key) const { return path_ + "/" + key; }
  bool has(const std::string &key) const { return doc_->contains(key); }

  const json *raw(const std::string &key) {
    seen_.insert(key);
    const auto it = doc_->find(key);
    return it == doc_->end() ? nullptr : &*it;
  }

  std::string str(const std::string &key, const std::string &fallback) {
    const json *v = raw(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }
  std::string required_str(const std::string &key) {
    if (!has(key)) throw ConfigError(at(key), "required field is missing");
    return str(key, "");
  }
  double number(const std::string &key, double fallback) {
    const json *v = raw(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    return v->get<double>();
  }
  long long integer(const std::string &key, long long fallback, long long min = 0) {
    const json *v = raw(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < min) throw ConfigError(at(key), "must be >= " + std::to_string(min));
    return x;
  }
  bool boolean(const std::string &key, bool fallback) {
    const json *v = raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }
  std::optional<Section> child(const std::string &key) {
    const json *v = raw(key);
    if (!v) return std::nullopt;
    return Section(*v, at(key));
  }

  void finish() const {
    for (const auto &[key, value] : doc_->items())
      if (!seen_.count(key)) throw ConfigError(at(key), "unknown field");
  }

 private:
  const json *doc_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto checked(const std::string &path, F f) {
  try {
    return f();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    throw ConfigError(path, e.what());
  }
}

Task parse_task(const std::string &text, const std::string &path) {
  for (Task t : {Task::MixtureForecast, Task::SingleNeuronFit, Task::CsvForecast,
                 Task::BaselineComparison, Task::ActivationStudy, Task::GradCheck})
    if (to_string(t) == text) return t;
  throw ConfigError(path, "unknown task '" + text + "'");
}

ModelType parse_model_type(const std::string &text, const std::string &path) {
  for (ModelType m : {ModelType::FT0, ModelType::FT1, ModelType::MP, ModelType::Elman})
    if (to_string(m) == text) return m;
  throw ConfigError(path, "unknown model type '" + text + "'");
}

void parse_model(Section s, ModelSpec &m) {
  m.type = parse_model_type(s.str("type", "ft0"), s.at("type"));
  m.hidden = static_cast<std::size_t>(s.integer("hidden", 10, 1));
  const std::string act = s.str("activation", "tanh");
  m.activation = checked(s.at("activation"), [&] { return parse_activation(act); });
  m.a = s.number("a", 1.0);
  m.b = s.number("b", 1.0);
  m.init_scale = s.number("init_scale", 1.0);
  if (!(m.init_scale > 0.0)) throw ConfigError(s.at("init_scale"), "must be > 0");
  s.finish();
}

void parse_train(Section s, TrainConfig &t) {
  t.learning_rate = s.number("learning_rate", 0.01);
  if (!(t.learning_rate > 0.0)) throw ConfigError(s.at("learning_rate"), "must be > 0");
  t.epochs = static_cast<int>(s.integer("epochs", 100, 1));
  t.gradient_mode = checked(s.at("gradient_mode"),
                            [&] { return parse_gradient_mode(s.str("gradient_mode", "full")); });
  t.seed = static_cast<std::uint64_t>(s.integer("seed", 0));
  t.clip_norm = s.number("clip_norm", 0.0);
  if (t.clip_norm < 0.0) throw ConfigError(s.at("clip_norm"), "must be >= 0");
  t.track_test_mse = s.boolean("track_test_mse", false);
  if (const json *r0 = s.raw("r0")) {
    if (r0->is_string() && r0->get<std::string>() == "zeros")
      t.r0 = InitialState::Zeros;
    else
      throw ConfigError(s.at("r0"), "only \"zeros\" is supported in config files");
  }
  s.finish();
}

void parse_mixture(Section s, MixtureSpec &m) {
  auto &c = m.mixture;
  c.num_components = static_cast<int>(s.integer("num_components", c.num_components, 1));
  c.period_min = s.number("period_min", c.period_min);
  c.period_max = s.number("period_max", c.period_max);
  c.length = static_cast<int>(s.integer("length", c.length, 2));
  c.noise_min = s.number("noise_min", c.noise_min);
  c.noise_max = s.number("noise_max", c.noise_max);
  c.seed = static_cast<std::uint64_t>(s.integer("seed", 0));
  m.lags = static_cast<std::size_t>(s.integer("lags", 1, 1));
  m.train_length = static_cast<std::size_t>(s.integer("train_length", 800, 1));
  m.amplitude_scale = s.number("amplitude_scale", 0.0);
  checked(s.path(), [&] {
    c.validate();
    return 0;
  });
  if (m.train_length <= m.lags || m.train_length >= static_cast<std::size_t>(c.length))
    throw ConfigError(s.at("train_length"), "must lie in (lags, length)");
  s.finish();
}

void parse_curve(Section s, CurveSpec &c) {
  const std::string kind = s.str("kind", "cos");
  if (kind == "cos")
    c.with_sin = false;
  else if (kind == "cos+sin")
    c.with_sin = true;
  else
    throw ConfigError(s.at("kind"), "expected \"cos\" or \"cos+sin\"");
  c.period = s.number("period", 3.0);
  if (!(c.period > 0.0)) throw ConfigError(s.at("period"), "must be > 0");
  c.length = static_cast<int>(s.integer("length", 300, 3));
  c.amplitude_scale = s.number("amplitude_scale", 1.0);
  s.finish();
}

void parse_grad_check(Section s, GradCheckSpec &g) {
  g.inputs = static_cast<std::size_t>(s.integer("inputs", 3, 1));
  g.outputs = static_cast<std::size_t>(s.integer("outputs", 2, 1));
  g.length = static_cast<std::size_t>(s.integer("length", 10, 1));
  g.h = s.number("h", 1e-5);
  if (!(g.h > 0.0)) throw ConfigError(s.at("h"), "must be > 0");
  g.tolerance = s.number("tolerance", 1e-4);
  if (!(g.tolerance > 0.0)) throw ConfigError(s.at("tolerance"), "must be > 0");
  s.finish();
}

void parse_csv(Section s, CsvSpec &c) {
  c.path = s.required_str("path");
  c.has_header = s.boolean("has_header", true);
  const std::string delim = s.str("delimiter", ",");
  if (delim.size() != 1) throw ConfigError(s.at("delimiter"), "must be a single character");
  c.delimiter = delim[0];
  c.lags = static_cast<std::size_t>(s.integer("lags", 1, 1));
  c.target_column = static_cast<std::size_t>(s.integer("target_column", 0));
  c.horizon = static_cast<std::size_t>(s.integer("horizon", 1, 1));
  const std::string norm = s.str("normalization", "min-max");
  if (norm == "none")
    c.normalization.reset();
  else
    c.normalization = checked(s.at("normalization"), [&] { return parse_norm_method(norm); });
  c.train_fraction = s.number("train_fraction", 0.8);
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw ConfigError(s.at("train_fraction"), "must lie in (0, 1)");
  if (s.has("threshold")) c.threshold = s.number("threshold", 0.0);
  s.finish();
}

}  // namespace

ExperimentConfig parse_experiment(const json &doc) {
  ExperimentConfig cfg;
  Section root(doc, "");
  cfg.task = parse_task(root.required_str("task"), "/task");
  if (auto m = root.child("model")) parse_model(*m, cfg.model);
  if (auto t = root.child("train")) parse_train(*t, cfg.train);
  bool have_csv = false, have_mixture = false, have_curve = false;
  if (auto d = root.child("data")) {
    if (auto m = d->child("mixture")) parse_mixture(*m, cfg.mixture), have_mixture = true;
    if (auto c = d->child("curve")) parse_curve(*c, cfg.curve), have_curve = true;
    if (auto c = d->child("csv")) parse_csv(*c, cfg.csv), have_csv = true;
    d->finish();
  }
  bool have_grad_check = false;
  if (auto g = root.child("grad_check")) parse_grad_check(*g, cfg.grad_check), have_grad_check = true;
  cfg.output_dir = root.str("output_dir", "out");
  root.finish();

  const bool real_model = cfg.model.type == ModelType::MP || cfg.model.type == ModelType::Elman;
  if ((real_model || cfg.task == Task::BaselineComparison) &&
      !cfg.model.activation.is_split())
    throw ConfigError("/model/activation", "mp and elman models take tanh or sigmoid");
  if (have_grad_check && cfg.task != Task::GradCheck)
    throw ConfigError("/grad_check", "only the grad-check task takes this section");
  switch (cfg.task) {
    case Task::GradCheck:
      if (have_csv || have_mixture || have_curve)
        throw ConfigError("/data", "grad-check generates its own random sequence");
      break;
    case Task::CsvForecast:
      if (!have_csv) throw ConfigError("/data/csv", "csv-forecast needs a csv data source");
      break;
    case Task::SingleNeuronFit:
    case Task::BaselineComparison:
      if (cfg.model.type != ModelType::FT0)
        throw ConfigError("/model/type", to_string(cfg.task) + " uses a single ft0 neuron");
      if (have_csv || have_mixture)
        throw ConfigError("/data", to_string(cfg.task) + " takes only a curve data source");
      break;
    case Task::ActivationStudy:
      if (cfg.model.type != ModelType::FT0 && cfg.model.type != ModelType::FT1)
        throw ConfigError("/model/type", "activation-study compares FT networks (ft0 or ft1)");
      [[fallthrough]];
    case Task::MixtureForecast:
      if (have_csv || have_curve)
        throw ConfigError("/data", to_string(cfg.task) + " takes only a mixture data source");
      break;
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError("", "config is not valid JSON: " + std::string(e.what()));
  }
  ExperimentConfig cfg = parse_experiment(doc);
  // relative data paths are taken from the config file's directory
  if (!cfg.csv.path.empty() && cfg.csv.path.is_relative())
    cfg.csv.path = path.parent_path() / cfg.csv.path;
  return cfg;
}

std::uint64_t resolve_seed(std::uint64_t configured, std::optional<std::uint64_t> override_seed) {
  if (override_seed) return *override_seed;
  if (const char *env = std::getenv("FTKIT_SEED"); env && *env) {
    std::uint64_t v = 0;
    const char *end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end)
      throw ConfigError("FTKIT_SEED", "expected a non-negative integer, got '" + std::string(env) + "'");
    return v;
  }
  return configured;
}

// ---------------------------------------------------------------------------
// datasets

namespace {

PreparedData from_samples(const std::vector<Sample> &samples, std::size_t train_length,
                          std::size_t t0) {
  PreparedData out;
  out.t0 = t0;
  for (const auto &s : samples) {
    out.dataset.inputs.push_back(s.features);
    out.dataset.targets.push_back({s.target});
  }
  out.dataset.train_length = train_length;
  out.dataset.validate();
  return out;
}

}  // namespace

PreparedData make_mixture_dataset(const MixtureSpec &spec) {
  const Mixture mix = generate_mixture(spec.mixture);
  const double scale = spec.amplitude_scale == 0.0
                           ? 1.0 / static_cast<double>(spec.mixture.num_components)
                           : spec.amplitude_scale;
  Vector noisy = mix.noisy.column(0), clean = mix.clean.column(0);
  for (double &v : noisy) v *= scale;
  for (double &v : clean) v *= scale;
  const TimeSeries both = make_series({noisy, clean}, {"noisy", "clean"});
  const auto samples = sliding_window(both, spec.lags, 1, 1, {0});
  if (spec.train_length <= spec.lags || spec.train_length >= both.length())
    throw std::invalid_argument("mixture train_length must lie in (lags, length)");
  // sample i predicts row i + lags
  return from_samples(samples, spec.train_length - spec.lags, spec.lags);
}

PreparedData make_curve_dataset(const CurveSpec &spec) {
  Vector y(static_cast<std::size_t>(spec.length));
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / spec.period;
    y[t] = spec.amplitude_scale * (std::cos(phase) + (spec.with_sin ? std::sin(phase) : 0.0));
  }
  const auto samples = sliding_window(make_series({y}, {"y"}), 1, 0);
  return from_samples(samples, samples.size(), 1);
}

FTNetwork build_network(const ModelSpec &spec, std::size_t inputs, std::size_t outputs) {
  switch (spec.type) {
    case ModelType::FT0:
      return FTNetwork::from_signature({inputs, 0, outputs}, spec.a, spec.b, spec.activation);
    case ModelType::FT1:
      return FTNetwork::from_signature({inputs, spec.hidden, outputs}, spec.a, spec.b,
                                       spec.activation);
    default:
      throw std::invalid_argument("build_network: " + to_string(spec.type) +
                                  " is not an FT model");
  }
}

// ---------------------------------------------------------------------------
// tasks

namespace {

struct Trained {
  TrainReport report;
  ojson params;
  std::string model_file;  // FT models only
};

ojson matrix_json(const Matrix &m) {
  ojson rows = ojson::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Trained train_model(const ModelSpec &spec, const PreparedData &data, const TrainConfig &train) {
  const std::size_t m = data.dataset.inputs.front().size();
  const std::size_t n = data.dataset.targets.front().size();
  Trained out;
  switch (spec.type) {
    case ModelType::FT0:
    case ModelType::FT1: {
      FTNetwork net = build_network(spec, m, n);
      net.initialize(train.seed, spec.init_scale);
      out.report = ftkit::train(net, data.dataset, train);
      out.params = ojson::array();
      for (const auto &layer : net.layers())
        out.params.push_back({{"W", matrix_json(layer.W)}, {"V", matrix_json(layer.V)}});
      std::ostringstream s;
      save_model(net, s);
      out.model_file = s.str();
      break;
    }
    case ModelType::MP: {
      MPNeuronLayer layer(m, n, parse_real_activation(to_string(spec.activation)));
      layer.initialize(train.seed, spec.init_scale);
      out.report = train_baseline(layer, data.dataset, train);
      out.params = {{"W", matrix_json(layer.W)}, {"theta", layer.theta}};
      break;
    }
    case ModelType::Elman: {
      ElmanUnit unit(m, n, parse_real_activation(to_string(spec.activation)));
      unit.initialize(train.seed, spec.init_scale);
      out.report = train_baseline(unit, data.dataset, train);
      out.params = {{"W", matrix_json(unit.W)}, {"V", matrix_json(unit.V)}};
      break;
    }
  }
  return out;
}

std::vector<Vector> all_predictions(const TrainReport &r) {
  auto all = r.train_predictions;
  all.insert(all.end(), r.test_predictions.begin(), r.test_predictions.end());
  return all;
}

ojson header(const ExperimentConfig &cfg) {
  ojson j;
  j["task"] = to_string(cfg.task);
  j["model_type"] = to_string(cfg.model.type);
  j["activation"] = to_string(cfg.model.activation);
  j["a"] = cfg.model.a;
  j["b"] = cfg.model.b;
  j["init_scale"] = cfg.model.init_scale;
  j["seed"] = cfg.train.seed;
  return j;
}

void add_standard_files(ExperimentResult &res, const Trained &t, const PreparedData &data,
                        const std::string &suffix = "") {
  res.files["loss_curve" + suffix + ".csv"] = loss_curve_csv(t.report);
  res.files["predictions" + suffix + ".csv"] =
      predictions_csv(data.t0, data.dataset.targets, all_predictions(t.report));
  if (!t.model_file.empty()) res.files["model" + suffix + ".txt"] = t.model_file;
}

ExperimentResult run_single(const ExperimentConfig &cfg, const PreparedData &data) {
  ExperimentResult res;
  const Trained t = train_model(cfg.model, data, cfg.train);
  res.metrics = header(cfg);
  res.metrics["report"] = report_to_json(t.report);
  res.metrics["parameters"] = t.params;
  add_standard_files(res, t, data);
  return res;
}

ExperimentResult run_csv(const ExperimentConfig &cfg) {
  const CsvSpec &spec = cfg.csv;
  TimeSeries raw = load_csv(spec.path, spec.has_header, spec.delimiter);
  if (spec.target_column >= raw.width())
    throw ConfigError("/data/csv/target_column", "file has only " +
                                                     std::to_string(raw.width()) + " columns");
  if (spec.lags + spec.horizon >= raw.length())
    throw ConfigError("/data/csv/lags", "series of length " + std::to_string(raw.length()) +
                                            " is too short for this window");
  const std::size_t samples_total = raw.length() - spec.lags - spec.horizon + 1;
  const auto train_samples = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(samples_total)));
  if (train_samples < 1 || train_samples >= samples_total)
    throw ConfigError("/data/csv/train_fraction", "leaves an empty training or test window");
  const std::size_t t0 = spec.lags + spec.horizon - 1;
  // rows that any training sample touches
  const std::size_t fit_rows = train_samples + t0;

  const TimeSeries series = spec.normalization ? normalize(raw, *spec.normalization, fit_rows) : raw;
  const auto samples = sliding_window(series, spec.lags, spec.target_column, spec.horizon);
  const PreparedData data = from_samples(samples, train_samples, t0);
  const Trained t = train_model(cfg.model, data, cfg.train);

  const NormParams p = series.norm_params.empty() ? NormParams{}
                                                  : series.norm_params[spec.target_column];
  Vector train_target, test_target, test_pred;
  for (std::size_t i = 0; i < data.dataset.size(); ++i) {
    const double y = denormalize_value(p, data.dataset.targets[i][0]);
    if (i < train_samples) {
      train_target.push_back(y);
    } else {
      test_target.push_back(y);
      test_pred.push_back(denormalize_value(p, t.report.test_predictions[i - train_samples][0]));
    }
  }
  const double threshold = spec.threshold ? *spec.threshold : median(train_target);

  ExperimentResult res;
  res.metrics = header(cfg);
  res.metrics["report"] = report_to_json(t.report);
  res.metrics["test_mse_original_units"] = mse(test_pred, test_target);
  res.metrics["threshold"] = threshold;
  try {
    const auto acc = confusion_accuracy(test_pred, test_target, threshold);
    res.metrics["tpr"] = acc.tpr;
    res.metrics["tnr"] = acc.tnr;
  } catch (const ClassAbsentError &e) {
    res.metrics["tpr"] = nullptr;
    res.metrics["tnr"] = nullptr;
    res.metrics["confusion_note"] = e.what();
  }
  res.metrics["parameters"] = t.params;
  add_standard_files(res, t, data);
  return res;
}

ExperimentResult run_comparison(const ExperimentConfig &cfg, const PreparedData &data) {
  ExperimentResult res;
  res.metrics = header(cfg);
  ModelSpec mp = cfg.model, elman = cfg.model;
  mp.type = ModelType::MP;
  elman.type = ModelType::Elman;
  const Trained ft = train_model(cfg.model, data, cfg.train);
  const Trained m = train_model(mp, data, cfg.train);
  const Trained e = train_model(elman, data, cfg.train);
  res.metrics["ft"] = report_to_json(ft.report);
  res.metrics["ft"]["parameters"] = ft.params;
  res.metrics["mp"] = report_to_json(m.report);
  res.metrics["mp"]["parameters"] = m.params;
  res.metrics["elman"] = report_to_json(e.report);
  res.metrics["elman"]["parameters"] = e.params;
  res.metrics["ft_beats_mp"] = ft.report.train_mse < m.report.train_mse;
  res.metrics["ft_beats_elman"] = ft.report.train_mse < e.report.train_mse;
  add_standard_files(res, ft, data);
  add_standard_files(res, ft, data, "_ft");
  add_standard_files(res, m, data, "_mp");
  add_standard_files(res, e, data, "_elman");
  return res;
}

std::string file_tag(const std::string &activation) {
  return activation.substr(0, activation.find(':'));
}

struct StudyRun {
  std::optional<Trained> trained;
  std::optional<NumericOverflow> overflow;  // set when the run diverged
};

ExperimentResult run_activation_study(const ExperimentConfig &cfg, const PreparedData &data) {
  TrainConfig train = cfg.train;
  train.track_test_mse = true;
  std::vector<std::future<StudyRun>> jobs;
  for (const auto &name : kStudyActivations) {
    ModelSpec spec = cfg.model;
    spec.activation = parse_activation(name);
    jobs.push_back(std::async(std::launch::async, [spec, &data, train] {
      StudyRun run;
      try {
        run.trained = train_model(spec, data, train);
      } catch (const NumericOverflow &e) {
        run.overflow = e;
      }
      return run;
    }));
  }
  // get() every future first so no job is left running on an early throw
  std::vector<StudyRun> done;
  std::exception_ptr failure;
  for (auto &job : jobs) {
    try {
      done.push_back(job.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult res;
  res.metrics = header(cfg);
  res.metrics.erase("activation");
  ojson runs = ojson::object();
  std::string best;
  const Trained *best_run = nullptr;
  double best_mse = 0.0;
  for (std::size_t i = 0; i < done.size(); ++i) {
    const auto &name = kStudyActivations[i];
    if (done[i].overflow) {
      runs[name] = {{"diverged", true},
                    {"epoch", done[i].overflow->epoch()},
                    {"error", done[i].overflow->what()},
                    {"test_mse", nullptr}};
      continue;
    }
    const Trained &t = *done[i].trained;
    runs[name] = report_to_json(t.report);
    const double test = t.report.test_mse.value_or(INFINITY);
    if (!best_run || test < best_mse) {
      best = name;
      best_mse = test;
      best_run = &t;
    }
    res.files["loss_curve_" + file_tag(name) + ".csv"] = loss_curve_csv(t.report);
    res.files["predictions_" + file_tag(name) + ".csv"] =
        predictions_csv(data.t0, data.dataset.targets, all_predictions(t.report));
  }
  if (!best_run) throw *done.front().overflow;
  res.metrics["runs"] = runs;
  res.metrics["best_activation"] = best;
  res.files["loss_curve.csv"] = loss_curve_csv(best_run->report);
  res.files["predictions.csv"] =
      predictions_csv(data.t0, data.dataset.targets, all_predictions(best_run->report));
  return res;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig &cfg) {
  switch (cfg.task) {
    case Task::MixtureForecast: return run_single(cfg, make_mixture_dataset(cfg.mixture));
    case Task::SingleNeuronFit: {
      ExperimentResult res = run_single(cfg, make_curve_dataset(cfg.curve));
      // reference fit for this curve; initialization differs, so no match is expected
      res.metrics["reference_parameters"] = {{"W", -1.3467}, {"V", -0.0943}};
      return res;
    }
    case Task::CsvForecast: return run_csv(cfg);
    case Task::BaselineComparison: return run_comparison(cfg, make_curve_dataset(cfg.curve));
    case Task::ActivationStudy:
      return run_activation_study(cfg, make_mixture_dataset(cfg.mixture));
    case Task::GradCheck:
      throw ConfigError("/task", "grad-check configs are run with the grad-check command");
  }
  throw std::logic_error("unhandled task");
}

// ---------------------------------------------------------------------------
// gradient check

Matrix static_backprop_gradient(FTNetwork &net, const std::vector<Vector> &inputs,
                                const std::vector<Vector> &targets) {
  if (net.depth() != 1) throw std::invalid_argument("static_backprop_gradient: single layer only");
  const FTLayer &layer = net.layer(0);
  Matrix g(layer.units(), layer.inputs());
  reset_state(net);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const LayerStep step = layer_forward(net.layer(0), inputs[t]);
    for (std::size_t i = 0; i < layer.units(); ++i) {
      const double slope = activate_derivative(layer.activation, step.alpha[i], Channel::Real,
                                               is_active(layer.activation, {step.alpha[i], step.beta[i]}));
      const double gi = (step.s[i] - targets[t][i]) * slope;
      for (std::size_t k = 0; k < layer.inputs(); ++k) g(i, k) += gi * (layer.a * inputs[t][k]);
    }
  }
  return g;
}

namespace {

double max_abs_diff(const Matrix &x, const Matrix &y) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x.flat()[i] - y.flat()[i]));
  return worst;
}

}  // namespace

GradCheckResult run_grad_check(const ExperimentConfig &cfg) {
  if (cfg.model.type != ModelType::FT0)
    throw ConfigError("/model/type",
                      "gradient check needs a single-layer ft0 model; CBP is exact only "
                      "for one layer");
  const GradCheckSpec &g = cfg.grad_check;
  FTNetwork net = build_network(cfg.model, g.inputs, g.outputs);
  net.initialize(cfg.train.seed);
  std::mt19937_64 rng(cfg.train.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> xin(-1.0, 1.0), yin(-0.5, 0.5);
  std::vector<Vector> inputs(g.length, Vector(g.inputs)), targets(g.length, Vector(g.outputs));
  for (auto &x : inputs)
    for (double &v : x) v = xin(rng);
  for (auto &y : targets)
    for (double &v : y) v = yin(rng);

  GradCheckResult res;
  res.model = net.signature_string();
  const auto full = cbp_gradient(net, inputs, targets, GradientMode::Full);
  const auto fd = finite_difference_gradient(net, inputs, targets, g.h);
  res.full_vs_fd = compare_gradients(full, fd);
  res.passed = res.full_vs_fd.max_rel_error() < g.tolerance;
  if (cfg.model.b == 0.0)
    res.static_backprop_diff =
        max_abs_diff(full.layer(0).gW, static_backprop_gradient(net, inputs, targets));
  if (g.outputs == 1) {
    const auto diag = cbp_gradient(net, inputs, targets, GradientMode::Diagonal);
    res.diagonal_diff = std::max(max_abs_diff(full.layer(0).gW, diag.layer(0).gW),
                                 max_abs_diff(full.layer(0).gV, diag.layer(0).gV));
  }
  return res;
}

std::string generated_data_csv(const ExperimentConfig &cfg) {
  std::string out;
  switch (cfg.task) {
    case Task::MixtureForecast:
    case Task::ActivationStudy: {
      const Mixture mix = generate_mixture(cfg.mixture.mixture);
      out = "t,noisy,clean";
      for (const auto &name : mix.components.column_names) out += ',' + name;
      out += '\n';
      for (std::size_t t = 0; t < mix.clean.length(); ++t) {
        out += std::to_string(t) + ',' + format_double(mix.noisy.values(t, 0)) + ',' +
               format_double(mix.clean.values(t, 0));
        for (std::size_t k = 0; k < mix.components.width(); ++k)
          out += ',' + format_double(mix.components.values(t, k));
        out += '\n';
      }
      return out;
    }
    case Task::SingleNeuronFit:
    case Task::BaselineComparison: {
      const PreparedData data = make_curve_dataset(cfg.curve);
      out = "t,y\n0," + format_double(data.dataset.inputs.front()[0]) + '\n';
      for (std::size_t i = 0; i < data.dataset.size(); ++i)
        out += std::to_string(i + 1) + ',' + format_double(data.dataset.targets[i][0]) + '\n';
      return out;
    }
    default:
      throw ConfigError("/task", to_string(cfg.task) + " has no generated data source");
  }
}

void write_outputs(const ExperimentResult &result, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "metrics.json", result.metrics.dump(2) + "\n");
  for (const auto &[name, contents] : result.files) write_file_atomic(dir / name, contents);
}

}  // namespace ftkit
