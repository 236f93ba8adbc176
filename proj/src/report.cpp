// SPDX-License-Identifier: Apache-2.0
#include "ftkit/report.hpp"

#include <stdexcept>

#include "ftkit/format.hpp"

namespace ftkit {

nlohmann::ordered_json to_json(const TrainConfig &config) {
  nlohmann::ordered_json j;
  j["learning_rate"] = config.learning_rate;
  j["epochs"] = config.epochs;
  j["gradient_mode"] = to_string(config.gradient_mode);
  j["seed"] = config.seed;
  j["r0"] = config.r0 == InitialState::Zeros ? "zeros" : "configured";
  j["clip_norm"] = config.clip_norm;
  j["track_test_mse"] = config.track_test_mse;
  return j;
}

nlohmann::ordered_json report_to_json(const TrainReport &report) {
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["config"] = to_json(report.config);
  j["epochs_run"] = report.epoch_loss.size();
  j["initial_loss"] = report.epoch_loss.empty() ? 0.0 : report.epoch_loss.front();
  j["final_loss"] = report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back();
  j["train_mse"] = report.train_mse;
  if (report.test_mse)
    j["test_mse"] = *report.test_mse;
  else
    j["test_mse"] = nullptr;
  j["epoch_loss"] = report.epoch_loss;
  if (!report.test_mse_curve.empty()) j["test_mse_curve"] = report.test_mse_curve;
  return j;
}

std::string loss_curve_csv(const TrainReport &report) {
  const bool with_test = !report.test_mse_curve.empty();
  std::string out = with_test ? "epoch,loss,test_mse\n" : "epoch,loss\n";
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    out += std::to_string(e + 1) + ',' + format_double(report.epoch_loss[e]);
    if (with_test && e < report.test_mse_curve.size())
      out += ',' + format_double(report.test_mse_curve[e]);
    out += '\n';
  }
  return out;
}

std::string predictions_csv(std::size_t t0, const std::vector<Vector> &targets,
                            const std::vector<Vector> &predictions) {
  if (targets.size() != predictions.size())
    throw std::invalid_argument("predictions_csv: length mismatch");
  std::string out = "t,target,prediction\n";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].empty() || predictions[i].empty())
      throw std::invalid_argument("predictions_csv: empty row");
    out += std::to_string(t0 + i) + ',' + format_double(targets[i][0]) + ',' +
           format_double(predictions[i][0]) + '\n';
  }
  return out;
}

}  // namespace ftkit
