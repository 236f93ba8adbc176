// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ftkit/cbp.hpp"

namespace ftkit {

nlohmann::ordered_json to_json(const TrainConfig &config);

/// Config echo, per-epoch loss and final metrics. Wall-clock time is left
/// out so that reports from equal seeds compare byte-for-byte.
nlohmann::ordered_json report_to_json(const TrainReport &report);

/// "epoch,loss" rows, plus a test_mse column when the curve was tracked.
std::string loss_curve_csv(const TrainReport &report);

/// "t,target,prediction" rows for output column 0. `t0` is the timestamp
/// of the first row.
std::string predictions_csv(std::size_t t0, const std::vector<Vector> &targets,
                            const std::vector<Vector> &predictions);

}  // namespace ftkit
