#pragma once

#include <string>

#include <json.hpp>

#include "ironbench/encoder.hpp"
#include "ironbench/metrics.hpp"
#include "ironbench/optim.hpp"

namespace ironbench {

using ojson = nlohmann::ordered_json;

ojson to_json(const ModelConfig& config);
ojson to_json(const TrainConfig& config);
ojson to_json(const MetricsReport& report);

// Missing keys keep their defaults; unknown keys raise ConfigError naming
// `where` (e.g. "model.dmodel").
ModelConfig model_config_from_json(const ojson& j, const std::string& where = "model");
TrainConfig train_config_from_json(const ojson& j, const std::string& where = "train");
MetricsReport metrics_report_from_json(const ojson& j);

// Throws ConfigError unless every key of `j` is in `allowed`.
void reject_unknown_keys(const ojson& j, std::initializer_list<const char*> allowed, const std::string& where);

// 64-bit FNV-1a, used for run keys and dataset fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace ironbench
