#pragma once

#include "wrl/measures.hpp"
#include "wrl/rl_core.hpp"

#include "json.hpp"

#include <string>

namespace wrl {

using Json = nlohmann::json;

// {"atoms": [[...], ...], "weights": [...]}
Json to_json(const DiscreteMeasure& measure);
DiscreteMeasure measure_from_json(const Json& j);
DiscreteMeasure load_measure(const std::string& path);
void save_measure(const DiscreteMeasure& measure, const std::string& path);

// Debug record: parallel per-step state/action/reward arrays.
Json to_json(const Trajectory& tau);

// Checkpoint record: {family, shape..., theta}.
Json to_json(const PolicyParams& params);
PolicyParams params_from_json(const Json& j);

}  // namespace wrl
