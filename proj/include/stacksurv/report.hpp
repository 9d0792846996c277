#pragma once

#include <json.hpp>

#include "stacksurv/coxph.hpp"
#include "stacksurv/learners.hpp"
#include "stacksurv/simgen.hpp"
#include "stacksurv/stacklogit.hpp"

namespace stacksurv {

using Json = nlohmann::ordered_json;

Json to_json(const FitResult& fit, const std::vector<std::string>& names = {});
Json to_json(const LogisticFit& fit, const std::vector<std::string>& names = {});
Json to_json(const PenalizedPath& path);

Json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j);

Json to_json(const LearnerConfig& config);
// Missing keys keep their defaults, so partial blocks are accepted.
LearnerConfig learner_config_from_json(const Json& j, LearnerConfig base = {});

// Non-finite doubles become null in JSON.
Json number_or_null(double v);

}  // namespace stacksurv
