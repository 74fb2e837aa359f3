#pragma once

#include "json.hpp"
#include "safecomp/contracts.hpp"

namespace safecomp {

using Json = nlohmann::ordered_json;

Json to_json(const DnnContract& c);
DnnContract dnn_contract_from_json(const Json& j);

Json to_json(const ComponentContract& c);
ComponentContract component_contract_from_json(const Json& j);

} // namespace safecomp
