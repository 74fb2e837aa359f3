#pragma once

#include "safecomp/compose.hpp"
#include "safecomp/contracts_json.hpp"

namespace safecomp {

Json to_json(const ComponentModel& m);
ComponentModel component_from_json(const Json& j);

Json to_json(const System& s);
System system_from_json(const Json& j);

Json to_json(const CheckResult& r);
Json to_json(const AgReport& r);

} // namespace safecomp
