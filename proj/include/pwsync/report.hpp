#pragma once

#include <string>

#include "json.hpp"
#include "pwsync/certify.hpp"

namespace pwsync::report {

// key: value lines, one per intermediate.
std::string to_text(const certify::BoundReport& r);

// Non-finite numbers become the strings "inf" / "-inf"; NaN becomes null.
nlohmann::json to_json(const certify::BoundReport& r);

nlohmann::json number(double v);

}  // namespace pwsync::report
