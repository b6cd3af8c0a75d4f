#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace detailcap::gateway::detail {

/// GET `url` and return the body. Connection failures and 429/5xx raise
/// BackendUnreachable; other non-2xx statuses raise ImageDecodeError.
std::vector<std::uint8_t> http_get(const std::string& url, double timeout_s);

}  // namespace detailcap::gateway::detail
