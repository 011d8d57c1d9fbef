#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace posepoison::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit-code contract: 0 ok, 2 config error, 3 data error, 4 partial result.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kPartial = 4;

// FNV-1a over the canonical resolved-config string, as 16 hex chars.
std::string config_hash(const std::string& canonical);

// "posepoison <version> <command> config=<hash>", echoed into output headers.
std::string provenance_line(const std::string& command, const std::string& canonical_config);

// --threads flag > POSEPOISON_THREADS env > 1.
int resolve_threads(int flag_value);

// Static-partition parallel loop; deterministic as long as fn(i) writes only
// slot i. Rethrows the first worker exception.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace posepoison::cli
