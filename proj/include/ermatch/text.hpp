#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ermatch {

/// ASCII-only lowercase; non-ASCII bytes (UTF-8 continuation etc.) pass through.
std::string ascii_lower(std::string_view s);

/// Collapse runs of whitespace to single spaces and trim both ends.
std::string normalize_whitespace(std::string_view s);

/// Lowercase + whitespace collapse. Canonical form used for value-node
/// deduplication and token comparison.
std::string normalize_value(std::string_view s);

/// Split on whitespace, dropping empty pieces.
std::vector<std::string> split_tokens(std::string_view s);

/// FNV-1a 64-bit, seed-mixed. Deterministic across platforms.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);

} // namespace ermatch
