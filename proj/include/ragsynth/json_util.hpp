/// @file json_util.hpp
/// @brief Lenient JSON extraction for model outputs that wrap objects in
///        markdown fences or surrounding prose.
#pragma once

#include <string>

#include "ragsynth/jsonl.hpp"

namespace ragsynth {

// Returns the first balanced top-level JSON object in the text, or an empty
// string when none is found. String literals are respected when balancing.
std::string extract_json_block(const std::string& text);

// Strict parse first, then fenced/embedded object extraction. Throws DataError
// carrying the raw text on failure.
ojson parse_lenient_json(const std::string& text);

}  // namespace ragsynth
