/// @file jsonl.hpp
/// @brief JSONL file I/O with atomic writes. All dataset interchange goes
///        through these helpers so key order and formatting stay deterministic.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ragsynth {

// Insertion-ordered JSON keeps serialized records byte-stable across runs.
using ojson = nlohmann::ordered_json;

// Parses one JSON object per line; blank lines are skipped. Parse failures
// report the 1-based line number.
std::vector<ojson> read_jsonl(const std::filesystem::path& path);

// Write-temp-then-rename. Creates parent directories as needed.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

void write_jsonl(const std::filesystem::path& path, const std::vector<ojson>& records);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace ragsynth
