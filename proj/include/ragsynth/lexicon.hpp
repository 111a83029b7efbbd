/// @file lexicon.hpp
/// @brief Built-in financial term lexicon for the term-recall metric. Original
///        starter list; replaceable via a one-term-per-line file.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ragsynth::lexicon {

// ~200 banking/finance terms (lowercase; multi-word phrases allowed).
const std::vector<std::string>& default_financial_terms();

std::vector<std::string> load_lexicon_file(const std::filesystem::path& path);

}  // namespace ragsynth::lexicon
