/// @file ingest.hpp
/// @brief Document loading and passage chunking.
///
/// Documents are segmented into passage-length chunks (default 400-600 tokens)
/// at semantic boundaries when available and fixed windows otherwise. Chunks
/// cover the document body exactly: concatenating char spans in order
/// reproduces the body with no loss or overlap.
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ragsynth::ingest {

enum class SourceKind { sec_filing, web, generic };

struct Document {
    std::string id;
    std::string title;
    std::string body;
    SourceKind source_kind = SourceKind::generic;
};

struct Passage {
    std::string id;
    std::string doc_id;
    std::string text;
    std::size_t token_count = 0;
    std::size_t char_start = 0;  // offsets into the parent body; body.substr(start, end-start) == text
    std::size_t char_end = 0;
    bool tail_flag = false;  // final passage shorter than min_tokens
};

enum class BoundaryMode { semantic_first, fixed_window };

struct ChunkPolicy {
    int min_tokens = 400;
    int max_tokens = 600;
    BoundaryMode boundary_mode = BoundaryMode::semantic_first;
    std::string tokenizer = "whitespace";
};

enum class InputFormat { plain_text, jsonl };

// Counts tokens for a named tokenizer. Custom tokenizers may be registered at
// runtime; "whitespace" (word count) is the built-in default.
using TokenCounter = std::function<std::size_t(std::string_view)>;
void register_tokenizer(const std::string& name, TokenCounter counter);
std::size_t token_count(std::string_view text, const std::string& tokenizer = "whitespace");

// One Document per jsonl record ({id, title?, text}) or per plain-text file
// (id = file stem). Duplicate ids are rejected.
std::vector<Document> load_documents(const std::vector<std::filesystem::path>& paths,
                                     InputFormat format);

std::vector<Passage> chunk_document(const Document& doc, const ChunkPolicy& policy);

std::string source_kind_name(SourceKind kind);
SourceKind source_kind_from_name(const std::string& name);

}  // namespace ragsynth::ingest
