#include "ragsynth/ingest.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "ragsynth/common.hpp"
#include "ragsynth/jsonl.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::ingest {

namespace {

std::map<std::string, TokenCounter>& tokenizer_table() {
    static std::map<std::string, TokenCounter> table = {
        {"whitespace", [](std::string_view s) { return text::whitespace_token_count(s); }},
    };
    return table;
}

std::mutex tokenizer_mutex;

bool is_blank_line(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

bool is_heading_line(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == '#') ++i;
    return i >= 1 && i <= 6 && i < line.size() && (line[i] == ' ' || line[i] == '\t');
}

// Char offsets where a new paragraph or heading begins. These are the
// preferred cut points in semantic_first mode.
std::vector<std::size_t> semantic_boundary_offsets(std::string_view body) {
    std::vector<std::size_t> offsets;
    std::size_t line_start = 0;
    bool prev_blank = false;
    bool first = true;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || body[i] == '\n') {
            std::string_view line = body.substr(line_start, i - line_start);
            bool blank = is_blank_line(line);
            // A heading starts a section and binds to the text that follows it.
            if (!blank && !first && (prev_blank || is_heading_line(line)))
                offsets.push_back(line_start);
            if (!blank) first = false;
            prev_blank = blank;
            line_start = i + 1;
        }
    }
    return offsets;
}

}  // namespace

void register_tokenizer(const std::string& name, TokenCounter counter) {
    std::lock_guard<std::mutex> lock(tokenizer_mutex);
    tokenizer_table()[name] = std::move(counter);
}

std::size_t token_count(std::string_view text_in, const std::string& tokenizer) {
    TokenCounter counter;
    {
        std::lock_guard<std::mutex> lock(tokenizer_mutex);
        auto it = tokenizer_table().find(tokenizer);
        if (it == tokenizer_table().end())
            throw DataError("unknown tokenizer selector: " + tokenizer);
        counter = it->second;
    }
    return counter(text_in);
}

std::vector<Document> load_documents(const std::vector<std::filesystem::path>& paths,
                                     InputFormat format) {
    std::vector<Document> docs;
    std::set<std::string> seen_ids;
    auto add = [&](Document doc) {
        if (!seen_ids.insert(doc.id).second)
            throw DataError("duplicate document id: " + doc.id);
        docs.push_back(std::move(doc));
    };

    for (const auto& path : paths) {
        if (format == InputFormat::plain_text) {
            Document doc;
            doc.id = path.stem().string();
            doc.title = doc.id;
            doc.body = read_text_file(path);
            add(std::move(doc));
        } else {
            std::size_t line_no = 0;
            for (const auto& rec : read_jsonl(path)) {
                ++line_no;
                if (!rec.contains("id") || !rec.contains("text"))
                    throw DataError(path.string() + ": record " + std::to_string(line_no) +
                                    " missing required field (id, text)");
                Document doc;
                doc.id = rec.at("id").get<std::string>();
                doc.title = rec.value("title", doc.id);
                doc.body = rec.at("text").get<std::string>();
                if (rec.contains("source_kind"))
                    doc.source_kind = source_kind_from_name(rec.at("source_kind").get<std::string>());
                add(std::move(doc));
            }
        }
    }
    return docs;
}

std::vector<Passage> chunk_document(const Document& doc, const ChunkPolicy& policy) {
    if (policy.min_tokens <= 0 || policy.min_tokens > policy.max_tokens)
        throw UsageError("chunk policy requires 0 < min_tokens <= max_tokens");
    if (doc.body.empty()) throw DataError("document has empty body: " + doc.id);

    const auto spans = text::whitespace_token_spans(doc.body);
    const std::size_t n_tokens = spans.size();
    const auto max_t = static_cast<std::size_t>(policy.max_tokens);
    const auto min_t = static_cast<std::size_t>(policy.min_tokens);

    // Map semantic boundary char offsets to token indices.
    std::vector<std::size_t> candidates;
    if (policy.boundary_mode == BoundaryMode::semantic_first) {
        for (std::size_t off : semantic_boundary_offsets(doc.body)) {
            auto it = std::lower_bound(spans.begin(), spans.end(), off,
                                       [](const text::TokenSpan& s, std::size_t v) { return s.begin < v; });
            std::size_t idx = static_cast<std::size_t>(it - spans.begin());
            if (idx > 0 && idx < n_tokens) candidates.push_back(idx);
        }
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }

    // Greedy walk: cut at the last preferred boundary within [min, max] tokens
    // of the chunk start, or at exactly max tokens when none exists.
    std::vector<std::size_t> cuts;  // token indices that start a new chunk
    std::size_t cur = 0;
    while (n_tokens - cur > max_t) {
        std::size_t lo = cur + min_t, hi = cur + max_t;
        std::size_t cut = hi;
        auto it = std::upper_bound(candidates.begin(), candidates.end(), hi);
        if (it != candidates.begin() && *(it - 1) >= lo) cut = *(it - 1);
        cuts.push_back(cut);
        cur = cut;
    }

    std::vector<Passage> passages;
    std::size_t chunk_start_char = 0;
    std::size_t chunk_index = 0;
    auto emit = [&](std::size_t end_char, bool last) {
        Passage p;
        p.doc_id = doc.id;
        p.id = doc.id + "#" + std::to_string(chunk_index++);
        p.char_start = chunk_start_char;
        p.char_end = end_char;
        p.text = doc.body.substr(p.char_start, p.char_end - p.char_start);
        p.token_count = token_count(p.text, policy.tokenizer);
        p.tail_flag = last && p.token_count < min_t;
        passages.push_back(std::move(p));
        chunk_start_char = end_char;
    };
    for (std::size_t cut : cuts) emit(spans[cut].begin, false);
    emit(doc.body.size(), true);
    return passages;
}

std::string source_kind_name(SourceKind kind) {
    switch (kind) {
        case SourceKind::sec_filing: return "sec_filing";
        case SourceKind::web: return "web";
        case SourceKind::generic: return "generic";
    }
    return "generic";
}

SourceKind source_kind_from_name(const std::string& name) {
    if (name == "sec_filing") return SourceKind::sec_filing;
    if (name == "web") return SourceKind::web;
    if (name == "generic") return SourceKind::generic;
    throw DataError("unknown source_kind: " + name);
}

}  // namespace ragsynth::ingest
