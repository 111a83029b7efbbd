#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ragsynth/common.hpp"
#include "ragsynth/ingest.hpp"
#include "ragsynth/text.hpp"

using namespace ragsynth;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path p = fs::temp_directory_path() / ("ragsynth_test_" + name);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    return p;
}

std::string words(int n, const std::string& stem = "tok") {
    std::ostringstream out;
    for (int i = 0; i < n; ++i) {
        if (i) out << ' ';
        out << stem << i;
    }
    return out.str();
}

std::size_t count_tokens(const ingest::Passage& p) {
    return text::whitespace_token_count(p.text);
}

void check_coverage(const ingest::Document& doc, const std::vector<ingest::Passage>& passages) {
    std::string rebuilt;
    std::size_t expected_start = 0;
    for (const auto& p : passages) {
        CHECK(p.char_start == expected_start);
        CHECK(doc.body.substr(p.char_start, p.char_end - p.char_start) == p.text);
        rebuilt += p.text;
        expected_start = p.char_end;
    }
    CHECK(rebuilt == doc.body);
}

}  // namespace

TEST_CASE("token_count default tokenizer and registry") {
    CHECK(ingest::token_count("") == 0);
    CHECK(ingest::token_count("min credit score for mortgage") == 5);
    CHECK(ingest::token_count("a  b\tc") == 3);
    CHECK_THROWS_AS((void)ingest::token_count("x", "no-such-tokenizer"), DataError);

    ingest::register_tokenizer("chars", [](std::string_view s) { return s.size(); });
    CHECK(ingest::token_count("abc", "chars") == 3);
}

TEST_CASE("load_documents from jsonl") {
    SUBCASE("empty file gives empty list") {
        auto p = temp_file("empty.jsonl", "");
        CHECK(ingest::load_documents({p}, ingest::InputFormat::jsonl).empty());
    }
    SUBCASE("records load in input order") {
        auto p = temp_file("two.jsonl",
                           "{\"id\":\"a\",\"text\":\"alpha body\"}\n"
                           "{\"id\":\"b\",\"title\":\"B\",\"text\":\"beta body\"}\n");
        auto docs = ingest::load_documents({p}, ingest::InputFormat::jsonl);
        REQUIRE(docs.size() == 2);
        CHECK(docs[0].id == "a");
        CHECK(docs[1].id == "b");
        CHECK(docs[1].title == "B");
    }
    SUBCASE("duplicate id is rejected by name") {
        auto p = temp_file("dup.jsonl",
                           "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        CHECK_THROWS_WITH_AS((void)ingest::load_documents({p}, ingest::InputFormat::jsonl),
                             doctest::Contains("duplicate document id: a"), DataError);
    }
    SUBCASE("malformed line reports its line number") {
        auto p = temp_file("bad.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\nnot json\n");
        CHECK_THROWS_WITH_AS((void)ingest::load_documents({p}, ingest::InputFormat::jsonl),
                             doctest::Contains(":2:"), DataError);
    }
    SUBCASE("unreadable file") {
        CHECK_THROWS_AS(
            (void)ingest::load_documents({"/no/such/file.jsonl"}, ingest::InputFormat::jsonl),
            DataError);
    }
}

TEST_CASE("load_documents from plain text uses the file stem as id") {
    auto p = temp_file("plain_doc.txt", "some body text");
    auto docs = ingest::load_documents({p}, ingest::InputFormat::plain_text);
    REQUIRE(docs.size() == 1);
    CHECK(docs[0].id == "ragsynth_test_plain_doc");
    CHECK(docs[0].body == "some body text");
}

TEST_CASE("chunk_document fixed windows") {
    ingest::ChunkPolicy policy{400, 600, ingest::BoundaryMode::fixed_window, "whitespace"};

    SUBCASE("body of exactly 500 tokens fits one window") {
        ingest::Document doc{"d", "d", words(500), ingest::SourceKind::generic};
        auto passages = ingest::chunk_document(doc, policy);
        REQUIRE(passages.size() == 1);
        CHECK(count_tokens(passages[0]) == 500);
        CHECK_FALSE(passages[0].tail_flag);
        check_coverage(doc, passages);
    }
    SUBCASE("1200 tokens cut greedily into 600 + 600") {
        ingest::Document doc{"d", "d", words(1200), ingest::SourceKind::generic};
        auto passages = ingest::chunk_document(doc, policy);
        REQUIRE(passages.size() == 2);
        CHECK(count_tokens(passages[0]) == 600);
        CHECK(count_tokens(passages[1]) == 600);
        check_coverage(doc, passages);
    }
    SUBCASE("short tail is flagged") {
        ingest::Document doc{"d", "d", words(700), ingest::SourceKind::generic};
        auto passages = ingest::chunk_document(doc, policy);
        REQUIRE(passages.size() == 2);
        CHECK(count_tokens(passages[0]) == 600);
        CHECK(count_tokens(passages[1]) == 100);
        CHECK(passages[1].tail_flag);
    }
}

TEST_CASE("chunk_document semantic_first packs paragraphs greedily") {
    ingest::ChunkPolicy policy{400, 600, ingest::BoundaryMode::semantic_first, "whitespace"};
    std::string body = words(300, "aa") + "\n\n" + words(300, "bb") + "\n\n" + words(300, "cc");
    ingest::Document doc{"d", "d", body, ingest::SourceKind::sec_filing};
    auto passages = ingest::chunk_document(doc, policy);
    REQUIRE(passages.size() == 2);
    CHECK(count_tokens(passages[0]) == 600);  // paragraphs 1+2
    CHECK(count_tokens(passages[1]) == 300);  // flagged tail paragraph
    CHECK(passages[1].tail_flag);
    check_coverage(doc, passages);
}

TEST_CASE("chunk_document honors heading boundaries") {
    ingest::ChunkPolicy policy{5, 12, ingest::BoundaryMode::semantic_first, "whitespace"};
    std::string body = words(8, "intro") + "\n# Heading One\n" + words(9, "sect");
    ingest::Document doc{"d", "d", body, ingest::SourceKind::generic};
    auto passages = ingest::chunk_document(doc, policy);
    REQUIRE(passages.size() == 2);
    // Cut lands on the heading line, which starts the second chunk.
    CHECK(passages[1].text.rfind("# Heading One", 0) == 0);
    check_coverage(doc, passages);
}

TEST_CASE("chunk_document errors") {
    ingest::Document doc{"d", "d", "", ingest::SourceKind::generic};
    ingest::ChunkPolicy policy;
    CHECK_THROWS_AS((void)ingest::chunk_document(doc, policy), DataError);

    ingest::Document ok{"d", "d", "text", ingest::SourceKind::generic};
    ingest::ChunkPolicy bad{600, 400, ingest::BoundaryMode::fixed_window, "whitespace"};
    CHECK_THROWS_AS((void)ingest::chunk_document(ok, bad), UsageError);
}

TEST_CASE("chunker invariants on randomized documents") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        std::uniform_int_distribution<int> n_paras(1, 12);
        std::uniform_int_distribution<int> para_len(5, 400);
        std::ostringstream body;
        int paras = n_paras(rng);
        for (int i = 0; i < paras; ++i) {
            if (i) body << "\n\n";
            body << words(para_len(rng), "w" + std::to_string(i) + "_");
        }
        ingest::Document doc{"d", "d", body.str(), ingest::SourceKind::generic};
        for (auto mode : {ingest::BoundaryMode::semantic_first, ingest::BoundaryMode::fixed_window}) {
            ingest::ChunkPolicy policy{400, 600, mode, "whitespace"};
            auto passages = ingest::chunk_document(doc, policy);
            check_coverage(doc, passages);
            for (std::size_t i = 0; i + 1 < passages.size(); ++i) {
                CHECK(count_tokens(passages[i]) >= 400);
                CHECK(count_tokens(passages[i]) <= 600);
            }
            CHECK(count_tokens(passages.back()) <= 600);
            // Determinism.
            auto again = ingest::chunk_document(doc, policy);
            REQUIRE(again.size() == passages.size());
            for (std::size_t i = 0; i < passages.size(); ++i)
                CHECK(again[i].text == passages[i].text);
        }
    }
}
