#include "ragsynth/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "ragsynth/common.hpp"
#include "ragsynth/text.hpp"
#include "ragsynth/tfidf.hpp"

namespace ragsynth::fidelity {

namespace {

void require_non_empty(const QuestionCorpus& corpus) {
    if (corpus.questions.empty())
        throw DataError("fidelity metric requires a non-empty corpus" +
                        (corpus.label.empty() ? std::string() : " (" + corpus.label + ")"));
}

std::set<std::string> vocabulary(const QuestionCorpus& corpus) {
    std::set<std::string> vocab;
    for (const auto& q : corpus.questions)
        for (auto& tok : text::normalize_tokens(q)) vocab.insert(std::move(tok));
    return vocab;
}

std::map<std::string, double> type_distribution(const QuestionCorpus& corpus) {
    std::map<std::string, std::size_t> counts;
    for (const auto& q : corpus.questions) ++counts[classify_question_type(q)];
    std::map<std::string, double> dist;
    for (const auto& [label, count] : counts)
        dist[label] = static_cast<double>(count) / static_cast<double>(corpus.questions.size());
    return dist;
}

double entropy_bits(const std::map<std::string, double>& dist) {
    double h = 0.0;
    for (const auto& [label, p] : dist)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

}  // namespace

double avg_length_words(const QuestionCorpus& corpus) {
    require_non_empty(corpus);
    std::size_t total = 0;
    for (const auto& q : corpus.questions) total += text::whitespace_token_count(q);
    return static_cast<double>(total) / static_cast<double>(corpus.questions.size());
}

double vocab_jaccard(const QuestionCorpus& a, const QuestionCorpus& b) {
    require_non_empty(a);
    require_non_empty(b);
    auto va = vocabulary(a);
    auto vb = vocabulary(b);
    std::size_t intersection = 0;
    for (const auto& t : va) intersection += vb.count(t);
    std::size_t union_size = va.size() + vb.size() - intersection;
    if (union_size == 0) return 0.0;
    return static_cast<double>(intersection) / static_cast<double>(union_size);
}

const std::vector<std::string>& question_type_taxonomy() {
    static const std::vector<std::string> taxonomy = {
        "what_is", "how_do_i", "can_i", "when_where", "why", "yes_no_aux", "fragment", "other"};
    return taxonomy;
}

std::string classify_question_type(const std::string& question) {
    auto tokens = text::normalize_tokens(question);
    if (tokens.empty()) return "fragment";
    const std::string& first = tokens.front();

    static const std::set<std::string> aux = {"is",   "are",  "do",    "does", "did",
                                              "will", "would", "should", "am",  "was",
                                              "were", "has",  "have",  "had"};
    if (first == "what" || first == "whats" || first == "what's") return "what_is";
    if (first == "how") return "how_do_i";
    if (first == "can" || first == "could" || first == "may") return "can_i";
    if (first == "when" || first == "where") return "when_where";
    if (first == "why") return "why";
    if (aux.count(first)) return "yes_no_aux";
    if (first == "who" || first == "which") return "other";

    std::string stripped = text::strip(question);
    if (!stripped.empty() && stripped.back() == '?') return "other";
    return "fragment";
}

double type_entropy(const QuestionCorpus& corpus) {
    require_non_empty(corpus);
    return entropy_bits(type_distribution(corpus));
}

double type_js_divergence(const QuestionCorpus& a, const QuestionCorpus& b) {
    require_non_empty(a);
    require_non_empty(b);
    auto pa = type_distribution(a);
    auto pb = type_distribution(b);
    std::set<std::string> support;
    for (const auto& [label, p] : pa) support.insert(label);
    for (const auto& [label, p] : pb) support.insert(label);

    double jsd = 0.0;
    for (const auto& label : support) {
        double p = pa.count(label) ? pa.at(label) : 0.0;
        double q = pb.count(label) ? pb.at(label) : 0.0;
        double m = 0.5 * (p + q);
        if (p > 0.0) jsd += 0.5 * p * std::log2(p / m);
        if (q > 0.0) jsd += 0.5 * q * std::log2(q / m);
    }
    return std::max(0.0, jsd);
}

double coverage_cosine(const QuestionCorpus& gen, const QuestionCorpus& real) {
    require_non_empty(gen);
    require_non_empty(real);
    std::vector<std::string> union_corpus = gen.questions;
    union_corpus.insert(union_corpus.end(), real.questions.begin(), real.questions.end());
    tfidf::TfidfVectorizer vec({.ngram_min = 1, .ngram_max = 2, .l2_normalize = true});
    vec.fit(union_corpus);

    auto corpus_centroid = [&](const QuestionCorpus& corpus) {
        std::vector<std::vector<double>> vectors;
        vectors.reserve(corpus.questions.size());
        for (const auto& q : corpus.questions) vectors.push_back(vec.transform(q));
        return tfidf::centroid(vectors);
    };
    auto cg = corpus_centroid(gen);
    auto cr = corpus_centroid(real);
    if (tfidf::norm(cg) == 0.0 && tfidf::norm(cr) == 0.0)
        throw DataError("coverage centroids are both zero vectors");
    return tfidf::cosine(cg, cr);
}

double coverage_cosine(const QuestionCorpus& gen, const QuestionCorpus& real,
                       gateway::Embedder& embedder) {
    require_non_empty(gen);
    require_non_empty(real);
    auto corpus_centroid = [&](const QuestionCorpus& corpus) {
        std::vector<std::vector<double>> vectors;
        vectors.reserve(corpus.questions.size());
        for (const auto& q : corpus.questions) vectors.push_back(embedder.embed(q));
        return tfidf::centroid(vectors);
    };
    auto cg = corpus_centroid(gen);
    auto cr = corpus_centroid(real);
    if (tfidf::norm(cg) == 0.0 && tfidf::norm(cr) == 0.0)
        throw DataError("coverage centroids are both zero vectors");
    return tfidf::cosine(cg, cr);
}

double distinct_n(const QuestionCorpus& corpus, int n) {
    require_non_empty(corpus);
    std::size_t total = 0;
    std::set<std::string> distinct;
    for (const auto& q : corpus.questions) {
        for (auto& g : tfidf::ngrams(q, n, n)) {
            ++total;
            distinct.insert(std::move(g));
        }
    }
    if (total == 0)
        throw DataError("corpus has no " + std::to_string(n) + "-grams");
    return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double term_recall(const QuestionCorpus& corpus, const std::vector<std::string>& lexicon) {
    require_non_empty(corpus);
    if (lexicon.empty()) throw DataError("term recall requires a non-empty lexicon");

    // Phrase-aware: multi-word terms match as contiguous normalized-token runs.
    std::set<std::vector<std::string>> windows;
    std::size_t max_term_len = 1;
    std::vector<std::vector<std::string>> terms;
    for (const auto& raw_term : lexicon) {
        auto toks = text::normalize_tokens(raw_term);
        if (toks.empty()) continue;
        max_term_len = std::max(max_term_len, toks.size());
        terms.push_back(std::move(toks));
    }
    for (const auto& q : corpus.questions) {
        auto toks = text::normalize_tokens(q);
        for (std::size_t len = 1; len <= std::min(max_term_len, toks.size()); ++len)
            for (std::size_t i = 0; i + len <= toks.size(); ++i)
                windows.insert(std::vector<std::string>(toks.begin() + i, toks.begin() + i + len));
    }
    if (terms.empty()) throw DataError("term recall lexicon normalized to empty");
    std::size_t hit = 0;
    for (const auto& term : terms) hit += windows.count(term);
    return static_cast<double>(hit) / static_cast<double>(terms.size());
}

FidelityReport fidelity_report(const QuestionCorpus& gen, const QuestionCorpus& real,
                               const std::vector<std::string>& lexicon) {
    FidelityReport report;
    report.avg_length_words = avg_length_words(gen);
    report.jaccard_with_real = vocab_jaccard(gen, real);
    report.type_entropy = type_entropy(gen);
    report.type_js_divergence = type_js_divergence(gen, real);
    report.coverage_cosine = coverage_cosine(gen, real);
    report.distinct_2 = distinct_n(gen, 2);
    report.term_recall = term_recall(gen, lexicon);
    return report;
}

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

std::string render_fidelity_table(const FidelityReport& report, const QuestionCorpus& gen,
                                  const QuestionCorpus& real) {
    struct Row {
        std::string label;
        std::string gen_value;
        std::string real_value;
    };
    std::vector<Row> rows = {
        {"Avg. length (words)", fmt3(report.avg_length_words), fmt3(avg_length_words(real))},
        {"Jaccard w/ real (↑)", fmt3(report.jaccard_with_real), "-"},
        {"Type entropy (↑)", fmt3(report.type_entropy), fmt3(type_entropy(real))},
        {"Type JS div. (↓)", fmt3(report.type_js_divergence), "-"},
        {"Coverage, cos. (↑)", fmt3(report.coverage_cosine), "-"},
        {"Distinct-2 (↑)", fmt3(report.distinct_2), fmt3(distinct_n(real, 2))},
        {"Fin. term recall (↑)", fmt3(report.term_recall), "-"},
    };

    std::string gen_label = gen.label.empty() ? "generated" : gen.label;
    std::string real_label = real.label.empty() ? "real" : real.label;
    std::size_t w0 = std::string("Metric").size(), w1 = gen_label.size(), w2 = real_label.size();
    for (const auto& r : rows) {
        w0 = std::max(w0, r.label.size() - 2);  // arrows are 3 UTF-8 bytes, display width 1
        w1 = std::max(w1, r.gen_value.size());
        w2 = std::max(w2, r.real_value.size());
    }
    std::ostringstream out;
    auto pad = [](const std::string& s, std::size_t w, bool arrow_row = false) {
        std::size_t display = s.size() - (arrow_row ? 2 : 0);
        return s + std::string(display < w ? w - display : 0, ' ');
    };
    out << pad("Metric", w0) << "  " << pad(gen_label, w1) << "  " << real_label << '\n';
    out << std::string(w0, '-') << "  " << std::string(w1, '-') << "  " << std::string(w2, '-')
        << '\n';
    for (const auto& r : rows) {
        bool has_arrow = r.label.find("↑") != std::string::npos ||
                         r.label.find("↓") != std::string::npos;
        out << pad(r.label, w0, has_arrow) << "  " << pad(r.gen_value, w1) << "  " << r.real_value
            << '\n';
    }
    return out.str();
}

ojson fidelity_to_json(const FidelityReport& report, const std::string& gen_label,
                       const std::string& real_label) {
    return ojson{
        {"gen_label", gen_label},
        {"real_label", real_label},
        {"avg_length_words", report.avg_length_words},
        {"jaccard_with_real", report.jaccard_with_real},
        {"type_entropy", report.type_entropy},
        {"type_js_divergence", report.type_js_divergence},
        {"coverage_cosine", report.coverage_cosine},
        {"distinct_2", report.distinct_2},
        {"term_recall", report.term_recall},
    };
}

}  // namespace ragsynth::fidelity
