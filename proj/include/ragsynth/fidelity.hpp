/// @file fidelity.hpp
/// @brief Distribution-fidelity metrics comparing a generated question corpus
///        against a real query corpus: lexical, question-type, semantic
///        coverage, diversity, and domain-term recall.
#pragma once

#include <string>
#include <vector>

#include "ragsynth/gateway.hpp"
#include "ragsynth/jsonl.hpp"

namespace ragsynth::fidelity {

struct QuestionCorpus {
    std::vector<std::string> questions;
    std::string label;
};

// Mean whitespace-token count per question.
double avg_length_words(const QuestionCorpus& corpus);

// |V(a) n V(b)| / |V(a) u V(b)| over lowercased word types.
double vocab_jaccard(const QuestionCorpus& a, const QuestionCorpus& b);

// Rule-based label from leading-token cues; "fragment" = no interrogative cue
// and no terminal question mark.
std::string classify_question_type(const std::string& question);
const std::vector<std::string>& question_type_taxonomy();

// Shannon entropy (base 2) of the empirical type distribution; 0*log0 = 0.
double type_entropy(const QuestionCorpus& corpus);

// Jensen-Shannon divergence (base 2, bounded by 1) between the two empirical
// type distributions over the union taxonomy.
double type_js_divergence(const QuestionCorpus& a, const QuestionCorpus& b);

// Cosine between corpus centroids. Default vectorizer: TF-IDF over
// unigrams+bigrams fitted on the union corpus; an embedding backend may be
// supplied instead.
double coverage_cosine(const QuestionCorpus& gen, const QuestionCorpus& real);
double coverage_cosine(const QuestionCorpus& gen, const QuestionCorpus& real,
                       gateway::Embedder& embedder);

// Distinct n-grams / total n-grams, pooled over the corpus.
double distinct_n(const QuestionCorpus& corpus, int n = 2);

// Fraction of lexicon terms (lowercased, phrase-aware) appearing in the corpus.
double term_recall(const QuestionCorpus& corpus, const std::vector<std::string>& lexicon);

struct FidelityReport {
    double avg_length_words = 0.0;
    double jaccard_with_real = 0.0;
    double type_entropy = 0.0;
    double type_js_divergence = 0.0;
    double coverage_cosine = 0.0;
    double distinct_2 = 0.0;
    double term_recall = 0.0;
};

FidelityReport fidelity_report(const QuestionCorpus& gen, const QuestionCorpus& real,
                               const std::vector<std::string>& lexicon);

// Aligned table with one row per metric and higher/lower-is-better arrows;
// corpus-intrinsic rows also show the real corpus.
std::string render_fidelity_table(const FidelityReport& report, const QuestionCorpus& gen,
                                  const QuestionCorpus& real);

ojson fidelity_to_json(const FidelityReport& report, const std::string& gen_label,
                       const std::string& real_label);

}  // namespace ragsynth::fidelity
