/// @file context_assembly.hpp
/// @brief Distractor injection and gold-passage placement.
///
/// Gold positions follow the discrete right-trapezoidal harmonic decay law
///
///     P(X = x) = 1/(N - K_min + 1) * sum_{K = max(x, K_min)}^{N} 1/K
///
/// over 1-based positions x in a context of N sources: a flat plateau on
/// positions 1..K_min followed by a strictly decreasing harmonic tail. The PMF
/// is computed in exact rational arithmetic so normalization can be asserted
/// with zero tolerance; values convert to floating point only at the sampling
/// boundary. Sampling uses the equivalent two-stage draw
/// K ~ Uniform{K_min..N}, then X ~ Uniform{1..K}.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "ragsynth/ingest.hpp"

namespace ragsynth::context {

using Rational = mpq_class;

struct PositionDistribution {
    int context_size = 0;  // N
    int plateau_len = 0;   // K_min
    std::vector<Rational> pmf;  // pmf[x-1] = P(X = x), reduced rationals

    std::vector<double> to_doubles() const;
};

PositionDistribution position_pmf(int context_size, int plateau_len);

int sample_gold_position(std::mt19937_64& rng, int context_size, int plateau_len);

// A weighted mixture over plateau lengths. Single-entry mixtures degenerate to
// one configuration; entries are clamped to the per-example context size.
struct PositionMixture {
    struct Component {
        int plateau_len = 1;
        double weight = 1.0;
    };
    std::vector<Component> components{{1, 1.0}};

    int sample_plateau(std::mt19937_64& rng) const;
};

// ---------------------------------------------------------------------------
// Numbered contexts
// ---------------------------------------------------------------------------

struct NumberedContext {
    std::vector<ingest::Passage> sources;
    int gold_index = 0;  // 1-based; 0 means the gold passage was withheld
    std::string rendered;  // fenced block: 21-hyphen fence, blank-line separated entries

    // "Source [k]: text" lines joined by single newlines (the form embedded
    // inside prompt templates that carry their own fences).
    std::string numbered_entries() const;
};

NumberedContext assemble_context(const ingest::Passage& gold,
                                 const std::vector<ingest::Passage>& distractors, int position);

// Distractor-only context for unanswerable examples.
NumberedContext assemble_negative_context(const std::vector<ingest::Passage>& distractors);

std::string render_context_block(const std::vector<ingest::Passage>& sources);

// ---------------------------------------------------------------------------
// Distractor selection
// ---------------------------------------------------------------------------

struct DistractorOptions {
    int min_count = 3;
    int max_count = 7;
    int top_m = 25;  // similarity shortlist size
};

// Scores each pool passage against the gold passage; higher = more similar.
using SimilarityScorer = std::function<std::vector<double>(
    const ingest::Passage& gold, const std::vector<ingest::Passage>& pool)>;

// TF-IDF cosine over unigrams, fitted on {gold} + pool.
SimilarityScorer tfidf_similarity_scorer();

// Draws count ~ Uniform{min..max} (capped at eligible pool size), then samples
// without replacement from the top-M most similar eligible passages, weighted
// by similarity. Passages from the gold passage's document are never eligible.
std::vector<ingest::Passage> select_distractors(const ingest::Passage& gold,
                                                const std::vector<ingest::Passage>& pool,
                                                const DistractorOptions& options,
                                                std::mt19937_64& rng,
                                                const SimilarityScorer& similarity =
                                                    tfidf_similarity_scorer());

// ---------------------------------------------------------------------------
// Citation remapping
// ---------------------------------------------------------------------------

struct CitationRemap {
    std::string text;
    std::vector<int> cited_sources;
};

// Rewrites every "[k]" citation token through the mapping. The mapping must be
// injective over the cited indices; bracketed text that is not a citation
// token is left untouched.
CitationRemap remap_citations(const std::string& text, const std::vector<int>& cited_sources,
                              const std::map<int, int>& old_to_new);

// Index mapping induced by moving the gold source from position 1 to
// `position` in a context of (distractor_count + 1) sources.
std::map<int, int> gold_first_remap(int distractor_count, int position);

}  // namespace ragsynth::context
