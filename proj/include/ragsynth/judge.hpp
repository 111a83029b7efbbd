/// @file judge.hpp
/// @brief LLM-as-judge filtering and citation-quality composite scoring.
#pragma once

#include <utility>
#include <vector>

#include "ragsynth/context_assembly.hpp"
#include "ragsynth/dataset.hpp"
#include "ragsynth/gateway.hpp"

namespace ragsynth::judge {

struct JudgeOptions {
    double temperature = 0.0;  // judging is deterministic by default
    int max_tokens = 512;
    std::string model_name;
    std::optional<int64_t> seed;
    int max_retries = 2;
    bool strict_json = false;  // reject fenced/embedded JSON payloads
};

// Comparative verdict: reference answer scored as Assistant 1, candidate as
// Assistant 2, both on 1-10. The first output line carries the two values.
struct JudgeVerdict {
    double score_reference = 0.0;
    double score_candidate = 0.0;
    std::string explanation;
    std::string raw;
};

JudgeVerdict judge_answer(const std::string& question, const std::string& reference,
                          const std::string& candidate, gateway::Gateway& gw,
                          const JudgeOptions& options = {});

// Keeps candidates scoring >= threshold; the strict "< threshold" side is
// dropped, so a score exactly at the threshold is kept.
using Judged = std::pair<dataset::QAExample, JudgeVerdict>;
std::pair<std::vector<Judged>, std::vector<Judged>> filter_by_score(
    const std::vector<Judged>& examples, double threshold = 5.0);

// Five sub-scores (0-10 each) averaged and scaled to the 0-100 composite.
struct CitationReport {
    double source_relevance = 0.0;
    double answer_quality = 0.0;
    double citation_usage = 0.0;
    double information_synthesis = 0.0;
    double faithfulness = 0.0;
    double overall_rating = 0.0;
    double composite = 0.0;  // 10 * mean of the five sub-scores
    ojson analysis;
    std::string raw;
};

double citation_composite(double source_relevance, double answer_quality, double citation_usage,
                          double information_synthesis, double faithfulness);

CitationReport citation_quality(const std::string& question, const std::string& response,
                                const context::NumberedContext& sources, gateway::Gateway& gw,
                                const JudgeOptions& options = {});

// Parses a raw judge JSON payload into a report (exposed for tests and audit
// tooling; tolerant of extra keys and markdown fences, strict on the five
// sub-scores and their 0-10 ranges).
CitationReport parse_citation_report(const std::string& raw);

// First-line "<ref> <cand>" parser; throws DataError carrying the raw text.
JudgeVerdict parse_judge_verdict(const std::string& raw);

ojson verdict_to_json(const JudgeVerdict& verdict);

}  // namespace ragsynth::judge
