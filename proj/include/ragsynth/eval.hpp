/// @file eval.hpp
/// @brief Scoring of system outputs against labeled test sets: refusal
///        detection, citation extraction, QA precision/recall/F1, abstention
///        rate, and the true-negative rate of refusals.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ragsynth/dataset.hpp"

namespace ragsynth::evalh {

struct Prediction {
    std::string example_id;
    std::string response;
};

struct ExampleOutcome {
    std::string example_id;
    bool refused = false;
    std::optional<bool> correct;  // absent when refused
    std::vector<int> citations;
    bool answerable = true;  // from gold
};

struct EvalReport {
    std::optional<double> precision;  // absent when nothing was answered
    std::optional<double> recall;     // absent when nothing is answerable
    double f1 = 0.0;
    double idk_rate = 0.0;
    std::optional<double> tn_rate;  // absent when there are no refusals
    std::size_t n = 0;
    std::vector<ExampleOutcome> per_example;
};

const std::vector<std::string>& default_refusal_phrases();

// True iff the normalized response (lowercased, straightened apostrophes,
// stripped of surrounding whitespace/punctuation) begins with a registered
// refusal phrase.
bool detect_refusal(const std::string& response,
                    const std::vector<std::string>& phrases = default_refusal_phrases());

// Ordered distinct integers matched by the "[digits]" pattern.
std::vector<int> extract_citations(const std::string& response);

// Token-overlap F1 between normalized token multisets.
double token_overlap_f1(const std::string& a, const std::string& b);

using CorrectnessScorer = std::function<bool(const std::string& response,
                                             const std::string& reference)>;
CorrectnessScorer overlap_scorer(double threshold = 0.5);

ExampleOutcome score_example(const Prediction& pred, const dataset::QAExample& gold,
                             const CorrectnessScorer& scorer = overlap_scorer());

// precision = correct / answered; recall = answered-and-answerable / answerable;
// f1 = 2PR/(P+R) (0 when P+R = 0); idk = refused / n; tn = refused-and-
// unanswerable / refused.
EvalReport aggregate(const std::vector<ExampleOutcome>& outcomes);

struct RunEvalOptions {
    bool missing_as_refusal = false;  // default: missing predictions are an error
    CorrectnessScorer scorer = overlap_scorer();
    std::vector<std::string> refusal_phrases = default_refusal_phrases();
};

EvalReport run_eval(const std::vector<dataset::QAExample>& test_set,
                    const std::vector<Prediction>& predictions,
                    const RunEvalOptions& options = {});

std::string render_eval_table(const EvalReport& report);
ojson eval_to_json(const EvalReport& report);

}  // namespace ragsynth::evalh
