#include "ragsynth/judge.hpp"

#include <cmath>
#include <sstream>

#include "ragsynth/common.hpp"
#include "ragsynth/json_util.hpp"
#include "ragsynth/prompts.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::judge {

namespace {

gateway::CompletionRequest make_request(std::string system, std::string user,
                                        const JudgeOptions& options, int attempt) {
    gateway::CompletionRequest req;
    req.system_prompt = std::move(system);
    req.user_prompt = std::move(user);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.model_name = options.model_name;
    req.seed = options.seed.value_or(0) + attempt;
    return req;
}

bool parse_score_token(const std::string& token, double& out) {
    try {
        std::size_t used = 0;
        out = std::stod(token, &used);
        return used == token.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

JudgeVerdict parse_judge_verdict(const std::string& raw) {
    auto lines = text::split_lines(raw);
    std::size_t first = 0;
    while (first < lines.size() && text::strip(lines[first]).empty()) ++first;
    if (first >= lines.size())
        throw DataError("judge output is empty: " + raw);

    auto tokens = text::whitespace_tokens(lines[first]);
    double ref = 0.0, cand = 0.0;
    if (tokens.size() != 2 || !parse_score_token(tokens[0], ref) ||
        !parse_score_token(tokens[1], cand))
        throw DataError("judge output first line is not two scores: " + raw);
    if (ref < 1.0 || ref > 10.0 || cand < 1.0 || cand > 10.0)
        throw DataError("judge scores outside [1, 10]: " + raw);

    JudgeVerdict verdict;
    verdict.score_reference = ref;
    verdict.score_candidate = cand;
    verdict.raw = raw;
    std::ostringstream explanation;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (i > first + 1) explanation << '\n';
        explanation << lines[i];
    }
    verdict.explanation = text::strip(explanation.str());
    return verdict;
}

JudgeVerdict judge_answer(const std::string& question, const std::string& reference,
                          const std::string& candidate, gateway::Gateway& gw,
                          const JudgeOptions& options) {
    if (question.empty() || reference.empty() || candidate.empty())
        throw DataError("judge_answer requires non-empty question, reference, and candidate");
    std::string prompt = prompts::render_answer_judge_prompt(question, reference, candidate);

    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        auto completion = gw.complete(make_request("", prompt, options, attempt));
        try {
            return parse_judge_verdict(completion.text);
        } catch (const DataError& e) {
            last_error = e.what();
        }
    }
    throw DataError("judge verdict unparseable after " + std::to_string(options.max_retries + 1) +
                    " attempts: " + last_error);
}

std::pair<std::vector<Judged>, std::vector<Judged>> filter_by_score(
    const std::vector<Judged>& examples, double threshold) {
    std::vector<Judged> kept, dropped;
    for (const auto& judged : examples) {
        if (judged.second.score_candidate >= threshold)
            kept.push_back(judged);
        else
            dropped.push_back(judged);
    }
    return {std::move(kept), std::move(dropped)};
}

// =============================================================================
// Citation quality
// =============================================================================

double citation_composite(double source_relevance, double answer_quality, double citation_usage,
                          double information_synthesis, double faithfulness) {
    return 10.0 *
           (source_relevance + answer_quality + citation_usage + information_synthesis +
            faithfulness) /
           5.0;
}

namespace {

// Accepts "Source Relevance", "source_relevance", "source-relevance", ...
std::string canonical_key(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else if (!out.empty() && out.back() != '_')
            out += '_';
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

double require_subscore(const ojson& scores, const std::string& name) {
    for (const auto& [key, value] : scores.items()) {
        if (canonical_key(key) != name) continue;
        if (!value.is_number())
            throw DataError("citation sub-score '" + name + "' is not numeric");
        double v = value.get<double>();
        if (v < 0.0 || v > 10.0)
            throw DataError("citation sub-score '" + name + "' outside [0, 10]: " +
                            std::to_string(v));
        return v;
    }
    throw DataError("citation judge payload missing sub-score: " + name);
}

}  // namespace

CitationReport parse_citation_report(const std::string& raw) {
    ojson payload = parse_lenient_json(raw);
    if (!payload.contains("scores")) throw DataError("citation judge payload missing key: scores");
    if (!payload.contains("overall_rating"))
        throw DataError("citation judge payload missing key: overall_rating");

    const ojson& scores = payload.at("scores");
    CitationReport report;
    report.source_relevance = require_subscore(scores, "source_relevance");
    report.answer_quality = require_subscore(scores, "answer_quality");
    report.citation_usage = require_subscore(scores, "citation_usage");
    report.information_synthesis = require_subscore(scores, "information_synthesis");
    report.faithfulness = require_subscore(scores, "faithfulness");
    report.overall_rating = payload.at("overall_rating").get<double>();
    if (report.overall_rating < 0.0 || report.overall_rating > 10.0)
        throw DataError("overall_rating outside [0, 10]");
    report.composite =
        citation_composite(report.source_relevance, report.answer_quality, report.citation_usage,
                           report.information_synthesis, report.faithfulness);
    report.analysis = payload.value("analysis", ojson::object());
    report.raw = raw;
    return report;
}

CitationReport citation_quality(const std::string& question, const std::string& response,
                                const context::NumberedContext& sources, gateway::Gateway& gw,
                                const JudgeOptions& options) {
    if (question.empty() || response.empty() || sources.sources.empty())
        throw DataError("citation_quality requires non-empty question, response, and sources");
    std::string user =
        prompts::render_citation_judge_user(question, response, sources.numbered_entries());

    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        auto completion =
            gw.complete(make_request(prompts::citation_judge_system(), user, options, attempt));
        try {
            return parse_citation_report(completion.text);
        } catch (const DataError& e) {
            last_error = e.what();
        }
    }
    throw DataError("citation report unparseable after " +
                    std::to_string(options.max_retries + 1) + " attempts: " + last_error);
}

ojson verdict_to_json(const JudgeVerdict& verdict) {
    return ojson{{"score_reference", verdict.score_reference},
                 {"score_candidate", verdict.score_candidate},
                 {"explanation", verdict.explanation},
                 {"raw", verdict.raw}};
}

}  // namespace ragsynth::judge
