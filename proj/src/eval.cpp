#include "ragsynth/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "ragsynth/common.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::evalh {

const std::vector<std::string>& default_refusal_phrases() {
    static const std::vector<std::string> phrases = {"i don't know", "i do not know"};
    return phrases;
}

bool detect_refusal(const std::string& response, const std::vector<std::string>& phrases) {
    std::string norm = text::normalize_for_refusal(response);
    for (const auto& phrase : phrases) {
        std::string p = text::normalize_for_refusal(phrase);
        if (!p.empty() && norm.rfind(p, 0) == 0) return true;
    }
    return false;
}

std::vector<int> extract_citations(const std::string& response) {
    static const std::regex citation_re(R"(\[(\d+)\])");
    std::vector<int> out;
    for (auto it = std::sregex_iterator(response.begin(), response.end(), citation_re);
         it != std::sregex_iterator(); ++it) {
        int k = std::stoi(it->str(1));
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

double token_overlap_f1(const std::string& a, const std::string& b) {
    auto ta = text::normalize_tokens(a);
    auto tb = text::normalize_tokens(b);
    if (ta.empty() || tb.empty()) return ta.empty() && tb.empty() ? 1.0 : 0.0;
    std::map<std::string, std::size_t> counts;
    for (const auto& t : ta) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : tb) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    double p = static_cast<double>(common) / static_cast<double>(ta.size());
    double r = static_cast<double>(common) / static_cast<double>(tb.size());
    return 2.0 * p * r / (p + r);
}

CorrectnessScorer overlap_scorer(double threshold) {
    return [threshold](const std::string& response, const std::string& reference) {
        return token_overlap_f1(response, reference) >= threshold;
    };
}

ExampleOutcome score_example(const Prediction& pred, const dataset::QAExample& gold,
                             const CorrectnessScorer& scorer) {
    if (pred.example_id != gold.id)
        throw DataError("prediction id '" + pred.example_id + "' does not match example '" +
                        gold.id + "'");
    ExampleOutcome outcome;
    outcome.example_id = pred.example_id;
    outcome.answerable = gold.answerable;
    outcome.citations = extract_citations(pred.response);
    outcome.refused = detect_refusal(pred.response);
    if (!outcome.refused) outcome.correct = scorer(pred.response, gold.answer);
    return outcome;
}

EvalReport aggregate(const std::vector<ExampleOutcome>& outcomes) {
    if (outcomes.empty()) throw DataError("cannot aggregate an empty outcome list");

    std::size_t answered = 0, correct = 0, answerable = 0, answered_answerable = 0, refused = 0,
                refused_unanswerable = 0;
    for (const auto& o : outcomes) {
        if (o.answerable) ++answerable;
        if (o.refused) {
            ++refused;
            if (!o.answerable) ++refused_unanswerable;
        } else {
            ++answered;
            if (o.correct.value_or(false)) ++correct;
            if (o.answerable) ++answered_answerable;
        }
    }

    EvalReport report;
    report.n = outcomes.size();
    report.per_example = outcomes;
    if (answered > 0)
        report.precision = static_cast<double>(correct) / static_cast<double>(answered);
    if (answerable > 0)
        report.recall =
            static_cast<double>(answered_answerable) / static_cast<double>(answerable);
    double p = report.precision.value_or(0.0);
    double r = report.recall.value_or(0.0);
    report.f1 = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    report.idk_rate = static_cast<double>(refused) / static_cast<double>(report.n);
    if (refused > 0)
        report.tn_rate = static_cast<double>(refused_unanswerable) / static_cast<double>(refused);
    return report;
}

EvalReport run_eval(const std::vector<dataset::QAExample>& test_set,
                    const std::vector<Prediction>& predictions, const RunEvalOptions& options) {
    if (test_set.empty()) throw DataError("test set is empty");

    std::map<std::string, const Prediction*> by_id;
    for (const auto& pred : predictions) {
        if (!by_id.emplace(pred.example_id, &pred).second)
            throw DataError("duplicate prediction id: " + pred.example_id);
    }
    std::set<std::string> test_ids;
    for (const auto& gold : test_set) {
        if (!test_ids.insert(gold.id).second)
            throw DataError("duplicate test example id: " + gold.id);
    }
    for (const auto& [id, pred] : by_id)
        if (!test_ids.count(id)) throw DataError("prediction for unknown example id: " + id);

    std::vector<std::string> missing;
    for (const auto& gold : test_set)
        if (!by_id.count(gold.id)) missing.push_back(gold.id);
    if (!missing.empty() && !options.missing_as_refusal) {
        std::string joined;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
            joined += (i ? ", " : "") + missing[i];
        if (missing.size() > 10) joined += ", ...";
        throw DataError("missing predictions for " + std::to_string(missing.size()) +
                        " example(s): " + joined);
    }

    std::vector<ExampleOutcome> outcomes;
    outcomes.reserve(test_set.size());
    for (const auto& gold : test_set) {
        auto it = by_id.find(gold.id);
        if (it == by_id.end()) {
            ExampleOutcome outcome;
            outcome.example_id = gold.id;
            outcome.refused = true;
            outcome.answerable = gold.answerable;
            outcomes.push_back(std::move(outcome));
            continue;
        }
        const Prediction& pred = *it->second;
        ExampleOutcome outcome;
        outcome.example_id = pred.example_id;
        outcome.answerable = gold.answerable;
        outcome.citations = extract_citations(pred.response);
        outcome.refused = detect_refusal(pred.response, options.refusal_phrases);
        if (!outcome.refused) outcome.correct = options.scorer(pred.response, gold.answer);
        outcomes.push_back(std::move(outcome));
    }
    return aggregate(outcomes);
}

namespace {

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string render_eval_table(const EvalReport& report) {
    std::ostringstream out;
    out << "Metric     Value\n";
    out << "---------  ------\n";
    out << "Precision  " << fmt_opt(report.precision) << '\n';
    out << "Recall     " << fmt_opt(report.recall) << '\n';
    out << "QA F1      " << fmt(report.f1) << '\n';
    out << "IDK rate   " << fmt(report.idk_rate) << '\n';
    out << "TN rate    " << fmt_opt(report.tn_rate) << '\n';
    out << "N          " << report.n << '\n';
    return out.str();
}

ojson eval_to_json(const EvalReport& report) {
    ojson per_example = ojson::array();
    for (const auto& o : report.per_example) {
        ojson rec{{"example_id", o.example_id},
                  {"refused", o.refused},
                  {"citations", o.citations},
                  {"answerable", o.answerable}};
        if (o.correct)
            rec["correct"] = *o.correct;
        else
            rec["correct"] = nullptr;
        per_example.push_back(std::move(rec));
    }
    ojson j{{"n", report.n},
            {"precision", report.precision ? ojson(*report.precision) : ojson(nullptr)},
            {"recall", report.recall ? ojson(*report.recall) : ojson(nullptr)},
            {"f1", report.f1},
            {"idk_rate", report.idk_rate},
            {"tn_rate", report.tn_rate ? ojson(*report.tn_rate) : ojson(nullptr)},
            {"per_example", std::move(per_example)}};
    return j;
}

}  // namespace ragsynth::evalh
