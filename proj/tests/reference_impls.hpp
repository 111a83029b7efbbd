// Brute-force reference implementations used as independent oracles by the
// unit and acceptance suites. Deliberately written with different algorithms
// and data layouts than the library (map-based sparse vectors, H(M)-based JSD,
// plain counting loops) so they cannot share a bug with the code under test.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ragsynth/eval.hpp"
#include "ragsynth/fidelity.hpp"

namespace reference {

inline std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && std::ispunct(static_cast<unsigned char>(cur.back()))) cur.pop_back();
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    flush();
    return out;
}

inline double avg_length(const ragsynth::fidelity::QuestionCorpus& c) {
    double total = 0;
    for (const auto& q : c.questions) {
        std::istringstream ss(q);
        std::string w;
        while (ss >> w) total += 1;
    }
    return total / static_cast<double>(c.questions.size());
}

inline double jaccard(const ragsynth::fidelity::QuestionCorpus& a,
                      const ragsynth::fidelity::QuestionCorpus& b) {
    std::set<std::string> va, vb;
    for (const auto& q : a.questions)
        for (const auto& t : tokens(q)) va.insert(t);
    for (const auto& q : b.questions)
        for (const auto& t : tokens(q)) vb.insert(t);
    std::set<std::string> inter, uni;
    std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(),
                          std::inserter(inter, inter.begin()));
    std::set_union(va.begin(), va.end(), vb.begin(), vb.end(), std::inserter(uni, uni.begin()));
    return uni.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

inline std::map<std::string, double> type_dist(const ragsynth::fidelity::QuestionCorpus& c) {
    std::map<std::string, double> dist;
    for (const auto& q : c.questions) dist[ragsynth::fidelity::classify_question_type(q)] += 1.0;
    for (auto& [k, v] : dist) v /= static_cast<double>(c.questions.size());
    return dist;
}

inline double entropy(const std::map<std::string, double>& dist) {
    double h = 0;
    for (const auto& [k, p] : dist)
        if (p > 0) h -= p * std::log2(p);
    return h;
}

inline double type_entropy(const ragsynth::fidelity::QuestionCorpus& c) {
    return entropy(type_dist(c));
}

// Different algebraic route than the implementation: JSD = H(M) - (H(P)+H(Q))/2.
inline double jsd(const ragsynth::fidelity::QuestionCorpus& a,
                  const ragsynth::fidelity::QuestionCorpus& b) {
    auto pa = type_dist(a), pb = type_dist(b);
    std::map<std::string, double> m = pa;
    for (auto& [k, v] : m) v *= 0.5;
    for (const auto& [k, v] : pb) m[k] += 0.5 * v;
    return entropy(m) - 0.5 * entropy(pa) - 0.5 * entropy(pb);
}

using Vec = std::map<std::string, double>;

inline std::vector<std::string> grams12(const std::string& q) {
    auto toks = tokens(q);
    std::vector<std::string> out = toks;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) out.push_back(toks[i] + " " + toks[i + 1]);
    return out;
}

inline double coverage(const ragsynth::fidelity::QuestionCorpus& a,
                       const ragsynth::fidelity::QuestionCorpus& b) {
    std::vector<std::string> all = a.questions;
    all.insert(all.end(), b.questions.begin(), b.questions.end());
    std::map<std::string, int> df;
    for (const auto& q : all) {
        std::set<std::string> uniq;
        for (const auto& g : grams12(q)) uniq.insert(g);
        for (const auto& g : uniq) ++df[g];
    }
    auto idf = [&](const std::string& g) {
        return std::log((1.0 + static_cast<double>(all.size())) / (1.0 + df.at(g))) + 1.0;
    };
    auto vec_of = [&](const std::string& q) {
        Vec v;
        for (const auto& g : grams12(q)) v[g] += 1.0;
        double norm2 = 0;
        for (auto& [g, tf] : v) {
            tf *= idf(g);
            norm2 += tf * tf;
        }
        if (norm2 > 0)
            for (auto& [g, tf] : v) tf /= std::sqrt(norm2);
        return v;
    };
    auto centroid_of = [&](const ragsynth::fidelity::QuestionCorpus& c) {
        Vec centroid;
        for (const auto& q : c.questions)
            for (const auto& [g, x] : vec_of(q)) centroid[g] += x;
        for (auto& [g, x] : centroid) x /= static_cast<double>(c.questions.size());
        return centroid;
    };
    Vec ca = centroid_of(a), cb = centroid_of(b);
    double dot = 0, na = 0, nb = 0;
    for (const auto& [g, x] : ca) {
        na += x * x;
        auto it = cb.find(g);
        if (it != cb.end()) dot += x * it->second;
    }
    for (const auto& [g, x] : cb) nb += x * x;
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double distinct2(const ragsynth::fidelity::QuestionCorpus& c) {
    std::vector<std::string> grams;
    for (const auto& q : c.questions) {
        auto toks = tokens(q);
        for (std::size_t i = 0; i + 1 < toks.size(); ++i)
            grams.push_back(toks[i] + " " + toks[i + 1]);
    }
    std::set<std::string> uniq(grams.begin(), grams.end());
    return grams.empty() ? 0.0
                         : static_cast<double>(uniq.size()) / static_cast<double>(grams.size());
}

inline double term_recall(const ragsynth::fidelity::QuestionCorpus& c,
                          const std::vector<std::string>& lexicon) {
    std::vector<std::vector<std::string>> corpus_tokens;
    for (const auto& q : c.questions) corpus_tokens.push_back(tokens(q));
    std::size_t hits = 0, total = 0;
    for (const auto& raw : lexicon) {
        auto term = tokens(raw);
        if (term.empty()) continue;
        ++total;
        bool found = false;
        for (const auto& toks : corpus_tokens) {
            for (std::size_t i = 0; !found && i + term.size() <= toks.size(); ++i) {
                bool match = true;
                for (std::size_t j = 0; j < term.size(); ++j)
                    if (toks[i + j] != term[j]) {
                        match = false;
                        break;
                    }
                found = match;
            }
            if (found) break;
        }
        if (found) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

// Plain-counting aggregation; negative sentinel = undefined.
struct EvalAgg {
    double precision = -1, recall = -1, f1 = 0, idk = 0, tn = -1;
};

inline EvalAgg aggregate(const std::vector<ragsynth::evalh::ExampleOutcome>& outcomes) {
    double answered = 0, correct = 0, answerable = 0, answered_answerable = 0, refused = 0,
           refused_unanswerable = 0;
    for (const auto& o : outcomes) {
        if (o.answerable) answerable += 1;
        if (o.refused) {
            refused += 1;
            if (!o.answerable) refused_unanswerable += 1;
        } else {
            answered += 1;
            if (o.correct && *o.correct) correct += 1;
            if (o.answerable) answered_answerable += 1;
        }
    }
    EvalAgg r;
    if (answered > 0) r.precision = correct / answered;
    if (answerable > 0) r.recall = answered_answerable / answerable;
    double p = r.precision < 0 ? 0 : r.precision;
    double rec = r.recall < 0 ? 0 : r.recall;
    r.f1 = (p + rec) == 0 ? 0 : 2 * p * rec / (p + rec);
    r.idk = refused / static_cast<double>(outcomes.size());
    if (refused > 0) r.tn = refused_unanswerable / refused;
    return r;
}

}  // namespace reference
