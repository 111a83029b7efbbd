#include "ragsynth/context_assembly.hpp"

#include <algorithm>
#include <numeric>
#include <regex>
#include <set>

#include "ragsynth/common.hpp"
#include "ragsynth/prompts.hpp"
#include "ragsynth/tfidf.hpp"

namespace ragsynth::context {

namespace {

void check_position_args(int context_size, int plateau_len) {
    if (context_size <= 0) throw DataError("position distribution requires N >= 1");
    if (plateau_len < 1 || plateau_len > context_size)
        throw DataError("position distribution requires 1 <= K_min <= N (got K_min=" +
                        std::to_string(plateau_len) + ", N=" + std::to_string(context_size) + ")");
}

}  // namespace

std::vector<double> PositionDistribution::to_doubles() const {
    std::vector<double> out;
    out.reserve(pmf.size());
    for (const auto& q : pmf) out.push_back(q.get_d());
    return out;
}

PositionDistribution position_pmf(int context_size, int plateau_len) {
    check_position_args(context_size, plateau_len);
    const int n = context_size;
    const int k_min = plateau_len;

    // suffix[x] = sum_{K=x}^{N} 1/K
    std::vector<Rational> suffix(static_cast<std::size_t>(n) + 2, Rational(0));
    for (int k = n; k >= 1; --k) suffix[k] = suffix[k + 1] + Rational(1, k);

    PositionDistribution dist;
    dist.context_size = n;
    dist.plateau_len = k_min;
    dist.pmf.reserve(n);
    // mpq arithmetic keeps canonical operands canonical, so entries are already
    // reduced.
    const Rational norm(1, n - k_min + 1);
    for (int x = 1; x <= n; ++x) dist.pmf.push_back(suffix[std::max(x, k_min)] * norm);
    return dist;
}

int sample_gold_position(std::mt19937_64& rng, int context_size, int plateau_len) {
    check_position_args(context_size, plateau_len);
    std::uniform_int_distribution<int> draw_k(plateau_len, context_size);
    int k = draw_k(rng);
    std::uniform_int_distribution<int> draw_x(1, k);
    return draw_x(rng);
}

int PositionMixture::sample_plateau(std::mt19937_64& rng) const {
    if (components.empty()) throw DataError("position mixture has no components");
    double total = 0.0;
    for (const auto& c : components) {
        if (c.weight < 0) throw DataError("position mixture weights must be non-negative");
        total += c.weight;
    }
    if (total <= 0) throw DataError("position mixture weights sum to zero");
    std::uniform_real_distribution<double> draw(0.0, total);
    double u = draw(rng);
    double acc = 0.0;
    for (const auto& c : components) {
        acc += c.weight;
        if (u < acc) return c.plateau_len;
    }
    return components.back().plateau_len;
}

// =============================================================================
// Numbered contexts
// =============================================================================

std::string NumberedContext::numbered_entries() const {
    std::string out;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        if (k > 0) out += '\n';
        out += "Source [" + std::to_string(k + 1) + "]: " + sources[k].text;
    }
    return out;
}

std::string render_context_block(const std::vector<ingest::Passage>& sources) {
    const std::string& fence = prompts::context_fence();
    std::string out = fence;
    out += '\n';
    for (std::size_t k = 0; k < sources.size(); ++k)
        out += "\nSource [" + std::to_string(k + 1) + "]: " + sources[k].text + "\n";
    out += '\n';
    out += fence;
    return out;
}

NumberedContext assemble_context(const ingest::Passage& gold,
                                 const std::vector<ingest::Passage>& distractors, int position) {
    const int n = static_cast<int>(distractors.size()) + 1;
    if (position < 1 || position > n)
        throw DataError("gold position " + std::to_string(position) + " out of range [1, " +
                        std::to_string(n) + "]");
    NumberedContext ctx;
    ctx.sources.reserve(distractors.size() + 1);
    ctx.sources.assign(distractors.begin(), distractors.end());
    ctx.sources.insert(ctx.sources.begin() + (position - 1), gold);
    ctx.gold_index = position;
    ctx.rendered = render_context_block(ctx.sources);
    return ctx;
}

NumberedContext assemble_negative_context(const std::vector<ingest::Passage>& distractors) {
    NumberedContext ctx;
    ctx.sources = distractors;
    ctx.gold_index = 0;
    ctx.rendered = render_context_block(ctx.sources);
    return ctx;
}

// =============================================================================
// Distractor selection
// =============================================================================

SimilarityScorer tfidf_similarity_scorer() {
    return [](const ingest::Passage& gold, const std::vector<ingest::Passage>& pool) {
        std::vector<std::string> corpus;
        corpus.reserve(pool.size() + 1);
        corpus.push_back(gold.text);
        for (const auto& p : pool) corpus.push_back(p.text);
        tfidf::TfidfVectorizer vec({.ngram_min = 1, .ngram_max = 1, .l2_normalize = true});
        vec.fit(corpus);
        auto gold_vec = vec.transform(gold.text);
        std::vector<double> scores;
        scores.reserve(pool.size());
        for (const auto& p : pool) scores.push_back(tfidf::cosine(gold_vec, vec.transform(p.text)));
        return scores;
    };
}

std::vector<ingest::Passage> select_distractors(const ingest::Passage& gold,
                                                const std::vector<ingest::Passage>& pool,
                                                const DistractorOptions& options,
                                                std::mt19937_64& rng,
                                                const SimilarityScorer& similarity) {
    if (options.min_count < 1 || options.min_count > options.max_count)
        throw UsageError("distractor count range requires 1 <= min <= max");

    std::vector<ingest::Passage> eligible;
    for (const auto& p : pool)
        if (p.id != gold.id && p.doc_id != gold.doc_id) eligible.push_back(p);
    if (eligible.size() < 3)
        throw DataError("distractor pool too small: " + std::to_string(eligible.size()) +
                        " eligible passages (need >= 3)");

    std::uniform_int_distribution<int> draw_count(options.min_count, options.max_count);
    std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(draw_count(rng)),
                                              eligible.size());

    auto scores = similarity(gold, eligible);

    // Shortlist: top-M by similarity, ties broken by passage id for determinism.
    std::vector<std::size_t> order(eligible.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return eligible[a].id < eligible[b].id;
    });
    std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(options.top_m), order.size());
    m = std::max(m, count);  // shortlist can never starve the requested count
    std::vector<std::size_t> shortlist(order.begin(), order.begin() + m);

    // Similarity-weighted sampling without replacement; uniform fallback once
    // only zero-weight passages remain.
    std::vector<ingest::Passage> chosen;
    chosen.reserve(count);
    std::vector<double> weights;
    for (std::size_t idx : shortlist) weights.push_back(std::max(scores[idx], 0.0));
    std::vector<std::size_t> remaining = shortlist;
    while (chosen.size() < count && !remaining.empty()) {
        double total = 0.0;
        for (std::size_t i = 0; i < remaining.size(); ++i) total += weights[i];
        std::size_t pick = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> draw(0.0, total);
            double u = draw(rng);
            double acc = 0.0;
            pick = remaining.size() - 1;
            for (std::size_t i = 0; i < remaining.size(); ++i) {
                acc += weights[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            std::uniform_int_distribution<std::size_t> draw(0, remaining.size() - 1);
            pick = draw(rng);
        }
        chosen.push_back(eligible[remaining[pick]]);
        remaining.erase(remaining.begin() + pick);
        weights.erase(weights.begin() + pick);
    }
    return chosen;
}

// =============================================================================
// Citation remapping
// =============================================================================

CitationRemap remap_citations(const std::string& text, const std::vector<int>& cited_sources,
                              const std::map<int, int>& old_to_new) {
    std::set<int> targets;
    for (int cited : cited_sources) {
        auto it = old_to_new.find(cited);
        if (it == old_to_new.end())
            throw DataError("cited source [" + std::to_string(cited) +
                            "] is absent from the citation mapping");
        if (!targets.insert(it->second).second)
            throw DataError("citation mapping is not injective over cited indices");
    }

    static const std::regex citation_re(R"(\[(\d+)\])");
    std::string out;
    out.reserve(text.size());
    auto begin = std::sregex_iterator(text.begin(), text.end(), citation_re);
    auto end = std::sregex_iterator();
    std::size_t last = 0;
    for (auto it = begin; it != end; ++it) {
        const std::smatch& m = *it;
        out.append(text, last, static_cast<std::size_t>(m.position(0)) - last);
        int k = std::stoi(m.str(1));
        auto mapped = old_to_new.find(k);
        if (mapped != old_to_new.end())
            out += "[" + std::to_string(mapped->second) + "]";
        else
            out += m.str(0);
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    out.append(text, last, std::string::npos);

    CitationRemap result;
    result.text = std::move(out);
    result.cited_sources.reserve(cited_sources.size());
    for (int cited : cited_sources) result.cited_sources.push_back(old_to_new.at(cited));
    return result;
}

std::map<int, int> gold_first_remap(int distractor_count, int position) {
    std::map<int, int> mapping;
    mapping[1] = position;
    for (int j = 1; j <= distractor_count; ++j)
        mapping[j + 1] = j < position ? j : j + 1;
    return mapping;
}

}  // namespace ragsynth::context
