#include "ragsynth/qa_synth.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "ragsynth/common.hpp"
#include "ragsynth/json_util.hpp"
#include "ragsynth/prompts.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::synth {

// =============================================================================
// Enum names
// =============================================================================

const char* formality_name(Formality f) {
    switch (f) {
        case Formality::casual: return "casual";
        case Formality::neutral: return "neutral";
        case Formality::formal: return "formal";
    }
    return "neutral";
}

const char* persona_name(Persona p) {
    switch (p) {
        case Persona::retail_customer: return "retail_customer";
        case Persona::small_business_owner: return "small_business_owner";
        case Persona::financial_advisor: return "financial_advisor";
    }
    return "retail_customer";
}

std::string persona_label(Persona p) {
    std::string s = persona_name(p);
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
}

const char* difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
        case Difficulty::expert: return "expert";
    }
    return "easy";
}

Formality formality_from_name(const std::string& name) {
    if (name == "casual") return Formality::casual;
    if (name == "neutral") return Formality::neutral;
    if (name == "formal") return Formality::formal;
    throw DataError("unknown formality: " + name);
}

Persona persona_from_name(const std::string& name) {
    if (name == "retail_customer") return Persona::retail_customer;
    if (name == "small_business_owner") return Persona::small_business_owner;
    if (name == "financial_advisor") return Persona::financial_advisor;
    throw DataError("unknown persona: " + name);
}

Difficulty difficulty_from_name(const std::string& name) {
    if (name == "easy") return Difficulty::easy;
    if (name == "medium") return Difficulty::medium;
    if (name == "hard") return Difficulty::hard;
    if (name == "expert") return Difficulty::expert;
    throw DataError("unknown difficulty: " + name);
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::standard: return "standard";
        case Strategy::contrastive_pair: return "contrastive_pair";
        case Strategy::template_slot: return "template_slot";
    }
    return "standard";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "standard") return Strategy::standard;
    if (name == "contrastive_pair") return Strategy::contrastive_pair;
    if (name == "template_slot") return Strategy::template_slot;
    throw DataError("unknown strategy: " + name);
}

// =============================================================================
// Style registry
// =============================================================================

const StyleRegistry& StyleRegistry::defaults() {
    static const StyleRegistry registry = [] {
        StyleRegistry r;
        r.register_style(
            {"fragment",
             "a terse keyword fragment typed into a search box, no question mark",
             {"overdraft fee amount", "min balance for free checking", "wire transfer cutoff time",
              "heloc rates today"}});
        r.register_style(
            {"how_do_i",
             "a how-do-I question asking for the steps to get something done",
             {"How do I set up direct deposit?", "how do i dispute a charge on my card",
              "How do I order new checks online?"}});
        r.register_style(
            {"what_is",
             "a what-is question asking for a definition or an explanation",
             {"What is an adjustable-rate mortgage?", "what is the penalty for early CD withdrawal",
              "What is a routing number?"}});
        return r;
    }();
    return registry;
}

void StyleRegistry::register_style(StyleInfo info) {
    for (auto& existing : styles_) {
        if (existing.name == info.name) {
            existing = std::move(info);
            return;
        }
    }
    styles_.push_back(std::move(info));
}

const StyleInfo& StyleRegistry::get(const std::string& name) const {
    for (const auto& s : styles_)
        if (s.name == name) return s;
    throw DataError("style not registered: " + name);
}

bool StyleRegistry::has(const std::string& name) const {
    for (const auto& s : styles_)
        if (s.name == name) return true;
    return false;
}

std::vector<std::string> StyleRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(styles_.size());
    for (const auto& s : styles_) out.push_back(s.name);
    return out;
}

std::string style_description(const StyleInfo& info, Difficulty difficulty) {
    std::string depth;
    switch (difficulty) {
        case Difficulty::easy: depth = "easy: asks for a single explicitly stated fact"; break;
        case Difficulty::medium: depth = "medium: needs light synthesis of nearby facts"; break;
        case Difficulty::hard: depth = "hard: needs reasoning across several sentences"; break;
        case Difficulty::expert:
            depth = "expert: needs implicit inference or domain knowledge";
            break;
    }
    return info.description + " (" + depth + ")";
}

// =============================================================================
// Style sampling
// =============================================================================

StyleWeights StyleWeights::defaults() {
    StyleWeights w;
    w.style = {{"fragment", 0.40}, {"how_do_i", 0.30}, {"what_is", 0.30}};
    w.formality = {{Formality::casual, 0.40},
                   {Formality::neutral, 0.40},
                   {Formality::formal, 0.20}};
    w.persona = {{Persona::retail_customer, 0.60},
                 {Persona::small_business_owner, 0.25},
                 {Persona::financial_advisor, 0.15}};
    // Easy and medium carry the highest sampling weight.
    w.difficulty = {{Difficulty::easy, 0.35},
                    {Difficulty::medium, 0.35},
                    {Difficulty::hard, 0.20},
                    {Difficulty::expert, 0.10}};
    return w;
}

namespace {

template <typename T>
const T& draw_categorical(std::mt19937_64& rng, const std::vector<std::pair<T, double>>& weights,
                          const char* what) {
    if (weights.empty()) throw UsageError(std::string(what) + " weights are empty");
    double total = 0.0;
    for (const auto& [value, w] : weights) {
        if (w < 0) throw UsageError(std::string(what) + " weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw UsageError(std::string(what) + " weights must sum to 1 (got " +
                         std::to_string(total) + ")");
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    double u = draw(rng);
    double acc = 0.0;
    for (const auto& [value, w] : weights) {
        acc += w;
        if (u < acc) return value;
    }
    return weights.back().first;
}

}  // namespace

StyleSpec sample_style_spec(std::mt19937_64& rng, const StyleWeights& weights) {
    StyleSpec spec;
    spec.style = draw_categorical(rng, weights.style, "style");
    spec.formality = draw_categorical(rng, weights.formality, "formality");
    spec.persona = draw_categorical(rng, weights.persona, "persona");
    spec.difficulty = draw_categorical(rng, weights.difficulty, "difficulty");
    std::lognormal_distribution<double> length(weights.target_words_mu, weights.target_words_sigma);
    long words = std::lround(length(rng));
    spec.target_words = static_cast<int>(
        std::clamp(words, static_cast<long>(weights.target_words_min),
                   static_cast<long>(weights.target_words_max)));
    return spec;
}

// =============================================================================
// Question generation
// =============================================================================

std::string cleanup_question(const std::string& raw) {
    // Collapse newlines to single spaces.
    std::string s;
    s.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (c == '\n' || c == '\r') {
            pending_space = true;
            continue;
        }
        if (pending_space && !s.empty()) s += ' ';
        pending_space = false;
        s += c;
    }
    s = text::strip(s);

    // Leading enumeration: "1." / "2)" / "-" / "*" / "Q:".
    static const std::regex enumeration_re(R"(^(\d+[.)]\s*|[-*]\s+|[Qq](uestion)?\s*\d*\s*:\s*))");
    std::smatch m;
    if (std::regex_search(s, m, enumeration_re)) s = s.substr(m.length(0));

    // Surrounding quote pairs (ASCII and curly).
    auto strip_pair = [&](std::string_view open, std::string_view close) {
        if (s.size() >= open.size() + close.size() && s.rfind(open, 0) == 0 &&
            s.compare(s.size() - close.size(), close.size(), close) == 0) {
            s = s.substr(open.size(), s.size() - open.size() - close.size());
            return true;
        }
        return false;
    };
    bool stripped = true;
    while (stripped) {
        stripped = strip_pair("\"", "\"") || strip_pair("'", "'") ||
                   strip_pair("“", "”") || strip_pair("‘", "’");
        if (stripped) s = text::strip(s);
    }
    return text::strip(s);
}

namespace {

gateway::CompletionRequest make_request(std::string system, std::string user,
                                        const GenOptions& options, int attempt) {
    gateway::CompletionRequest req;
    req.system_prompt = std::move(system);
    req.user_prompt = std::move(user);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.model_name = options.model_name;
    req.seed = options.seed.value_or(0) + attempt;
    return req;
}

std::string render_question_prompt(const std::string& segment, const StyleSpec& spec,
                                   const StyleRegistry& registry) {
    const StyleInfo& info = registry.get(spec.style);
    std::string examples;
    for (const auto& ex : info.few_shot) {
        if (!examples.empty()) examples += '\n';
        examples += "- " + ex;
    }
    prompts::QuestionPromptFields fields;
    fields.financial_text = segment;
    fields.persona = persona_label(spec.persona);
    fields.style_description = style_description(info, spec.difficulty);
    fields.word_count = spec.target_words;
    fields.formality = formality_name(spec.formality);
    fields.style_name = info.name;
    fields.few_shot_examples = examples;
    return prompts::render_question_user(fields);
}

CandidateQuestion generate_from_segment(const std::string& segment, const std::string& passage_id,
                                        const StyleSpec& spec, gateway::Gateway& gw,
                                        const GenOptions& options, const StyleRegistry& registry) {
    if (segment.empty()) throw DataError("question generation requires non-empty text");
    std::string user = render_question_prompt(segment, spec, registry);

    std::string last_reason;
    std::string raw;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        auto completion = gw.complete(make_request(prompts::question_system(), user, options,
                                                   attempt));
        raw = completion.text;
        std::string cleaned = cleanup_question(raw);
        if (cleaned.empty()) {
            last_reason = "empty completion after cleanup";
            continue;
        }
        if (text::whitespace_token_count(cleaned) >
            5 * static_cast<std::size_t>(std::max(1, spec.target_words))) {
            last_reason = "completion exceeds 5x target length";
            continue;
        }
        CandidateQuestion q;
        q.text = std::move(cleaned);
        q.passage_id = passage_id;
        q.style_spec = spec;
        q.strategy = Strategy::standard;
        q.raw_completion = std::move(raw);
        return q;
    }
    throw GenerationRejected("question generation rejected after " +
                             std::to_string(options.max_retries + 1) + " attempts (" +
                             last_reason + ") for passage " + passage_id);
}

}  // namespace

CandidateQuestion generate_question(const ingest::Passage& passage, const StyleSpec& spec,
                                    gateway::Gateway& gw, const GenOptions& options,
                                    const StyleRegistry& registry) {
    return generate_from_segment(passage.text, passage.id, spec, gw, options, registry);
}

CandidateQuestion rephrase_question(const std::string& question, const StyleSpec& spec,
                                    gateway::Gateway& gw, const GenOptions& options,
                                    const StyleRegistry& registry) {
    return generate_from_segment(question, "", spec, gw, options, registry);
}

std::pair<CandidateQuestion, CandidateQuestion> generate_contrastive_pair(
    const ingest::Passage& passage, const StyleSpec& spec_a, const StyleSpec& spec_b,
    gateway::Gateway& gw, const GenOptions& options, const StyleRegistry& registry) {
    if (spec_a.style == spec_b.style)
        throw UsageError("contrastive pair requires two different styles, got: " + spec_a.style);

    const StyleInfo& info_a = registry.get(spec_a.style);
    const StyleInfo& info_b = registry.get(spec_b.style);
    std::string user = "Financial text:\n---\n" + passage.text + "\n---\n\n";
    user += "Generate TWO different questions a " + persona_label(spec_a.persona) +
            " would ask about the information above, in two different styles.\n\n";
    user += "Question 1 style: " + style_description(info_a, spec_a.difficulty) + "\n";
    user += "Question 2 style: " + style_description(info_b, spec_b.difficulty) + "\n\n";
    user += "Output ONLY a JSON object of the form {\"q1\": \"...\", \"q2\": \"...\"}.";

    auto completion = gw.complete(make_request(prompts::question_system(), user, options, 0));
    ojson payload = parse_lenient_json(completion.text);  // throws with raw text on failure
    if (!payload.contains("q1") || !payload.contains("q2"))
        throw DataError("contrastive payload has fewer than two questions: " + completion.text);

    auto build = [&](const std::string& key, const StyleSpec& spec) {
        CandidateQuestion q;
        q.text = cleanup_question(payload.at(key).get<std::string>());
        if (q.text.empty()) throw DataError("contrastive question is empty: " + completion.text);
        q.passage_id = passage.id;
        q.style_spec = spec;
        q.strategy = Strategy::contrastive_pair;
        q.raw_completion = completion.text;
        return q;
    };
    return {build("q1", spec_a), build("q2", spec_b)};
}

// =============================================================================
// Template slot-filling
// =============================================================================

const std::vector<SlotTemplate>& default_slot_templates() {
    static const std::vector<SlotTemplate> templates = {
        {"what is {TERM}"},
        {"{TERM} requirements"},
        {"how does {TERM} work"},
        {"is {NUMBER} the current rate"},
    };
    return templates;
}

namespace {

std::vector<std::string> term_candidates(const std::string& body) {
    std::vector<std::string> out;
    static const std::regex acronym_re(R"(\b[A-Z][A-Z0-9]{1,5}\b)");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), acronym_re);
         it != std::sregex_iterator(); ++it)
        out.push_back(it->str());
    static const std::regex quoted_re("\"([^\"\n]{2,40})\"");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), quoted_re);
         it != std::sregex_iterator(); ++it)
        out.push_back((*it)[1].str());
    return out;
}

std::vector<std::string> number_candidates(const std::string& body) {
    std::vector<std::string> out;
    static const std::regex number_re(R"(\$?\d[\d,]*(\.\d+)?%?)");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), number_re);
         it != std::sregex_iterator(); ++it)
        out.push_back(it->str());
    return out;
}

}  // namespace

CandidateQuestion fill_template(const ingest::Passage& passage, const SlotTemplate& tmpl,
                                std::mt19937_64& rng) {
    static const std::regex slot_re(R"(\{(TERM|NUMBER)\})");
    if (!std::regex_search(tmpl.text, slot_re))
        throw UsageError("slot template has no slots: " + tmpl.text);

    std::string filled;
    std::size_t last = 0;
    auto begin = std::sregex_iterator(tmpl.text.begin(), tmpl.text.end(), slot_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        filled.append(tmpl.text, last, static_cast<std::size_t>(m.position(0)) - last);
        auto candidates =
            m.str(1) == "TERM" ? term_candidates(passage.text) : number_candidates(passage.text);
        if (candidates.empty())
            throw DataError("no fillable span for {" + m.str(1) + "} in passage " + passage.id);
        std::uniform_int_distribution<std::size_t> draw(0, candidates.size() - 1);
        filled += candidates[draw(rng)];
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    filled.append(tmpl.text, last, std::string::npos);

    CandidateQuestion q;
    q.text = cleanup_question(filled);
    q.passage_id = passage.id;
    q.style_spec.style = "fragment";
    q.strategy = Strategy::template_slot;
    q.raw_completion = "";
    return q;
}

// =============================================================================
// Strategy planning
// =============================================================================

std::vector<Strategy> plan_strategy_mix(int n, double alternate_share,
                                        double contrastive_sub_share, std::mt19937_64& rng) {
    if (n < 0) throw UsageError("plan size must be non-negative");
    if (alternate_share < 0.0 || alternate_share > 1.0)
        throw UsageError("alternate share must lie in [0, 1]");
    const long alternates = std::llround(alternate_share * n);
    const long contrastive = std::llround(static_cast<double>(alternates) * contrastive_sub_share);
    std::vector<Strategy> plan;
    plan.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < contrastive; ++i) plan.push_back(Strategy::contrastive_pair);
    for (long i = contrastive; i < alternates; ++i) plan.push_back(Strategy::template_slot);
    while (plan.size() < static_cast<std::size_t>(n)) plan.push_back(Strategy::standard);

    // Fisher-Yates; stable for a fixed seed across platforms.
    for (std::size_t i = plan.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> draw(0, i - 1);
        std::swap(plan[i - 1], plan[draw(rng)]);
    }
    return plan;
}

// =============================================================================
// Grounded answers
// =============================================================================

namespace {

std::vector<int> extract_citation_tokens(const std::string& text) {
    static const std::regex citation_re(R"(\[(\d+)\])");
    std::vector<int> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), citation_re);
         it != std::sregex_iterator(); ++it) {
        int k = std::stoi(it->str(1));
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

bool begins_with_refusal(const std::string& s) {
    std::string norm = text::normalize_for_refusal(s);
    return norm.rfind("i don't know", 0) == 0 || norm.rfind("i do not know", 0) == 0;
}

}  // namespace

GroundedAnswer generate_answer(const std::string& question, const context::NumberedContext& ctx,
                               std::optional<int> hint, gateway::Gateway& gw,
                               const GenOptions& options) {
    if (ctx.sources.empty()) throw DataError("answer generation requires a non-empty context");
    if (hint && (*hint < 1 || *hint > static_cast<int>(ctx.sources.size())))
        throw UsageError("hint " + std::to_string(*hint) + " out of range [1, " +
                         std::to_string(ctx.sources.size()) + "]");

    std::string user = prompts::render_answer_prompt(ctx.numbered_entries(), question, hint);
    std::string last_reason;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        auto completion = gw.complete(make_request("", user, options, attempt));
        std::string cleaned = text::strip(completion.text);

        GroundedAnswer answer;
        answer.text = cleaned;
        answer.hint_used = hint.has_value();
        if (begins_with_refusal(cleaned)) {
            answer.is_refusal = true;
            return answer;
        }
        answer.cited_sources = extract_citation_tokens(cleaned);
        if (answer.cited_sources.empty()) {
            last_reason = "non-refusal answer contains zero citations";
            continue;
        }
        bool out_of_range = false;
        for (int k : answer.cited_sources)
            if (k < 1 || k > static_cast<int>(ctx.sources.size())) out_of_range = true;
        if (out_of_range) {
            last_reason = "citation index out of range";
            continue;
        }
        return answer;
    }
    throw GenerationRejected("answer generation rejected after " +
                             std::to_string(options.max_retries + 1) + " attempts (" + last_reason +
                             ")");
}

GroundedAnswer remap_answer(const GroundedAnswer& answer, const std::map<int, int>& old_to_new) {
    auto remapped = context::remap_citations(answer.text, answer.cited_sources, old_to_new);
    GroundedAnswer out = answer;
    out.text = std::move(remapped.text);
    out.cited_sources = std::move(remapped.cited_sources);
    return out;
}

// =============================================================================
// Single-step baseline
// =============================================================================

BaselinePair single_step_baseline(const context::NumberedContext& ctx, gateway::Gateway& gw,
                                  const GenOptions& options) {
    if (ctx.sources.empty()) throw DataError("single-step baseline requires a non-empty context");
    std::string user = prompts::render_single_step_user(ctx.numbered_entries());
    auto completion = gw.complete(make_request(prompts::single_step_system(), user, options, 0));

    BaselinePair pair;
    pair.raw_completion = completion.text;
    std::string cleaned = text::strip(completion.text);
    if (begins_with_refusal(cleaned)) {
        pair.unanswerable = true;
        pair.answer = kRefusalPhrase;
        return pair;
    }
    ojson payload = parse_lenient_json(cleaned);
    if (!payload.contains("question") || !payload.contains("answer"))
        throw DataError("single-step payload missing question/answer keys: " + completion.text);
    pair.question = cleanup_question(payload.at("question").get<std::string>());
    pair.answer = text::strip(payload.at("answer").get<std::string>());
    pair.cited_sources = extract_citation_tokens(pair.answer);
    return pair;
}

}  // namespace ragsynth::synth
