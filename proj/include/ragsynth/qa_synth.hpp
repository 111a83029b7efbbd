/// @file qa_synth.hpp
/// @brief Difficulty-conditioned question generation, style-conditioned
///        rephrasing, hint-conditioned grounded answers, and the single-step
///        ablation baseline.
#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ragsynth/context_assembly.hpp"
#include "ragsynth/gateway.hpp"
#include "ragsynth/ingest.hpp"

namespace ragsynth::synth {

enum class Formality { casual, neutral, formal };
enum class Persona { retail_customer, small_business_owner, financial_advisor };
enum class Difficulty { easy, medium, hard, expert };

const char* formality_name(Formality f);
const char* persona_name(Persona p);       // identifier form (snake_case)
std::string persona_label(Persona p);      // prompt form ("retail customer")
const char* difficulty_name(Difficulty d);
Formality formality_from_name(const std::string& name);
Persona persona_from_name(const std::string& name);
Difficulty difficulty_from_name(const std::string& name);

struct StyleSpec {
    std::string style = "fragment";
    int target_words = 8;
    Formality formality = Formality::neutral;
    Persona persona = Persona::retail_customer;
    Difficulty difficulty = Difficulty::easy;
};

struct StyleInfo {
    std::string name;
    std::string description;
    std::vector<std::string> few_shot;  // original example bank, not from any published source
};

class StyleRegistry {
public:
    static const StyleRegistry& defaults();  // fragment, how_do_i, what_is

    void register_style(StyleInfo info);
    const StyleInfo& get(const std::string& name) const;
    bool has(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::vector<StyleInfo> styles_;
};

// Conditioning text for the [STYLE_DESCRIPTION] slot: style phrasing plus the
// required reasoning depth for the difficulty level.
std::string style_description(const StyleInfo& info, Difficulty difficulty);

// ---------------------------------------------------------------------------
// Style sampling
// ---------------------------------------------------------------------------

struct StyleWeights {
    std::vector<std::pair<std::string, double>> style;
    std::vector<std::pair<Formality, double>> formality;
    std::vector<std::pair<Persona, double>> persona;
    std::vector<std::pair<Difficulty, double>> difficulty;
    // Target length ~ round(LogNormal(mu, sigma)), clamped.
    double target_words_mu = 2.1;
    double target_words_sigma = 0.55;
    int target_words_min = 1;
    int target_words_max = 60;

    static StyleWeights defaults();
};

// Draw order is fixed (style, formality, persona, difficulty, length) so a
// seeded stream reproduces the same specs.
StyleSpec sample_style_spec(std::mt19937_64& rng, const StyleWeights& weights);

// ---------------------------------------------------------------------------
// Question generation
// ---------------------------------------------------------------------------

enum class Strategy { standard, contrastive_pair, template_slot };
const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct CandidateQuestion {
    std::string text;  // single line after cleanup
    std::string passage_id;
    StyleSpec style_spec;
    Strategy strategy = Strategy::standard;
    std::string raw_completion;
};

struct GroundedAnswer {
    std::string text;
    std::vector<int> cited_sources;
    bool is_refusal = false;
    bool hint_used = false;
};

struct GenOptions {
    double temperature = 0.7;
    int max_tokens = 256;
    std::string model_name;
    std::optional<int64_t> seed;
    int max_retries = 2;  // reseeded retries before a rejection becomes fatal
};

// Strips surrounding quotes, leading enumeration, trailing whitespace;
// collapses internal newlines to spaces.
std::string cleanup_question(const std::string& raw);

CandidateQuestion generate_question(const ingest::Passage& passage, const StyleSpec& spec,
                                    gateway::Gateway& gw, const GenOptions& options = {},
                                    const StyleRegistry& registry = StyleRegistry::defaults());

// Optional explicit rephrase pass: reconditions an existing question on a new
// StyleSpec through the same question template.
CandidateQuestion rephrase_question(const std::string& question, const StyleSpec& spec,
                                    gateway::Gateway& gw, const GenOptions& options = {},
                                    const StyleRegistry& registry = StyleRegistry::defaults());

// One call producing two style-tagged questions, returned as JSON {"q1","q2"}.
std::pair<CandidateQuestion, CandidateQuestion> generate_contrastive_pair(
    const ingest::Passage& passage, const StyleSpec& spec_a, const StyleSpec& spec_b,
    gateway::Gateway& gw, const GenOptions& options = {},
    const StyleRegistry& registry = StyleRegistry::defaults());

// ---------------------------------------------------------------------------
// Template slot-filling (local, span-extractive)
// ---------------------------------------------------------------------------

struct SlotTemplate {
    std::string text;  // slots: {TERM}, {NUMBER}
};

const std::vector<SlotTemplate>& default_slot_templates();

CandidateQuestion fill_template(const ingest::Passage& passage, const SlotTemplate& tmpl,
                                std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Strategy planning
// ---------------------------------------------------------------------------

// Exactly round(alternate_share * n) assignments are non-standard, split
// between the two alternates by contrastive_sub_share, order shuffled.
std::vector<Strategy> plan_strategy_mix(int n, double alternate_share,
                                        double contrastive_sub_share, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Grounded answers
// ---------------------------------------------------------------------------

// Canonical refusal phrase for generated data (ASCII apostrophe).
inline constexpr const char* kRefusalPhrase = "I don't know.";

// Renders the numbered-context answer prompt (hint line omitted when hint is
// absent), parses "[k]" citations, and classifies refusals. Non-refusal
// answers with zero citations are retried with a reseeded request, then fail.
GroundedAnswer generate_answer(const std::string& question, const context::NumberedContext& ctx,
                               std::optional<int> hint, gateway::Gateway& gw,
                               const GenOptions& options = {});

// Applies a citation remap to an answer (used after distractor interleaving).
GroundedAnswer remap_answer(const GroundedAnswer& answer, const std::map<int, int>& old_to_new);

// ---------------------------------------------------------------------------
// Single-step baseline
// ---------------------------------------------------------------------------

struct BaselinePair {
    std::string question;
    std::string answer;
    std::vector<int> cited_sources;
    bool unanswerable = false;
    std::string raw_completion;
};

BaselinePair single_step_baseline(const context::NumberedContext& ctx, gateway::Gateway& gw,
                                  const GenOptions& options = {});

}  // namespace ragsynth::synth
