#include "ragsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "ragsynth/common.hpp"
#include "ragsynth/fidelity.hpp"
#include "ragsynth/judge.hpp"
#include "ragsynth/lexicon.hpp"
#include "ragsynth/refusal.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth::pipeline {

namespace fs = std::filesystem;

// =============================================================================
// Configuration
// =============================================================================

namespace {

ojson weights_to_json(const synth::StyleWeights& w) {
    ojson style = ojson::object();
    for (const auto& [name, weight] : w.style) style[name] = weight;
    ojson formality = ojson::object();
    for (const auto& [value, weight] : w.formality) formality[synth::formality_name(value)] = weight;
    ojson persona = ojson::object();
    for (const auto& [value, weight] : w.persona) persona[synth::persona_name(value)] = weight;
    ojson difficulty = ojson::object();
    for (const auto& [value, weight] : w.difficulty)
        difficulty[synth::difficulty_name(value)] = weight;
    return ojson{{"style", style},
                 {"formality", formality},
                 {"persona", persona},
                 {"difficulty", difficulty},
                 {"target_words",
                  {{"mu", w.target_words_mu},
                   {"sigma", w.target_words_sigma},
                   {"min", w.target_words_min},
                   {"max", w.target_words_max}}}};
}

synth::StyleWeights weights_from_json(const ojson& j) {
    synth::StyleWeights w = synth::StyleWeights::defaults();
    if (j.contains("style")) {
        w.style.clear();
        for (const auto& [name, weight] : j.at("style").items())
            w.style.emplace_back(name, weight.get<double>());
    }
    if (j.contains("formality")) {
        w.formality.clear();
        for (const auto& [name, weight] : j.at("formality").items())
            w.formality.emplace_back(synth::formality_from_name(name), weight.get<double>());
    }
    if (j.contains("persona")) {
        w.persona.clear();
        for (const auto& [name, weight] : j.at("persona").items())
            w.persona.emplace_back(synth::persona_from_name(name), weight.get<double>());
    }
    if (j.contains("difficulty")) {
        w.difficulty.clear();
        for (const auto& [name, weight] : j.at("difficulty").items())
            w.difficulty.emplace_back(synth::difficulty_from_name(name), weight.get<double>());
    }
    if (j.contains("target_words")) {
        const auto& t = j.at("target_words");
        w.target_words_mu = t.value("mu", w.target_words_mu);
        w.target_words_sigma = t.value("sigma", w.target_words_sigma);
        w.target_words_min = t.value("min", w.target_words_min);
        w.target_words_max = t.value("max", w.target_words_max);
    }
    return w;
}

}  // namespace

ojson config_to_json(const PipelineConfig& c) {
    ojson mixture = ojson::array();
    for (const auto& comp : c.position.components)
        mixture.push_back(ojson{{"k_min", comp.plateau_len}, {"weight", comp.weight}});
    return ojson{
        {"seed", c.seed},
        {"paths",
         {{"input", c.input_paths},
          {"input_format", c.input_format},
          {"real_queries", c.real_queries_path},
          {"lexicon", c.lexicon_path},
          {"rag_v1_pool", c.rag_v1_pool_path},
          {"web_pool", c.web_pool_path}}},
        {"chunk",
         {{"min_tokens", c.chunk.min_tokens},
          {"max_tokens", c.chunk.max_tokens},
          {"boundary_mode",
           c.chunk.boundary_mode == ingest::BoundaryMode::semantic_first ? "semantic_first"
                                                                         : "fixed_window"},
          {"tokenizer", c.chunk.tokenizer}}},
        {"styles", weights_to_json(c.styles)},
        {"questions_per_passage", c.questions_per_passage},
        {"alternate_share", c.alternate_share},
        {"contrastive_sub_share", c.contrastive_sub_share},
        {"gen_max_retries", c.gen_max_retries},
        {"negative_share", c.negative_share},
        {"target_ratio", c.target_ratio},
        {"sweep_grid", c.sweep_grid},
        {"distractors",
         {{"min", c.distractors.min_count},
          {"max", c.distractors.max_count},
          {"top_m", c.distractors.top_m}}},
        {"position", {{"mixture", mixture}}},
        {"judge", {{"threshold", c.judge_threshold}, {"reference_mode", c.judge_reference_mode}}},
        {"manifest_strategy", c.manifest_strategy},
        {"gateway",
         {{"backend", c.gateway.backend},
          {"endpoint_url", c.gateway.endpoint_url},
          {"api_token", c.gateway.api_token},
          {"model_name", c.gateway.model_name},
          {"max_parallel", c.gateway.max_parallel},
          {"retry_max", c.gateway.retry_max},
          {"timeout_ms", c.gateway.timeout_ms},
          {"backoff_ms", c.gateway.backoff_ms},
          {"mock_script", c.gateway.mock_script},
          {"mock_strict", c.gateway.mock_strict},
          {"temperature_generate", c.gateway.temperature_generate},
          {"temperature_judge", c.gateway.temperature_judge},
          {"max_tokens", c.gateway.max_tokens}}},
    };
}

PipelineConfig config_from_json(const ojson& j) {
    PipelineConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        c.input_paths = p.value("input", c.input_paths);
        c.input_format = p.value("input_format", c.input_format);
        c.real_queries_path = p.value("real_queries", c.real_queries_path);
        c.lexicon_path = p.value("lexicon", c.lexicon_path);
        c.rag_v1_pool_path = p.value("rag_v1_pool", c.rag_v1_pool_path);
        c.web_pool_path = p.value("web_pool", c.web_pool_path);
    }
    if (j.contains("chunk")) {
        const auto& ch = j.at("chunk");
        c.chunk.min_tokens = ch.value("min_tokens", c.chunk.min_tokens);
        c.chunk.max_tokens = ch.value("max_tokens", c.chunk.max_tokens);
        std::string mode = ch.value("boundary_mode", "semantic_first");
        if (mode == "semantic_first")
            c.chunk.boundary_mode = ingest::BoundaryMode::semantic_first;
        else if (mode == "fixed_window")
            c.chunk.boundary_mode = ingest::BoundaryMode::fixed_window;
        else
            throw UsageError("unknown boundary_mode: " + mode);
        c.chunk.tokenizer = ch.value("tokenizer", c.chunk.tokenizer);
    }
    if (j.contains("styles")) c.styles = weights_from_json(j.at("styles"));
    c.questions_per_passage = j.value("questions_per_passage", c.questions_per_passage);
    c.alternate_share = j.value("alternate_share", c.alternate_share);
    c.contrastive_sub_share = j.value("contrastive_sub_share", c.contrastive_sub_share);
    c.gen_max_retries = j.value("gen_max_retries", c.gen_max_retries);
    c.negative_share = j.value("negative_share", c.negative_share);
    c.target_ratio = j.value("target_ratio", c.target_ratio);
    c.sweep_grid = j.value("sweep_grid", c.sweep_grid);
    if (j.contains("distractors")) {
        const auto& d = j.at("distractors");
        c.distractors.min_count = d.value("min", c.distractors.min_count);
        c.distractors.max_count = d.value("max", c.distractors.max_count);
        c.distractors.top_m = d.value("top_m", c.distractors.top_m);
    }
    if (j.contains("position") && j.at("position").contains("mixture")) {
        c.position.components.clear();
        for (const auto& comp : j.at("position").at("mixture"))
            c.position.components.push_back({comp.value("k_min", 1), comp.value("weight", 1.0)});
    }
    if (j.contains("judge")) {
        c.judge_threshold = j.at("judge").value("threshold", c.judge_threshold);
        c.judge_reference_mode = j.at("judge").value("reference_mode", c.judge_reference_mode);
    }
    c.manifest_strategy = j.value("manifest_strategy", c.manifest_strategy);
    if (j.contains("gateway")) {
        const auto& g = j.at("gateway");
        c.gateway.backend = g.value("backend", c.gateway.backend);
        c.gateway.endpoint_url = g.value("endpoint_url", c.gateway.endpoint_url);
        c.gateway.api_token = g.value("api_token", c.gateway.api_token);
        c.gateway.model_name = g.value("model_name", c.gateway.model_name);
        c.gateway.max_parallel = g.value("max_parallel", c.gateway.max_parallel);
        c.gateway.retry_max = g.value("retry_max", c.gateway.retry_max);
        c.gateway.timeout_ms = g.value("timeout_ms", c.gateway.timeout_ms);
        c.gateway.backoff_ms = g.value("backoff_ms", c.gateway.backoff_ms);
        c.gateway.mock_script = g.value("mock_script", c.gateway.mock_script);
        c.gateway.mock_strict = g.value("mock_strict", c.gateway.mock_strict);
        c.gateway.temperature_generate =
            g.value("temperature_generate", c.gateway.temperature_generate);
        c.gateway.temperature_judge = g.value("temperature_judge", c.gateway.temperature_judge);
        c.gateway.max_tokens = g.value("max_tokens", c.gateway.max_tokens);
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::string body = read_text_file(path);
    auto parsed = ojson::parse(body, nullptr, false);
    if (parsed.is_discarded()) throw UsageError("config file is not valid JSON: " + path.string());
    return config_from_json(parsed);
}

std::string config_hash(const PipelineConfig& config) {
    return hex64(fnv1a64(config_to_json(config).dump()));
}

// =============================================================================
// Gateway construction
// =============================================================================

const std::vector<gateway::MockRule>& default_mock_rules() {
    using gateway::RuleKind;
    static const std::vector<gateway::MockRule> rules = {
        // Comparative answer-quality judge: "<ref> <cand>" then an explanation.
        {"checking the quality of the answer",
         "{{int:7:10}} {{int:5:10}}\nThe answer is grounded in the cited source.",
         RuleKind::substring},
        // Citation-quality judge: strict JSON verdict.
        {"<rules>",
         R"({"scores": {"source_relevance": {{int:6:10}}, "answer_quality": {{int:6:10}}, )"
         R"("citation_usage": {{int:5:10}}, "information_synthesis": {{int:5:10}}, )"
         R"("faithfulness": {{int:6:10}}}, "analysis": {"summary": "grounded"}, )"
         R"("overall_rating": {{int:6:9}}})",
         RuleKind::substring},
        // Single-step baseline: question + cited answer as JSON.
        {"Generate the question-answer pair:",
         R"({"question": "what is the {{pick:fee|rate|limit}} for {{pick:savings|checking|wire transfers}}", )"
         R"("answer": "The {{pick:fee|rate|limit}} is {{int:1:50}} dollars[1]."})",
         RuleKind::substring},
        // Contrastive pair generation.
        {"Output ONLY a JSON object of the form",
         R"({"q1": "what is the {{pick:monthly fee|minimum balance|apr}}", )"
         R"("q2": "{{pick:monthly fee|minimum balance|apr}} details"})",
         RuleKind::substring},
        // Grounded answer with a gold-source hint: always cite the hinted source.
        {R"(source number (\d+))",
         "{{pick:The fee is|The minimum is|The rate is|The limit is}} "
         "{{pick:$25|$35|2.5%|$5,000|6 per month}} under the current terms[{{group:1}}].",
         RuleKind::regex},
        // Grounded answer without a hint.
        {"Context: The following numbered sources are provided.",
         "{{pick:The fee is|The minimum is|The rate is}} {{pick:$25|$35|2.5%}}[1].",
         RuleKind::substring},
        // Question generation.
        {"Your question:",
         "{{pick:what is the|how do i change the|fee for|minimum balance for|when does the}} "
         "{{pick:savings account|checking account|mortgage|credit card|wire transfer|money market}} "
         "{{pick:rate|fee|limit|schedule|policy}}",
         RuleKind::substring},
    };
    return rules;
}

gateway::Gateway make_gateway(const PipelineConfig& config) {
    const auto& g = config.gateway;
    if (g.backend == "mock") {
        std::shared_ptr<gateway::MockBackend> mock;
        if (g.mock_script.empty())
            mock = std::make_shared<gateway::MockBackend>(default_mock_rules(), config.seed,
                                                          g.mock_strict);
        else
            mock = gateway::MockBackend::from_script_file(g.mock_script, config.seed,
                                                          g.mock_strict);
        return gateway::Gateway(mock, g.max_parallel);
    }
    if (g.backend == "http") {
        gateway::HttpConfig http;
        http.endpoint_url = g.endpoint_url;
        http.api_token = g.api_token;
        http.model_name = g.model_name;
        http.retry_max = g.retry_max;
        http.timeout_ms = g.timeout_ms;
        http.backoff_ms = g.backoff_ms;
        return gateway::Gateway(std::make_shared<gateway::HttpBackend>(http), g.max_parallel);
    }
    throw UsageError("unknown gateway backend: " + g.backend);
}

// =============================================================================
// Parallel driver
// =============================================================================

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// =============================================================================
// Record serialization
// =============================================================================

ojson passage_to_json(const ingest::Passage& p) {
    return ojson{{"id", p.id},
                 {"doc_id", p.doc_id},
                 {"text", p.text},
                 {"token_count", p.token_count},
                 {"char_start", p.char_start},
                 {"char_end", p.char_end},
                 {"tail_flag", p.tail_flag}};
}

ingest::Passage passage_from_json(const ojson& j) {
    ingest::Passage p;
    p.id = j.at("id").get<std::string>();
    p.doc_id = j.value("doc_id", "");
    p.text = j.at("text").get<std::string>();
    p.token_count = j.value("token_count", std::size_t{0});
    p.char_start = j.value("char_start", std::size_t{0});
    p.char_end = j.value("char_end", std::size_t{0});
    p.tail_flag = j.value("tail_flag", false);
    return p;
}

ojson question_to_json(const QuestionRecord& rec) {
    return ojson{{"id", rec.id},
                 {"question", rec.q.text},
                 {"passage_id", rec.q.passage_id},
                 {"style",
                  {{"style", rec.q.style_spec.style},
                   {"target_words", rec.q.style_spec.target_words},
                   {"formality", synth::formality_name(rec.q.style_spec.formality)},
                   {"persona", synth::persona_name(rec.q.style_spec.persona)},
                   {"difficulty", synth::difficulty_name(rec.q.style_spec.difficulty)}}},
                 {"strategy", synth::strategy_name(rec.q.strategy)},
                 {"negative_track", rec.negative_track}};
}

QuestionRecord question_from_json(const ojson& j) {
    QuestionRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.q.text = j.at("question").get<std::string>();
    rec.q.passage_id = j.at("passage_id").get<std::string>();
    if (j.contains("style")) {
        const auto& s = j.at("style");
        rec.q.style_spec.style = s.value("style", "fragment");
        rec.q.style_spec.target_words = s.value("target_words", 8);
        rec.q.style_spec.formality = synth::formality_from_name(s.value("formality", "neutral"));
        rec.q.style_spec.persona =
            synth::persona_from_name(s.value("persona", "retail_customer"));
        rec.q.style_spec.difficulty = synth::difficulty_from_name(s.value("difficulty", "easy"));
    }
    rec.q.strategy = synth::strategy_from_name(j.value("strategy", "standard"));
    rec.negative_track = j.value("negative_track", false);
    return rec;
}

ojson answer_to_json(const AnswerRecord& rec) {
    ojson j = question_to_json(rec.question);
    j["answer"] = rec.answer.text;
    j["cited_sources"] = rec.answer.cited_sources;
    j["is_refusal"] = rec.answer.is_refusal;
    j["hint_used"] = rec.answer.hint_used;
    return j;
}

AnswerRecord answer_from_json(const ojson& j) {
    AnswerRecord rec;
    rec.question = question_from_json(j);
    rec.answer.text = j.at("answer").get<std::string>();
    rec.answer.cited_sources = j.value("cited_sources", std::vector<int>{});
    rec.answer.is_refusal = j.value("is_refusal", false);
    rec.answer.hint_used = j.value("hint_used", true);
    return rec;
}

// =============================================================================
// Stages
// =============================================================================

namespace {

int64_t to_gen_seed(uint64_t h) {
    return static_cast<int64_t>(h & 0x7fffffffffffffffull);
}

void drop(DropLog* log, const std::string& what) {
    if (log) log->push_back(what);
}

std::map<std::string, const ingest::Passage*> index_passages(
    const std::vector<ingest::Passage>& passages) {
    std::map<std::string, const ingest::Passage*> index;
    for (const auto& p : passages) index[p.id] = &p;
    return index;
}

const ingest::Passage& find_passage(const std::map<std::string, const ingest::Passage*>& index,
                                    const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("unknown passage id: " + id);
    return *it->second;
}

}  // namespace

std::vector<QuestionRecord> stage_genq(const PipelineConfig& config,
                                       const std::vector<ingest::Passage>& passages,
                                       gateway::Gateway& gw, DropLog* drop_log) {
    const int threads = std::max(1, config.gateway.max_parallel);
    const int qpp = std::max(1, config.questions_per_passage);
    const std::size_t slots = passages.size() * static_cast<std::size_t>(qpp);
    std::mt19937_64 plan_rng(derive_seed(config.seed, "strategy-plan"));
    auto plan = synth::plan_strategy_mix(static_cast<int>(slots), config.alternate_share,
                                         config.contrastive_sub_share, plan_rng);

    std::vector<std::optional<synth::CandidateQuestion>> generated(slots);
    std::vector<std::string> reasons(slots);
    parallel_for(passages.size(), threads, [&](std::size_t pi) {
        const auto& passage = passages[pi];
        std::mt19937_64 rng(derive_seed(config.seed, "genq", passage.id));
        int j = 0;
        while (j < qpp) {
            const std::size_t slot =
                pi * static_cast<std::size_t>(qpp) + static_cast<std::size_t>(j);
            synth::StyleSpec spec = synth::sample_style_spec(rng, config.styles);
            synth::GenOptions opts;
            opts.temperature = config.gateway.temperature_generate;
            opts.max_tokens = config.gateway.max_tokens;
            opts.model_name = config.gateway.model_name;
            opts.seed = to_gen_seed(
                derive_seed(config.seed, "genq-call", passage.id, static_cast<uint64_t>(j)));
            opts.max_retries = config.gen_max_retries;
            try {
                switch (plan[slot]) {
                    case synth::Strategy::standard: {
                        generated[slot] = synth::generate_question(passage, spec, gw, opts);
                        ++j;
                        break;
                    }
                    case synth::Strategy::template_slot: {
                        const auto& templates = synth::default_slot_templates();
                        std::uniform_int_distribution<std::size_t> draw(0, templates.size() - 1);
                        generated[slot] = synth::fill_template(passage, templates[draw(rng)], rng);
                        ++j;
                        break;
                    }
                    case synth::Strategy::contrastive_pair: {
                        synth::StyleSpec spec_b = synth::sample_style_spec(rng, config.styles);
                        if (spec_b.style == spec.style) {
                            auto names = synth::StyleRegistry::defaults().names();
                            for (std::size_t k = 0; k < names.size(); ++k) {
                                if (names[k] == spec.style) {
                                    spec_b.style = names[(k + 1) % names.size()];
                                    break;
                                }
                            }
                        }
                        auto [qa, qb] =
                            synth::generate_contrastive_pair(passage, spec, spec_b, gw, opts);
                        bool paired =
                            j + 1 < qpp && plan[slot + 1] == synth::Strategy::contrastive_pair;
                        generated[slot] = qa;
                        if (paired) generated[slot + 1] = qb;
                        j += paired ? 2 : 1;
                        break;
                    }
                }
            } catch (const GatewayError&) {
                throw;  // infrastructure failure: abort the stage
            } catch (const Error& e) {
                reasons[slot] = e.what();
                ++j;
            }
        }
    });

    std::vector<QuestionRecord> questions;
    questions.reserve(slots);
    for (std::size_t slot = 0; slot < slots; ++slot) {
        if (!generated[slot]) {
            if (!reasons[slot].empty())
                drop(drop_log, "question slot " + std::to_string(slot) + ": " + reasons[slot]);
            continue;
        }
        QuestionRecord rec;
        rec.q = std::move(*generated[slot]);
        rec.id = "q-" + rec.q.passage_id + "-" +
                 std::to_string(slot % static_cast<std::size_t>(qpp));
        uint64_t u = derive_seed(config.seed, "track-split", rec.id);
        rec.negative_track = (static_cast<double>(u >> 11) * 0x1.0p-53) < config.negative_share;
        questions.push_back(std::move(rec));
    }
    return questions;
}

std::vector<AnswerRecord> stage_genans(const PipelineConfig& config,
                                       const std::vector<QuestionRecord>& questions,
                                       const std::vector<ingest::Passage>& passages,
                                       gateway::Gateway& gw, DropLog* drop_log) {
    const int threads = std::max(1, config.gateway.max_parallel);
    auto index = index_passages(passages);

    std::vector<const QuestionRecord*> positives;
    for (const auto& q : questions)
        if (!q.negative_track) positives.push_back(&q);

    std::vector<std::optional<synth::GroundedAnswer>> answers(positives.size());
    std::vector<std::string> reasons(positives.size());
    parallel_for(positives.size(), threads, [&](std::size_t i) {
        const QuestionRecord& q = *positives[i];
        const ingest::Passage& gold = find_passage(index, q.q.passage_id);
        auto ctx = context::assemble_context(gold, {}, 1);
        synth::GenOptions opts;
        opts.temperature = config.gateway.temperature_generate;
        opts.max_tokens = config.gateway.max_tokens;
        opts.model_name = config.gateway.model_name;
        opts.seed = to_gen_seed(derive_seed(config.seed, "genans", q.id));
        opts.max_retries = config.gen_max_retries;
        try {
            auto answer = synth::generate_answer(q.q.text, ctx, 1, gw, opts);
            if (answer.is_refusal) {
                reasons[i] = "generator refused on a gold-grounded context";
                return;
            }
            answers[i] = std::move(answer);
        } catch (const GatewayError&) {
            throw;  // infrastructure failure: abort the stage
        } catch (const Error& e) {
            reasons[i] = e.what();
        }
    });

    std::vector<AnswerRecord> out;
    out.reserve(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
        if (!answers[i]) {
            drop(drop_log, positives[i]->id + ": " + reasons[i]);
            continue;
        }
        out.push_back({*positives[i], std::move(*answers[i])});
    }
    return out;
}

std::vector<dataset::QAExample> stage_assemble(const PipelineConfig& config,
                                               const std::vector<AnswerRecord>& answers,
                                               const std::vector<ingest::Passage>& passages,
                                               DropLog* drop_log) {
    const int threads = std::max(1, config.gateway.max_parallel);
    auto index = index_passages(passages);

    std::vector<std::optional<dataset::QAExample>> out(answers.size());
    std::vector<std::string> reasons(answers.size());
    parallel_for(answers.size(), threads, [&](std::size_t i) {
        const auto& rec = answers[i];
        const ingest::Passage& gold = find_passage(index, rec.question.q.passage_id);
        std::mt19937_64 rng(derive_seed(config.seed, "assemble", rec.question.id));
        try {
            auto distractors =
                context::select_distractors(gold, passages, config.distractors, rng);
            const int n = static_cast<int>(distractors.size()) + 1;
            int plateau = std::clamp(config.position.sample_plateau(rng), 1, n);
            int position = context::sample_gold_position(rng, n, plateau);
            auto ctx = context::assemble_context(gold, distractors, position);
            auto mapping =
                context::gold_first_remap(static_cast<int>(distractors.size()), position);
            auto remapped = synth::remap_answer(rec.answer, mapping);

            dataset::QAExample example;
            example.id = rec.question.id;
            example.question = rec.question.q.text;
            example.context = std::move(ctx);
            example.answer = remapped.text;
            example.cited_sources = remapped.cited_sources;
            example.answerable = true;
            example.stage_tag = dataset::StageTag::stage1;
            example.provenance = dataset::Provenance::sec_synth;
            dataset::validate(example);
            out[i] = std::move(example);
        } catch (const GatewayError&) {
            throw;  // infrastructure failure: abort the stage
        } catch (const Error& e) {
            reasons[i] = e.what();
        }
    });

    std::vector<dataset::QAExample> assembled;
    assembled.reserve(answers.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i]) {
            drop(drop_log, answers[i].question.id + ": " + reasons[i]);
            continue;
        }
        assembled.push_back(std::move(*out[i]));
    }
    return assembled;
}

JudgeStageResult stage_judge(const PipelineConfig& config,
                             const std::vector<dataset::QAExample>& examples,
                             gateway::Gateway& gw, DropLog* drop_log) {
    const int threads = std::max(1, config.gateway.max_parallel);
    std::vector<std::optional<judge::JudgeVerdict>> verdicts(examples.size());
    std::vector<std::string> reasons(examples.size());
    parallel_for(examples.size(), threads, [&](std::size_t i) {
        const auto& example = examples[i];
        std::string reference;
        if (config.judge_reference_mode == "self") {
            reference = example.answer;
        } else {
            // gold_passage mode: the evidence passage stands in as the reference
            // response for comparative scoring.
            const auto& src = example.context.sources;
            reference = example.context.gold_index >= 1
                            ? src[static_cast<std::size_t>(example.context.gold_index - 1)].text
                            : example.answer;
        }
        judge::JudgeOptions opts;
        opts.temperature = config.gateway.temperature_judge;
        opts.max_tokens = config.gateway.max_tokens;
        opts.model_name = config.gateway.model_name;
        opts.seed = to_gen_seed(derive_seed(config.seed, "judge", example.id));
        try {
            verdicts[i] = judge::judge_answer(example.question, reference, example.answer, gw,
                                              opts);
        } catch (const GatewayError&) {
            throw;  // infrastructure failure: abort the stage
        } catch (const Error& e) {
            reasons[i] = e.what();
        }
    });

    std::vector<judge::Judged> judged;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (!verdicts[i]) {
            drop(drop_log, examples[i].id + ": " + reasons[i]);
            continue;
        }
        judged.emplace_back(examples[i], *verdicts[i]);
    }
    auto [kept, dropped] = judge::filter_by_score(judged, config.judge_threshold);

    JudgeStageResult result;
    for (const auto& [example, verdict] : kept) {
        result.audit.push_back(ojson{{"example_id", example.id},
                                     {"verdict", judge::verdict_to_json(verdict)},
                                     {"kept", true}});
        result.kept.push_back(example);
    }
    for (const auto& [example, verdict] : dropped) {
        result.audit.push_back(ojson{{"example_id", example.id},
                                     {"verdict", judge::verdict_to_json(verdict)},
                                     {"kept", false}});
        result.dropped.push_back(example);
    }
    return result;
}

std::vector<dataset::QAExample> stage_negatives(const PipelineConfig& config,
                                                const std::vector<QuestionRecord>& questions,
                                                const std::vector<ingest::Passage>& passages,
                                                DropLog* drop_log) {
    const int threads = std::max(1, config.gateway.max_parallel);
    auto index = index_passages(passages);

    std::vector<const QuestionRecord*> track;
    for (const auto& q : questions)
        if (q.negative_track) track.push_back(&q);

    std::vector<std::optional<dataset::QAExample>> out(track.size());
    std::vector<std::string> reasons(track.size());
    parallel_for(track.size(), threads, [&](std::size_t i) {
        const QuestionRecord& q = *track[i];
        const ingest::Passage& gold = find_passage(index, q.q.passage_id);
        std::mt19937_64 rng(derive_seed(config.seed, "negatives", q.id));
        try {
            auto example =
                refusal::build_negative(q.q.text, passages, gold, config.distractors, rng);
            example.id = q.id;  // keep pipeline-wide ids stable
            out[i] = std::move(example);
        } catch (const GatewayError&) {
            throw;  // infrastructure failure: abort the stage
        } catch (const Error& e) {
            reasons[i] = e.what();
        }
    });

    std::vector<dataset::QAExample> negatives;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i]) {
            drop(drop_log, track[i]->id + ": " + reasons[i]);
            continue;
        }
        negatives.push_back(std::move(*out[i]));
    }
    return negatives;
}

// =============================================================================
// Stage manifests
// =============================================================================

namespace {

void fisher_yates(std::vector<dataset::QAExample>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> draw(0, i - 1);
        std::swap(items[i - 1], items[draw(rng)]);
    }
}

std::vector<dataset::QAExample> pool_union(const PoolMap& pools,
                                           const std::vector<dataset::Provenance>& keys) {
    std::vector<dataset::QAExample> out;
    for (auto key : keys) {
        auto it = pools.find(key);
        if (it != pools.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

dataset::DatasetManifest make_stage_manifest(std::string name, dataset::StageTag tag,
                                             std::string strategy,
                                             std::vector<dataset::QAExample> examples,
                                             uint64_t seed, bool lr_metadata) {
    std::mt19937_64 rng(derive_seed(seed, "manifest", name));
    fisher_yates(examples, rng);
    for (auto& e : examples) e.stage_tag = tag;

    dataset::DatasetManifest manifest;
    manifest.name = std::move(name);
    manifest.stage_tag = tag;
    manifest.strategy = std::move(strategy);
    manifest.seed = seed;
    manifest.examples = std::move(examples);
    dataset::recount_provenance(manifest);
    std::size_t negatives = manifest.counts_by_provenance.count("refusal_neg")
                                ? manifest.counts_by_provenance.at("refusal_neg")
                                : 0;
    manifest.target_ratio = 0.0;
    manifest.achieved_ratio =
        manifest.examples.empty()
            ? 0.0
            : static_cast<double>(negatives) / static_cast<double>(manifest.examples.size());
    manifest.metadata = lr_metadata ? dataset::stage_lr_metadata(tag) : ojson::object();
    return manifest;
}

}  // namespace

std::vector<dataset::DatasetManifest> build_stage_manifests(const PoolMap& pools,
                                                            const std::string& strategy,
                                                            uint64_t seed) {
    using dataset::Provenance;
    using dataset::StageTag;

    const std::vector<Provenance> external = {Provenance::rag_v1_like, Provenance::sec_synth};
    const std::vector<Provenance> internal = {Provenance::web_like, Provenance::refusal_neg};

    if (strategy == "external_only") {
        auto examples = pool_union(pools, external);
        if (examples.empty()) throw DataError("strategy external_only: required pool is empty");
        return {make_stage_manifest("external_only", StageTag::stage1, strategy,
                                    std::move(examples), seed, false)};
    }
    if (strategy == "internal_only") {
        auto examples = pool_union(pools, internal);
        if (examples.empty()) throw DataError("strategy internal_only: required pool is empty");
        return {make_stage_manifest("internal_only", StageTag::stage2, strategy,
                                    std::move(examples), seed, false)};
    }
    if (strategy == "combined") {
        std::vector<Provenance> all = {Provenance::rag_v1_like, Provenance::sec_synth,
                                       Provenance::web_like, Provenance::refusal_neg,
                                       Provenance::single_step};
        auto examples = pool_union(pools, all);
        if (examples.empty()) throw DataError("strategy combined: all pools are empty");
        return {make_stage_manifest("combined", StageTag::stage1, strategy, std::move(examples),
                                    seed, false)};
    }
    if (strategy == "curriculum") {
        auto stage1 = pool_union(pools, external);
        auto stage2 = pool_union(pools, internal);
        if (stage1.empty()) throw DataError("strategy curriculum: stage1 pool is empty");
        if (stage2.empty()) throw DataError("strategy curriculum: stage2 pool is empty");
        std::vector<dataset::DatasetManifest> manifests;
        manifests.push_back(make_stage_manifest("stage1", StageTag::stage1, strategy,
                                                std::move(stage1), seed, true));
        manifests.push_back(make_stage_manifest("stage2", StageTag::stage2, strategy,
                                                std::move(stage2), seed, true));
        return manifests;
    }
    throw UsageError("unknown manifest strategy: " + strategy);
}

// =============================================================================
// Full pipeline
// =============================================================================

namespace {

struct StageLogger {
    std::ostream* log;
    void line(const std::string& s) const {
        if (log) (*log) << s << '\n';
    }
};

template <typename Fn>
void run_stage(const char* name, const StageLogger& logger, Fn&& fn) {
    logger.line(std::string("[stage] ") + name);
    try {
        fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
    }
}

std::vector<std::string> load_query_corpus(const fs::path& path) {
    std::vector<std::string> out;
    if (path.extension() == ".jsonl") {
        for (const auto& rec : read_jsonl(path)) {
            if (rec.is_object() && rec.contains("question"))
                out.push_back(rec.at("question").get<std::string>());
            else if (rec.is_object() && rec.contains("text"))
                out.push_back(rec.at("text").get<std::string>());
            else if (rec.is_string())
                out.push_back(rec.get<std::string>());
        }
    } else {
        for (const auto& line : text::split_lines(read_text_file(path))) {
            std::string q = text::strip(line);
            if (!q.empty()) out.push_back(std::move(q));
        }
    }
    return out;
}

void write_records(const fs::path& path, const std::string& artifact, const std::string& hash,
                   const std::vector<ojson>& records) {
    std::ostringstream buf;
    buf << dataset::make_artifact_header(artifact, hash).dump() << '\n';
    for (const auto& r : records) buf << r.dump() << '\n';
    atomic_write_text(path, buf.str());
}

}  // namespace

std::string dry_run_plan(const PipelineConfig& config, const fs::path& out_dir) {
    std::ostringstream out;
    out << "pipeline plan (dry run, no gateway calls)\n";
    out << "  config_hash: " << config_hash(config) << '\n';
    out << "  seed: " << config.seed << '\n';
    out << "  gateway: " << config.gateway.backend
        << (config.gateway.backend == "http" ? " " + config.gateway.endpoint_url : "") << '\n';
    out << "  out: " << out_dir.string() << '\n';
    out << "  stages:\n";
    out << "    1. ingest     " << config.input_paths.size() << " input path(s), format "
        << config.input_format << '\n';
    out << "    2. chunk      [" << config.chunk.min_tokens << ", " << config.chunk.max_tokens
        << "] tokens, "
        << (config.chunk.boundary_mode == ingest::BoundaryMode::semantic_first ? "semantic_first"
                                                                               : "fixed_window")
        << '\n';
    out << "    3. genq       " << config.questions_per_passage
        << " question(s)/passage, alternate share " << config.alternate_share << '\n';
    out << "    4. genans     gold-first contexts with hint\n";
    out << "    5. assemble   " << config.distractors.min_count << "-"
        << config.distractors.max_count << " distractors, positional placement\n";
    out << "    6. judge      threshold " << config.judge_threshold << ", reference "
        << config.judge_reference_mode << '\n';
    out << "    7. negatives  share " << config.negative_share << ", target ratio "
        << config.target_ratio << '\n';
    out << "    8. manifests  strategy " << config.manifest_strategy << '\n';
    out << "    9. fidelity   "
        << (config.real_queries_path.empty() ? "skipped (no real query corpus configured)"
                                             : config.real_queries_path)
        << '\n';
    return out.str();
}

RunResult run_pipeline(const PipelineConfig& config, const fs::path& out_dir, std::ostream* log) {
    StageLogger logger{log};
    const std::string hash = config_hash(config);
    const fs::path partial = out_dir / "partial";
    fs::create_directories(partial);

    RunResult result;
    result.out_dir = out_dir;
    result.config_hash = hash;

    auto log_drops = [&](const char* stage_name, const DropLog& drops) {
        for (const auto& d : drops) logger.line(std::string("[drop] ") + stage_name + ": " + d);
    };

    atomic_write_text(partial / "config.resolved.json",
                      ojson{{"config_hash", hash}, {"config", config_to_json(config)}}.dump(2) +
                          "\n");

    gateway::Gateway gw = make_gateway(config);

    // ---- ingest ---------------------------------------------------------------
    std::vector<ingest::Document> documents;
    run_stage("ingest", logger, [&] {
        if (config.input_paths.empty()) throw UsageError("no input paths configured");
        std::vector<fs::path> paths(config.input_paths.begin(), config.input_paths.end());
        ingest::InputFormat format = config.input_format == "plain_text"
                                         ? ingest::InputFormat::plain_text
                                         : ingest::InputFormat::jsonl;
        documents = ingest::load_documents(paths, format);
        std::vector<ojson> records;
        for (const auto& d : documents)
            records.push_back(ojson{{"id", d.id},
                                    {"title", d.title},
                                    {"text", d.body},
                                    {"source_kind", ingest::source_kind_name(d.source_kind)}});
        write_records(partial / "documents.jsonl", "documents", hash, records);
    });
    result.documents = documents.size();

    // ---- chunk ----------------------------------------------------------------
    std::vector<ingest::Passage> passages;
    run_stage("chunk", logger, [&] {
        for (const auto& doc : documents) {
            auto chunks = ingest::chunk_document(doc, config.chunk);
            passages.insert(passages.end(), chunks.begin(), chunks.end());
        }
        std::vector<ojson> records;
        for (const auto& p : passages) records.push_back(passage_to_json(p));
        write_records(partial / "passages.jsonl", "passages", hash, records);
    });
    result.passages = passages.size();

    // ---- genq -----------------------------------------------------------------
    std::vector<QuestionRecord> questions;
    run_stage("genq", logger, [&] {
        DropLog drops;
        questions = stage_genq(config, passages, gw, &drops);
        log_drops("genq", drops);
        std::vector<ojson> records;
        for (const auto& q : questions) records.push_back(question_to_json(q));
        write_records(partial / "questions.jsonl", "questions", hash, records);
    });
    result.questions = questions.size();

    // ---- genans ----------------------------------------------------------------
    std::vector<AnswerRecord> answered;
    run_stage("genans", logger, [&] {
        DropLog drops;
        answered = stage_genans(config, questions, passages, gw, &drops);
        log_drops("genans", drops);
        std::vector<ojson> records;
        for (const auto& a : answered) records.push_back(answer_to_json(a));
        write_records(partial / "answers.jsonl", "answers", hash, records);
    });
    result.answered = answered.size();

    // ---- assemble ----------------------------------------------------------------
    std::vector<dataset::QAExample> assembled;
    run_stage("assemble", logger, [&] {
        DropLog drops;
        assembled = stage_assemble(config, answered, passages, &drops);
        log_drops("assemble", drops);
        dataset::write_examples(partial / "examples.jsonl", assembled, hash);
    });

    // ---- judge filter ---------------------------------------------------------
    std::vector<dataset::QAExample> kept_examples;
    run_stage("judge", logger, [&] {
        DropLog drops;
        auto judged = stage_judge(config, assembled, gw, &drops);
        log_drops("judge", drops);
        write_records(partial / "judge_audit.jsonl", "judge_audit", hash, judged.audit);
        dataset::write_examples(partial / "kept.jsonl", judged.kept, hash);
        dataset::write_examples(partial / "dropped.jsonl", judged.dropped, hash);
        kept_examples = std::move(judged.kept);
        result.dropped = judged.dropped.size();
        if (kept_examples.empty()) {
            result.warnings.push_back(
                "judge filter kept zero examples; dataset and manifests will be empty");
            logger.line("[warn] " + result.warnings.back());
        }
    });
    result.kept = kept_examples.size();

    // ---- negatives ------------------------------------------------------------
    std::vector<dataset::QAExample> negatives;
    run_stage("negatives", logger, [&] {
        DropLog drops;
        negatives = stage_negatives(config, questions, passages, &drops);
        log_drops("negatives", drops);
        dataset::write_examples(partial / "negatives.jsonl", negatives, hash);
    });
    result.negatives = negatives.size();

    // ---- ratio-controlled dataset ------------------------------------------------
    std::vector<dataset::QAExample> final_dataset;
    refusal::RatioPlan plan;
    run_stage("ratio", logger, [&] {
        std::mt19937_64 rng(derive_seed(config.seed, "ratio"));
        auto [mixed, ratio_plan] =
            refusal::enforce_ratio(kept_examples, negatives, config.target_ratio, rng);
        final_dataset = std::move(mixed);
        plan = ratio_plan;

        dataset::DatasetManifest manifest;
        manifest.name = "dataset";
        manifest.stage_tag = dataset::StageTag::stage2;
        manifest.strategy = "ratio";
        manifest.seed = derive_seed(config.seed, "ratio");
        manifest.target_ratio = plan.target_ratio;
        manifest.achieved_ratio = plan.achieved_ratio();
        manifest.examples = final_dataset;
        dataset::recount_provenance(manifest);
        dataset::write_manifest(partial / "dataset.jsonl", manifest, hash);
    });
    result.dataset_size = final_dataset.size();

    // ---- stage manifests ----------------------------------------------------------
    run_stage("manifests", logger, [&] {
        if (kept_examples.empty()) {
            logger.line("[warn] skipping stage manifests: no kept examples");
            return;
        }
        PoolMap pools;
        pools[dataset::Provenance::sec_synth] = kept_examples;
        std::vector<dataset::QAExample> selected_negatives;
        for (const auto& e : final_dataset)
            if (e.provenance == dataset::Provenance::refusal_neg) selected_negatives.push_back(e);
        pools[dataset::Provenance::refusal_neg] = std::move(selected_negatives);
        if (!config.rag_v1_pool_path.empty())
            pools[dataset::Provenance::rag_v1_like] =
                dataset::read_examples(config.rag_v1_pool_path);
        if (!config.web_pool_path.empty())
            pools[dataset::Provenance::web_like] = dataset::read_examples(config.web_pool_path);

        auto manifests = build_stage_manifests(pools, config.manifest_strategy,
                                               derive_seed(config.seed, "manifests"));
        fs::create_directories(partial / "manifests");
        for (const auto& m : manifests) {
            dataset::write_manifest(partial / "manifests" / (m.name + ".jsonl"), m, hash);
            result.manifest_names.push_back(m.name);
        }
    });

    // ---- fidelity ----------------------------------------------------------------
    run_stage("fidelity", logger, [&] {
        if (config.real_queries_path.empty()) {
            logger.line("[info] fidelity skipped: no real query corpus configured");
            return;
        }
        fidelity::QuestionCorpus gen;
        gen.label = "generated";
        for (const auto& e : kept_examples) gen.questions.push_back(e.question);
        fidelity::QuestionCorpus real;
        real.label = "real";
        real.questions = load_query_corpus(config.real_queries_path);
        if (gen.questions.empty() || real.questions.empty()) {
            result.warnings.push_back("fidelity skipped: empty corpus");
            logger.line("[warn] " + result.warnings.back());
            return;
        }
        auto lex = config.lexicon_path.empty() ? lexicon::default_financial_terms()
                                               : lexicon::load_lexicon_file(config.lexicon_path);
        auto report = fidelity::fidelity_report(gen, real, lex);
        atomic_write_text(partial / "fidelity_report.txt",
                          fidelity::render_fidelity_table(report, gen, real));
        ojson j = fidelity::fidelity_to_json(report, gen.label, real.label);
        j["config_hash"] = hash;
        atomic_write_text(partial / "fidelity_report.json", j.dump(2) + "\n");
    });

    // ---- finalize: move partial artifacts into the run root -----------------------
    std::vector<fs::path> finished;
    for (const auto& entry : fs::directory_iterator(partial)) finished.push_back(entry.path());
    for (const auto& path : finished) {
        fs::path target = out_dir / path.filename();
        fs::remove_all(target);
        fs::rename(path, target);
    }
    fs::remove(partial);

    logger.line("[done] dataset=" + std::to_string(result.dataset_size) +
                " kept=" + std::to_string(result.kept) +
                " negatives=" + std::to_string(result.negatives) + " hash=" + result.config_hash);
    return result;
}

}  // namespace ragsynth::pipeline
