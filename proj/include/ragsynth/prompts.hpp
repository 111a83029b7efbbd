/// @file prompts.hpp
/// @brief Prompt templates and their renderers. Placeholder substitution is the
///        only mutation applied; template text is never edited at render time.
#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ragsynth::prompts {

// Question generation (system + user with style/length/formality conditioning).
const std::string& question_system();
const std::string& question_user_template();

// Single-step baseline: question and cited answer in one call.
const std::string& single_step_system();
const std::string& single_step_user_template();

// Grounded answer generation over a numbered context, with and without the
// gold-source hint line.
const std::string& answer_template_hint();
const std::string& answer_template_no_hint();

// Inference-time prompt (chat-token wrapped).
const std::string& inference_template();

// Citation-quality judge (system + user, JSON verdict).
const std::string& citation_judge_system();
const std::string& citation_judge_user_template();

// Comparative answer-quality judge (reference vs. candidate, "score score" line).
const std::string& answer_judge_template();

// The 21-hyphen fence used by numbered-context blocks.
const std::string& context_fence();

// Replaces every occurrence; replacement text is emitted verbatim (no rescan).
std::string replace_all(std::string text, std::string_view placeholder, std::string_view value);

struct QuestionPromptFields {
    std::string financial_text;
    std::string persona;
    std::string style_description;
    int word_count = 8;
    std::string formality;
    std::string style_name;
    std::string few_shot_examples;
};

std::string render_question_user(const QuestionPromptFields& fields);
std::string render_single_step_user(const std::string& numbered_sources);
std::string render_answer_prompt(const std::string& numbered_sources, const std::string& question,
                                 std::optional<int> hint);
std::string render_inference_prompt(const std::string& rendered_context,
                                    const std::string& question);
std::string render_citation_judge_user(const std::string& question, const std::string& response,
                                       const std::string& sources);
std::string render_answer_judge_prompt(const std::string& question, const std::string& reference,
                                       const std::string& candidate);

}  // namespace ragsynth::prompts
