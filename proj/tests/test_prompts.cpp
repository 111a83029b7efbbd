#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ragsynth/context_assembly.hpp"
#include "ragsynth/prompts.hpp"

using namespace ragsynth;

namespace {

std::string golden(const std::string& name) {
    std::ifstream in(std::filesystem::path(RAGSYNTH_GOLDEN_DIR) / name, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing golden file: " << name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kSrc1 = "Our savings account offers 2.5% APY on balances over $5,000.";
const std::string kSrc2 =
    "Withdrawals from savings accounts are limited to 6 per month before fees apply.";
const std::string kQuestion = "How can I earn the top savings rate?";
const std::string kResponse = "You can earn 2.5% APY by keeping $5,000 in savings[1].";
const std::string kReference = "Keep a balance over $5,000 in the savings account[1].";

context::NumberedContext two_source_context() {
    ingest::Passage gold{"p1", "d1", kSrc1, 11, 0, 0, false};
    ingest::Passage other{"p2", "d2", kSrc2, 13, 0, 0, false};
    return context::assemble_context(gold, {other}, 1);
}

}  // namespace

TEST_CASE("template constants match the golden template files byte-for-byte") {
    CHECK(prompts::question_system() == golden("template_qgen_system.txt"));
    CHECK(prompts::question_user_template() == golden("template_qgen_user.txt"));
    CHECK(prompts::single_step_system() == golden("template_single_step_system.txt"));
    CHECK(prompts::single_step_user_template() == golden("template_single_step_user.txt"));
    CHECK(prompts::answer_template_hint() == golden("template_answer_hint.txt"));
    CHECK(prompts::answer_template_no_hint() == golden("template_answer_no_hint.txt"));
    CHECK(prompts::inference_template() == golden("template_inference.txt"));
    CHECK(prompts::citation_judge_system() == golden("template_citation_judge_system.txt"));
    CHECK(prompts::citation_judge_user_template() == golden("template_citation_judge_user.txt"));
    CHECK(prompts::answer_judge_template() == golden("template_answer_judge.txt"));
}

TEST_CASE("context fence is exactly 21 hyphens") {
    CHECK(prompts::context_fence() == std::string(21, '-'));
}

TEST_CASE("rendered question prompt matches golden") {
    prompts::QuestionPromptFields fields;
    fields.financial_text = kSrc1;
    fields.persona = "retail customer";
    fields.style_description =
        "a terse keyword fragment typed into a search box, no question mark "
        "(easy: asks for a single explicitly stated fact)";
    fields.word_count = 6;
    fields.formality = "casual";
    fields.style_name = "fragment";
    fields.few_shot_examples =
        "- overdraft fee amount\n- min balance for free checking\n"
        "- wire transfer cutoff time\n- heloc rates today";
    CHECK(prompts::render_question_user(fields) == golden("rendered_qgen_user.txt"));
}

TEST_CASE("rendered prompt contains the passage verbatim between the --- fences") {
    prompts::QuestionPromptFields fields;
    fields.financial_text = "UNIQUE-SEGMENT-TOKEN with\nnewlines";
    fields.persona = "retail customer";
    fields.style_description = "d";
    fields.word_count = 5;
    fields.formality = "casual";
    fields.style_name = "fragment";
    fields.few_shot_examples = "- x";
    std::string rendered = prompts::render_question_user(fields);
    CHECK(rendered.find("Financial text:\n---\nUNIQUE-SEGMENT-TOKEN with\nnewlines\n---") !=
          std::string::npos);
}

TEST_CASE("rendered single-step prompt matches golden") {
    auto ctx = two_source_context();
    CHECK(prompts::render_single_step_user(ctx.numbered_entries()) ==
          golden("rendered_single_step_user.txt"));
}

TEST_CASE("rendered answer prompts (hint and no-hint) match goldens") {
    auto ctx = two_source_context();
    CHECK(prompts::render_answer_prompt(ctx.numbered_entries(), kQuestion, 1) ==
          golden("rendered_answer_hint.txt"));
    CHECK(prompts::render_answer_prompt(ctx.numbered_entries(), kQuestion, std::nullopt) ==
          golden("rendered_answer_no_hint.txt"));
}

TEST_CASE("rendered inference prompt matches golden") {
    auto ctx = two_source_context();
    CHECK(prompts::render_inference_prompt(ctx.rendered, kQuestion) ==
          golden("rendered_inference.txt"));
}

TEST_CASE("rendered judge prompts match goldens") {
    auto ctx = two_source_context();
    CHECK(prompts::render_citation_judge_user(kQuestion, kResponse, ctx.numbered_entries()) ==
          golden("rendered_citation_judge_user.txt"));
    CHECK(prompts::render_answer_judge_prompt(kQuestion, kReference, kResponse) ==
          golden("rendered_answer_judge.txt"));
}

TEST_CASE("replace_all does not rescan replacement text") {
    CHECK(prompts::replace_all("a[X]b[X]", "[X]", "[X][X]") == "a[X][X]b[X][X]");
    CHECK(prompts::replace_all("no placeholder", "[X]", "y") == "no placeholder");
}
