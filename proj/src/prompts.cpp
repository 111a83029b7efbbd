#include "ragsynth/prompts.hpp"

#include "ragsynth/common.hpp"

namespace ragsynth::prompts {

namespace {

const std::string kQuestionSystem = R"tmpl(You are generating realistic financial customer
questions. Customers ask questions to a financial
assistant chatbot. Your questions must:
- Sound like a real customer typed them into a chat
  or search box
- Be answerable from the provided financial text
- Match the specified style and constraints EXACTLY

CRITICAL: Output ONLY the question text.
No explanations, no numbering, no quotes.)tmpl";

const std::string kQuestionUser = R"tmpl(Financial text:
---
[FINANCIAL TEXT SEGMENT]
---

Generate ONE question a [PERSONA] would ask about
the information above.

CONSTRAINTS:
- Question style: [STYLE_DESCRIPTION]
- Target length: approximately [WORD_COUNT] words
- Formality: [FORMALITY]

STYLE EXAMPLES for "[STYLE]":
[FEW-SHOT EXAMPLES]

Your question:)tmpl";

const std::string kSingleStepSystem = R"tmpl(You are an expert financial Q&A generator.
Your task is to:
1. Read the numbered sources about financial topics
2. Generate a natural, standalone question based on
   one of the sources
3. Provide a well-cited answer using the source
   information

Important:
- The question should NOT refer to "the text",
  "the passage", or "the document"
- The question should be specific and answerable
  from the provided sources
- Include citations [1], [2], etc. when referencing
  source content
- If the sources don't contain enough information,
  respond with the unknown phrase)tmpl";

const std::string kSingleStepUser = R"tmpl(Given the following financial text sources,
generate a question-answer pair.

**Context Sources:**
[NUMBERED SOURCES]

**Instructions:**
1. Choose ONE source that contains interesting or
   important financial information
2. Generate a natural question about that source's
   content
3. Provide a concise answer citing the relevant
   sources with [N] notation
4. If sources don't support a good question,
   respond with: "I don't know."

**Output Format (JSON):**
{
    "question": "Your generated question here",
    "answer": "Your answer with [1], [2] citations"
}

Generate the question-answer pair:)tmpl";

const std::string kAnswerHint = R"tmpl(You are a helpful assistant that provides answers to
questions based on the provided sources. You will be
given a set of sources and a question. Your task is
to generate an answer that accurately reflects the
information in the sources, while also including
citations for any specific details referenced.

Example:
Context: The following numbered sources are provided.
---------------------
Source [1]: Our savings account offers 2.5
balances over $5,000.
Source [2]: Withdrawals from savings accounts are
limited to 6 per month before fees apply.
---------------------

Question: How can I earn 2.5
Answer: You can earn 2.5
balance of over $5,000 in your savings account[1],
but remember that withdrawals are limited to 6 per
month before fees apply[2].

Instructions:
1. Answer the Question using only the information
   from the provided sources.
2. Include source citations using their
   corresponding numbers (e.g., [1]).
3. Every answer must contain at least one citation.
4. Only cite a source if you directly reference it.
5. Keep the answer concise and focused.
6. Use bulleted lists for clarity if multiple points
   are made.
7. If none of the sources are relevant, respond with
   "I don't know." and stop.

Context: The following numbered sources are provided.
---------------------
{{context|numbered}}
---------------------
Hint: The correct answer should be found in the
source number {{hint}}.

Question: {{question}}
Answer:)tmpl";

const std::string kAnswerNoHint = R"tmpl(You are a helpful assistant that provides answers to
questions based on the provided sources. You will be
given a set of sources and a question. Your task is
to generate an answer that accurately reflects the
information in the sources, while also including
citations for any specific details referenced.

Example:
Context: The following numbered sources are provided.
---------------------
Source [1]: Our savings account offers 2.5
balances over $5,000.
Source [2]: Withdrawals from savings accounts are
limited to 6 per month before fees apply.
---------------------

Question: How can I earn 2.5
Answer: You can earn 2.5
balance of over $5,000 in your savings account[1],
but remember that withdrawals are limited to 6 per
month before fees apply[2].

Instructions:
1. Answer the Question using only the information
   from the provided sources.
2. Include source citations using their
   corresponding numbers (e.g., [1]).
3. Every answer must contain at least one citation.
4. Only cite a source if you directly reference it.
5. Keep the answer concise and focused.
6. Use bulleted lists for clarity if multiple points
   are made.
7. If none of the sources are relevant, respond with
   "I don't know." and stop.

Context: The following numbered sources are provided.
---------------------
{{context|numbered}}
---------------------

Question: {{question}}
Answer:)tmpl";

const std::string kInference = R"tmpl(<start_of_turn>user
**Context:**
---------------------

Source [1]: ...
Source [2]: ...
...

---------------------

**Instructions:**
- Provide an answer based solely on the provided
  sources.
- Use only the provided context to construct your
  answer.
- Reference sources only when their information is
  explicitly used in your answer; include the
  corresponding source number as a citation
  (e.g., [1]).
- Every answer must include at least one source
  citation.
- If none of the provided sources are relevant,
  simply respond with 'I don't know.' and stop.

**Question:**

[QUESTION]

**Answer:**<end_of_turn>
<start_of_turn>model)tmpl";

const std::string kCitationJudgeSystem = R"tmpl(You are an expert evaluator of Citations in RAG system responses. Return ONLY valid JSON that strictly follows the requested format.)tmpl";

const std::string kCitationJudgeUser = R"tmpl(<rules>
- Evaluate the response solely based on the
  provided sources.
- Focus on answer quality and the effective use
  of citations.
</rules>
<format>
Return ONLY a JSON object that strictly adheres
to the schema below.
</format>
<structure>
---
QUESTION:
{question}

SYSTEM RESPONSE:
{response}

AVAILABLE SOURCES:
{sources}

1. Provide a brief evaluation summary.
2. Score the response (0-10) for:
- Source Relevance: How well the sources support
  the answer.
- Answer Quality: Clarity, correctness, and
  conciseness.
- Citation Usage: Appropriateness and accuracy of
  citations.
- Information Synthesis: How well the information
  is integrated.
- Faithfulness: Accuracy relative to the provided
  sources.
3. List key strengths, weaknesses, and improvement
   suggestions.
4. Provide an overall rating (0-10).
</structure>
Return ONLY a JSON object:
{ "scores": {...}, "analysis": {...},
  "overall_rating": <0-10> })tmpl";

const std::string kAnswerJudge = R"tmpl(You are a helpful and precise assistant for
checking the quality of the answer.

[Question]
{question}

[The Start of Assistant 1's Answer]
{reference}
[The End of Assistant 1's Answer]

[The Start of Assistant 2's Answer]
{single answer}
[The End of Assistant 2's Answer]

[System]
We would like to request your feedback on the performance of two AI assistants in response to theuser question displayed above. Please rate the helpfulness, relevance, accuracy, level of details of their responses. Each assistantreceives an overall score on a scale of 1 to 10, where a higher score indicates better overallperformance.Please first output a single line containing only two values indicating the scores for Assistant 1 and2, respectively. The two scores are separated by a space. In the subsequent line, please provide acomprehensive explanation of your evaluation, avoiding any potential bias and ensuring that theorder in which the responses were presented does not affect your judgment.)tmpl";

const std::string kFence = "---------------------";

// The example source block inside the inference template; replaced wholesale
// by a rendered numbered context (which carries its own fences).
const std::string kInferenceContextBlock =
    kFence + "\n\nSource [1]: ...\nSource [2]: ...\n...\n\n" + kFence;

}  // namespace


const std::string& question_system() { return kQuestionSystem; }

const std::string& question_user_template() { return kQuestionUser; }

const std::string& single_step_system() { return kSingleStepSystem; }

const std::string& single_step_user_template() { return kSingleStepUser; }

const std::string& answer_template_hint() { return kAnswerHint; }

const std::string& answer_template_no_hint() { return kAnswerNoHint; }

const std::string& inference_template() { return kInference; }

const std::string& citation_judge_system() { return kCitationJudgeSystem; }

const std::string& citation_judge_user_template() { return kCitationJudgeUser; }

const std::string& answer_judge_template() { return kAnswerJudge; }

const std::string& context_fence() { return kFence; }


std::string replace_all(std::string text, std::string_view placeholder, std::string_view value) {
    if (placeholder.empty()) return text;
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (true) {
        auto hit = text.find(placeholder, pos);
        if (hit == std::string::npos) {
            out.append(text, pos, std::string::npos);
            return out;
        }
        out.append(text, pos, hit - pos);
        out.append(value);
        pos = hit + placeholder.size();
    }
}

std::string render_question_user(const QuestionPromptFields& fields) {
    std::string p = question_user_template();
    p = replace_all(std::move(p), "[FINANCIAL TEXT SEGMENT]", fields.financial_text);
    p = replace_all(std::move(p), "[PERSONA]", fields.persona);
    p = replace_all(std::move(p), "[STYLE_DESCRIPTION]", fields.style_description);
    p = replace_all(std::move(p), "[WORD_COUNT]", std::to_string(fields.word_count));
    p = replace_all(std::move(p), "[FORMALITY]", fields.formality);
    p = replace_all(std::move(p), "[STYLE]", fields.style_name);
    p = replace_all(std::move(p), "[FEW-SHOT EXAMPLES]", fields.few_shot_examples);
    return p;
}

std::string render_single_step_user(const std::string& numbered_sources) {
    return replace_all(single_step_user_template(), "[NUMBERED SOURCES]", numbered_sources);
}

std::string render_answer_prompt(const std::string& numbered_sources, const std::string& question,
                                 std::optional<int> hint) {
    std::string p = hint ? answer_template_hint() : answer_template_no_hint();
    p = replace_all(std::move(p), "{{context|numbered}}", numbered_sources);
    if (hint) p = replace_all(std::move(p), "{{hint}}", std::to_string(*hint));
    p = replace_all(std::move(p), "{{question}}", question);
    return p;
}

std::string render_inference_prompt(const std::string& rendered_context,
                                    const std::string& question) {
    std::string p = inference_template();
    auto hit = p.find(kInferenceContextBlock);
    if (hit == std::string::npos)
        throw DataError("inference template is missing its context block");
    p.replace(hit, kInferenceContextBlock.size(), rendered_context);
    return replace_all(std::move(p), "[QUESTION]", question);
}

std::string render_citation_judge_user(const std::string& question, const std::string& response,
                                       const std::string& sources) {
    std::string p = citation_judge_user_template();
    p = replace_all(std::move(p), "{question}", question);
    p = replace_all(std::move(p), "{response}", response);
    p = replace_all(std::move(p), "{sources}", sources);
    return p;
}

std::string render_answer_judge_prompt(const std::string& question, const std::string& reference,
                                       const std::string& candidate) {
    std::string p = answer_judge_template();
    p = replace_all(std::move(p), "{question}", question);
    p = replace_all(std::move(p), "{reference}", reference);
    p = replace_all(std::move(p), "{single answer}", candidate);
    return p;
}

}  // namespace ragsynth::prompts
