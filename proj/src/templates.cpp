#include "air/llm.hpp"

namespace air {

// Default prompt bodies. All structured outputs are requested inside explicit
// tags so downstream parsing is uniform. Bodies can be overridden per
// deployment via TemplateRegistry::load_overrides.
TemplateRegistry TemplateRegistry::with_defaults() {
    TemplateRegistry registry;

    registry.set(make_template("back_translate",
        "Below is a document. Write one instruction or question that this document (or a "
        "portion of it) answers completely and accurately. Derive the instruction from the "
        "document alone; do not copy example instructions from anywhere else. The instruction "
        "should read like a real user request.\n\n"
        "Document:\n{document}\n\n"
        "Reply with only the instruction inside <instruction></instruction> tags."));

    registry.set(make_template("refine_document",
        "Rewrite the document below as a direct answer to the instruction, in the voice of an "
        "AI assistant. Keep every fact and formatting convention that belongs in the answer, "
        "and remove content that is irrelevant to the instruction (navigation, boilerplate, "
        "unrelated sections).\n\n"
        "Instruction:\n{instruction}\n\n"
        "Document:\n{document}\n\n"
        "Reply with only the rewritten answer inside <refined></refined> tags."));

    registry.set(make_template("score_instruction",
        "Score the instruction below on a 1-5 scale. Award one point for each aspect that "
        "holds:\n{rubric}\n\n"
        "Instruction:\n{instruction}\n\n"
        "Source document:\n{document}\n\n"
        "Reply with only the integer score inside <score></score> tags."));

    registry.set(make_template("generate_constraint_doc_ref",
        "You are judging a model's answer against a reference answer derived from a "
        "human-written document. Identify one concrete requirement that the reference answer "
        "satisfies but the model's answer does not. State it as a single imperative "
        "constraint that could be appended to the instruction. Do not repeat a requirement "
        "the instruction already contains.\n\n"
        "Instruction:\n{instruction}\n\n"
        "Model answer:\n{response}\n\n"
        "Reference answer:\n{reference}\n\n"
        "Reply with only the constraint inside <constraint></constraint> tags."));

    registry.set(make_template("generate_constraint_model_ref",
        "You are judging a model's answer against a reference answer written by a stronger "
        "model. Identify one concrete requirement that the reference answer satisfies but the "
        "model's answer does not. State it as a single imperative constraint that could be "
        "appended to the instruction. Do not repeat a requirement the instruction already "
        "contains.\n\n"
        "Instruction:\n{instruction}\n\n"
        "Model answer:\n{response}\n\n"
        "Reference answer:\n{reference}\n\n"
        "Reply with only the constraint inside <constraint></constraint> tags."));

    registry.set(make_template("generate_constraint_no_judge",
        "Propose one additional requirement that would make the instruction below more "
        "demanding and more specific. State it as a single imperative constraint. Do not "
        "repeat a requirement the instruction already contains.\n\n"
        "Instruction:\n{instruction}\n\n"
        "Reply with only the constraint inside <constraint></constraint> tags."));

    registry.set(make_template("check_constraint",
        "Decide whether the response below satisfies the constraint. Answer yes only if the "
        "constraint is fully satisfied.\n\n"
        "Constraint:\n{constraint}\n\n"
        "Response:\n{response}\n\n"
        "Reply with only yes or no inside <satisfied></satisfied> tags."));

    registry.set(make_template("combine_instruction",
        "Rewrite the instruction below so it reads as one fluent request that explicitly "
        "includes every requirement listed. Keep the original intent; do not drop, weaken, or "
        "invent requirements.\n\n"
        "Instruction:\n{instruction}\n\n"
        "Requirements:\n{constraints}\n\n"
        "Reply with only the rewritten instruction inside <instruction></instruction> tags."));

    registry.set(make_template("classify_constraint_type",
        "Classify the constraint below into exactly one of these types:\n{types}\n\n"
        "Constraint:\n{constraint}\n\n"
        "Reply with only the type name inside <type></type> tags."));

    registry.set(make_template("classify_domain",
        "Classify the text below into exactly one of these domains:\n{domains}\n\n"
        "Text:\n{text}\n\n"
        "Reply with only the domain name inside <domain></domain> tags."));

    // Pass-through bodies: the model answers the instruction as-is. Distinct
    // names keep routing auditable (final answers come from the guidance
    // model, working answers from the current model).
    registry.set(make_template("final_response", "{instruction}"));
    registry.set(make_template("current_response", "{instruction}"));
    registry.set(make_template("reference_response", "{instruction}"));

    return registry;
}

}  // namespace air
