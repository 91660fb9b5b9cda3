#include "air/iig.hpp"

#include <stdexcept>
#include <variant>

#include "air/parallel.hpp"

namespace air {

std::string_view to_string(IigDropReason reason) {
    switch (reason) {
        case IigDropReason::back_translate_failed: return "back_translate_failed";
        case IigDropReason::refine_failed: return "refine_failed";
        case IigDropReason::score_failed: return "score_failed";
    }
    return "back_translate_failed";
}

std::vector<std::string> default_rubric() {
    return {
        "the instruction can be answered from the document alone",
        "the intent of the instruction is clear",
        "the instruction is specific rather than generic",
        "the instruction is phrased the way a real user would ask it",
        "the instruction is self-contained and needs no extra context",
    };
}

std::optional<std::string> back_translate(LlmGateway& gateway, const ModelRole& guidance,
                                          const Document& doc) {
    TaggedResult result = gateway.complete_tagged(
        guidance, "back_translate", {{"document", doc.text}, {"doc_id", doc.id}}, "instruction");
    if (!result.ok) return std::nullopt;
    return result.value;
}

std::optional<RefinedDocument> refine_document(LlmGateway& gateway, const ModelRole& guidance,
                                               const Document& doc,
                                               const std::string& instruction) {
    TaggedResult result = gateway.complete_tagged(
        guidance, "refine_document",
        {{"document", doc.text}, {"instruction", instruction}, {"doc_id", doc.id}}, "refined");
    if (!result.ok) return std::nullopt;
    return RefinedDocument{doc.id, result.value};
}

std::optional<int> score_instruction(LlmGateway& gateway, const ModelRole& guidance,
                                     const std::string& instruction, const Document& doc,
                                     const std::vector<std::string>& rubric) {
    if (rubric.size() != 5) {
        throw std::invalid_argument("scoring rubric must have exactly 5 aspects");
    }
    std::string rubric_text;
    for (std::size_t i = 0; i < rubric.size(); ++i) {
        rubric_text += std::to_string(i + 1) + ". " + rubric[i] + "\n";
    }
    int parsed = 0;
    TaggedResult result = gateway.complete_tagged(
        guidance, "score_instruction",
        {{"instruction", instruction},
         {"document", doc.text},
         {"rubric", rubric_text},
         {"doc_id", doc.id}},
        "score", [&parsed](std::string& value) -> std::optional<std::string> {
            try {
                std::size_t used = 0;
                int v = std::stoi(value, &used);
                if (used != value.size() || v < 1 || v > 5) {
                    return "The score must be a single integer between 1 and 5.";
                }
                parsed = v;
                return std::nullopt;
            } catch (const std::exception&) {
                return "The score must be a single integer between 1 and 5.";
            }
        });
    if (!result.ok) return std::nullopt;
    return parsed;
}

std::vector<InstructionRecord> filter_by_score(const std::vector<InstructionRecord>& records,
                                               int threshold) {
    std::vector<InstructionRecord> kept;
    for (const InstructionRecord& record : records) {
        if (record.score >= threshold) kept.push_back(record);
    }
    return kept;
}

IigResult run_iig_stage(LlmGateway& gateway, const ModelRole& guidance,
                        const std::vector<Document>& docs, const IigOptions& options) {
    const std::vector<std::string> rubric =
        options.rubric.empty() ? default_rubric() : options.rubric;

    using PerDoc = std::variant<IigItem, IigDrop>;
    auto process = [&](const Document& doc) -> PerDoc {
        auto instruction = back_translate(gateway, guidance, doc);
        if (!instruction) {
            return IigDrop{doc.id, IigDropReason::back_translate_failed, "empty or untagged"};
        }
        auto refined = refine_document(gateway, guidance, doc, *instruction);
        if (!refined) {
            return IigDrop{doc.id, IigDropReason::refine_failed, "empty or untagged"};
        }
        auto score = score_instruction(gateway, guidance, *instruction, doc, rubric);
        if (!score) {
            return IigDrop{doc.id, IigDropReason::score_failed, "unparseable score"};
        }
        IigItem item;
        item.doc_id = doc.id;
        item.instruction = *instruction;
        item.refined_document = refined->text;
        item.score = *score;
        item.kept = *score >= options.score_threshold;
        return item;
    };

    std::vector<PerDoc> processed =
        parallel_map<Document, PerDoc>(docs, options.workers, process);

    IigResult result;
    for (PerDoc& entry : processed) {
        if (std::holds_alternative<IigItem>(entry)) {
            result.items.push_back(std::get<IigItem>(std::move(entry)));
        } else {
            result.drops.push_back(std::get<IigDrop>(std::move(entry)));
        }
    }
    return result;
}

Json to_json(const IigItem& item) {
    return Json{{"doc_id", item.doc_id},
                {"instruction", item.instruction},
                {"refined_document", item.refined_document},
                {"score", item.score},
                {"kept", item.kept}};
}

IigItem iig_item_from_json(const Json& j) {
    IigItem item;
    item.doc_id = j.at("doc_id").get<std::string>();
    item.instruction = j.at("instruction").get<std::string>();
    item.refined_document = j.at("refined_document").get<std::string>();
    item.score = j.at("score").get<int>();
    item.kept = j.at("kept").get<bool>();
    return item;
}

Json to_json(const IigDrop& drop) {
    return Json{{"doc_id", drop.doc_id},
                {"reason", std::string(to_string(drop.reason))},
                {"detail", drop.detail}};
}

}  // namespace air
