#pragma once

#include <optional>
#include <string>
#include <vector>

#include "air/corpus.hpp"
#include "air/llm.hpp"

namespace air {

struct RefinedDocument {
    std::string doc_id;
    std::string text;
};

struct InstructionRecord {
    std::string doc_id;
    std::string instruction;
    int score = 0;
    bool kept = false;
};

enum class IigDropReason { back_translate_failed, refine_failed, score_failed };

std::string_view to_string(IigDropReason reason);

struct IigDrop {
    std::string doc_id;
    IigDropReason reason;
    std::string detail;
};

// One surviving document: its instruction, refined document and score.
struct IigItem {
    std::string doc_id;
    std::string instruction;
    std::string refined_document;
    int score = 0;
    bool kept = false;
};

struct IigResult {
    std::vector<IigItem> items;  // includes kept=false records for audit
    std::vector<IigDrop> drops;  // hard failures with no usable record
};

struct IigOptions {
    int score_threshold = 4;
    std::vector<std::string> rubric;  // exactly 5 aspects
    int workers = 1;
};

std::vector<std::string> default_rubric();

// Instruction the document (or part of it) answers. nullopt = drop.
std::optional<std::string> back_translate(LlmGateway& gateway, const ModelRole& guidance,
                                          const Document& doc);

// Response-format rewrite R; never the fine-tuning target.
std::optional<RefinedDocument> refine_document(LlmGateway& gateway, const ModelRole& guidance,
                                               const Document& doc,
                                               const std::string& instruction);

// 1-5, one point per rubric aspect. Throws std::invalid_argument unless the
// rubric has exactly 5 aspects. nullopt = unparseable after retry.
std::optional<int> score_instruction(LlmGateway& gateway, const ModelRole& guidance,
                                     const std::string& instruction, const Document& doc,
                                     const std::vector<std::string>& rubric);

std::vector<InstructionRecord> filter_by_score(const std::vector<InstructionRecord>& records,
                                               int threshold);

// back_translate -> refine_document -> score, per document.
IigResult run_iig_stage(LlmGateway& gateway, const ModelRole& guidance,
                        const std::vector<Document>& docs, const IigOptions& options);

Json to_json(const IigItem& item);
IigItem iig_item_from_json(const Json& j);
Json to_json(const IigDrop& drop);

}  // namespace air
