#include <doctest.h>

#include "air/errors.hpp"
#include "air/llm.hpp"
#include "support.hpp"

using namespace air;

namespace {

// Fails with a retryable transport error n times, then delegates.
class FlakyBackend final : public ChatBackend {
public:
    FlakyBackend(int failures, std::shared_ptr<ChatBackend> inner)
        : failures_(failures), inner_(std::move(inner)) {}
    std::string complete(const ChatRequest& request) override {
        if (failures_ > 0) {
            --failures_;
            throw TransportError("429 rate limited", 429, true);
        }
        return inner_->complete(request);
    }

private:
    int failures_;
    std::shared_ptr<ChatBackend> inner_;
};

}  // namespace

TEST_CASE("make_template extracts placeholders") {
    PromptTemplate tpl = make_template("t", "Do {thing} with {doc} and {thing} again");
    CHECK(tpl.placeholders == std::vector<std::string>{"thing", "doc"});
}

TEST_CASE("render_template substitutes bindings; extras allowed") {
    PromptTemplate tpl = make_template("t", "A={a} B={b}");
    CHECK(render_template(tpl, {{"a", "1"}, {"b", "2"}, {"doc_id", "x"}}) == "A=1 B=2");
}

TEST_CASE("render_template fails on unbound placeholder") {
    PromptTemplate tpl = make_template("t", "needs {document}");
    CHECK_THROWS_AS((void)render_template(tpl, {{"other", "x"}}), TemplateError);
}

TEST_CASE("default registry carries the pipeline template set") {
    TemplateRegistry registry = TemplateRegistry::with_defaults();
    for (const char* name :
         {"back_translate", "refine_document", "score_instruction",
          "generate_constraint_doc_ref", "generate_constraint_model_ref",
          "generate_constraint_no_judge", "check_constraint", "combine_instruction",
          "classify_constraint_type", "classify_domain", "final_response"}) {
        CHECK(registry.contains(name));
    }
    CHECK_THROWS_AS((void)registry.get("nope"), TemplateError);
}

TEST_CASE("registry overrides replace bodies from files") {
    airtest::TempDir tmp;
    airtest::write_file(tmp.file("back_translate.txt"), "custom {document}");
    TemplateRegistry registry = TemplateRegistry::with_defaults();
    registry.load_overrides(tmp.path());
    CHECK(registry.get("back_translate").body == "custom {document}");
    CHECK(registry.get("back_translate").placeholders == std::vector<std::string>{"document"});
}

TEST_CASE("parse_tagged_field extracts the first block, trimmed") {
    CHECK(parse_tagged_field("<score>4</score>", "score") == "4");
    CHECK(parse_tagged_field("noise <constraint>Use a table</constraint> noise", "constraint") ==
          "Use a table");
    CHECK(parse_tagged_field("<x> padded value \n</x>", "x") == "padded value");
    CHECK_THROWS_AS((void)parse_tagged_field("no tags", "score"), ParseError);
    CHECK(!try_parse_tagged_field("<open>unclosed", "open").has_value());
}

TEST_CASE("mock backend consumes entries in order and errors when exhausted") {
    MockChatBackend backend({{"back_translate", {}, {}, "first"},
                             {"back_translate", {}, {}, "second"}});
    ModelRole role = airtest::guidance_role();
    Bindings bindings{{"document", "x"}};
    ChatRequest request{&role, "back_translate", "p", &bindings};
    CHECK(backend.complete(request) == "first");
    CHECK(backend.complete(request) == "second");
    CHECK(backend.remaining() == 0);
    CHECK_THROWS_AS((void)backend.complete(request), MockScriptError);
}

TEST_CASE("mock backend matches on binding predicates") {
    MockChatBackend backend({
        {"back_translate", {{"doc_id", "d7"}}, {}, "for d7"},
        {"back_translate", {{"doc_id", "d1"}}, {}, "for d1"},
    });
    ModelRole role = airtest::guidance_role();
    Bindings b1{{"document", "x"}, {"doc_id", "d1"}};
    ChatRequest r1{&role, "back_translate", "p", &b1};
    CHECK(backend.complete(r1) == "for d1");
    Bindings b7{{"document", "x"}, {"doc_id", "d7"}};
    ChatRequest r7{&role, "back_translate", "p", &b7};
    CHECK(backend.complete(r7) == "for d7");
}

TEST_CASE("mock backend 'absent' predicate rejects calls carrying a binding") {
    MockChatBackend backend({
        {"generate_constraint_no_judge", {}, {"response", "reference"}, "ok"},
    });
    ModelRole role = airtest::guidance_role();
    Bindings with_response{{"instruction", "i"}, {"response", "r"}};
    ChatRequest bad{&role, "generate_constraint_no_judge", "p", &with_response};
    CHECK_THROWS_AS((void)backend.complete(bad), MockScriptError);
    Bindings clean{{"instruction", "i"}};
    ChatRequest good{&role, "generate_constraint_no_judge", "p", &clean};
    CHECK(backend.complete(good) == "ok");
}

TEST_CASE("gateway complete returns exchange and audits it first") {
    auto audit = std::make_shared<MemoryAuditSink>();
    auto gateway = airtest::make_mock_gateway(
        {{"back_translate", {}, {}, "OK"}}, audit);
    ChatExchange exchange = gateway.complete(airtest::guidance_role(), "back_translate",
                                             {{"document", "text"}, {"doc_id", "d1"}});
    CHECK(exchange.raw_response == "OK");
    CHECK(exchange.attempt == 1);
    CHECK(exchange.template_name == "back_translate");
    REQUIRE(audit->exchanges().size() == 1);
    CHECK(audit->exchanges()[0].raw_response == "OK");
    CHECK(gateway.counter().total() == 1);
    CHECK(gateway.counter().by_doc("d1") == 1);
}

TEST_CASE("gateway retries transient failures with attempt recorded") {
    auto inner = std::make_shared<MockChatBackend>(
        std::vector<MockRule>{{"back_translate", {}, {}, "recovered"}});
    auto flaky = std::make_shared<FlakyBackend>(2, inner);
    LlmGateway gateway(flaky, TemplateRegistry::with_defaults(), RetryPolicy{3, 0, 2.0});
    ChatExchange exchange =
        gateway.complete(airtest::guidance_role(), "back_translate", {{"document", "x"}});
    CHECK(exchange.raw_response == "recovered");
    CHECK(exchange.attempt == 3);
}

TEST_CASE("gateway gives up after max attempts") {
    auto inner = std::make_shared<MockChatBackend>(
        std::vector<MockRule>{{"back_translate", {}, {}, "never reached"}});
    auto flaky = std::make_shared<FlakyBackend>(5, inner);
    LlmGateway gateway(flaky, TemplateRegistry::with_defaults(), RetryPolicy{3, 0, 2.0});
    CHECK_THROWS_AS(
        (void)gateway.complete(airtest::guidance_role(), "back_translate", {{"document", "x"}}),
        TransportError);
}

TEST_CASE("unbound placeholder raises before any call is made") {
    auto gateway = airtest::make_mock_gateway({{"back_translate", {}, {}, "unused"}});
    CHECK_THROWS_AS(
        (void)gateway.complete(airtest::guidance_role(), "back_translate", {{"wrong", "x"}}),
        TemplateError);
    CHECK(gateway.counter().total() == 0);
}

TEST_CASE("complete_tagged retries once with a format reminder") {
    auto gateway = airtest::make_mock_gateway({
        {"score_instruction", {}, {}, "no tags at all"},
        {"score_instruction", {}, {}, "<score>3</score>"},
    });
    TaggedResult result = gateway.complete_tagged(
        airtest::guidance_role(), "score_instruction",
        {{"instruction", "i"}, {"document", "d"}, {"rubric", "r"}}, "score");
    CHECK(result.ok);
    CHECK(result.value == "3");
    CHECK(result.calls == 2);
}

TEST_CASE("complete_tagged fails after two unparseable replies") {
    auto gateway = airtest::make_mock_gateway({
        {"score_instruction", {}, {}, "garbage"},
        {"score_instruction", {}, {}, "more garbage"},
    });
    TaggedResult result = gateway.complete_tagged(
        airtest::guidance_role(), "score_instruction",
        {{"instruction", "i"}, {"document", "d"}, {"rubric", "r"}}, "score");
    CHECK(!result.ok);
    CHECK(result.calls == 2);
}

TEST_CASE("stage budget cap trips BudgetError") {
    auto gateway = airtest::make_mock_gateway({
        {"back_translate", {}, {}, "a"},
        {"back_translate", {}, {}, "b"},
        {"back_translate", {}, {}, "c"},
    });
    gateway.begin_stage("iig", 2);
    (void)gateway.complete(airtest::guidance_role(), "back_translate", {{"document", "1"}});
    (void)gateway.complete(airtest::guidance_role(), "back_translate", {{"document", "2"}});
    CHECK_THROWS_AS(
        (void)gateway.complete(airtest::guidance_role(), "back_translate", {{"document", "3"}}),
        BudgetError);
    // a new stage resets the cap
    gateway.begin_stage("next", 1);
    CHECK(gateway.complete(airtest::guidance_role(), "back_translate", {{"document", "3"}})
              .raw_response == "c");
}

TEST_CASE("mock script files round-trip") {
    airtest::TempDir tmp;
    std::vector<MockRule> rules{
        {"back_translate", {{"doc_id", "d1"}}, {}, "resp"},
        {"check_constraint", {}, {"reference"}, "<satisfied>yes</satisfied>"},
    };
    airtest::write_file(tmp.file("script.json"), MockChatBackend::rules_to_json(rules).dump(2));
    auto loaded = MockChatBackend::load_script(tmp.file("script.json"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].template_name == "back_translate");
    CHECK(loaded[0].where.at("doc_id") == "d1");
    CHECK(loaded[1].absent == std::vector<std::string>{"reference"});
}
