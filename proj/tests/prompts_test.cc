#include "explplan/prompts.h"

#include <memory>
#include <set>
#include <string>

#include "doctest.h"
#include "explplan/common.h"
#include "explplan/llm_gateway.h"
#include "test_util.h"

using namespace explplan;

namespace {

const std::string kDoc =
    "Sleep spindles coordinate hippocampal replay. We recorded 40 mice over 12 nights.";

std::string golden(const std::string& name) {
  return testutil::read_file(testutil::data_path("golden/prompts/" + name + ".txt"));
}

Plan two_question_plan() {
  Plan plan;
  plan.questions.push_back({"What are sleep spindles?", {}, 0, 0});
  plan.questions.push_back({"Why were mice recorded for many nights?", {}, 1, 1});
  return plan;
}

}  // namespace

TEST_CASE("rendered prompts byte-match the golden files") {
  CHECK(render_prompt(PromptId::kQuestion,
                      {{"context", "Sleep spindles coordinate hippocampal replay."},
                       {"target", "We recorded 40 mice over 12 nights."}})
            .text == golden("question"));
  CHECK(render_prompt(PromptId::kZeroShot, {{"document", kDoc}}).text == golden("zero_shot"));
  CHECK(render_prompt(PromptId::kIcl, {{"example_document", "Bees carry pollen between flowers."},
                                       {"example_summary", "Bees help plants make seeds."},
                                       {"document", kDoc}})
            .text == golden("icl"));
  CHECK(plan_prompt(kDoc, two_question_plan()).text == golden("plan"));
  CHECK(render_prompt(PromptId::kExtract, {{"document", kDoc}}).text == golden("extract"));
  CHECK(render_prompt(PromptId::kIrrelevantQuestion, {}).text == golden("irrelevant_question"));
}

TEST_CASE("the gateway sends the golden prompt text") {
  auto stub = std::make_shared<StubChatTransport>(nlohmann::json::object());
  LlmGateway gateway(LlmConfig{}, stub, [](std::chrono::milliseconds) {});
  gateway.generate_question("Sleep spindles coordinate hippocampal replay.",
                            "We recorded 40 mice over 12 nights.");
  gateway.summarize_zero_shot(kDoc);
  gateway.summarize_icl("Bees carry pollen between flowers.", "Bees help plants make seeds.", kDoc);
  gateway.summarize_with_plan(kDoc, two_question_plan());
  gateway.generate_irrelevant_question();
  const auto requests = stub->requests();
  REQUIRE(requests.size() == 5);
  const char* names[] = {"question", "zero_shot", "icl", "plan", "irrelevant_question"};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(requests[i].prompt.template_id == names[i]);
    CHECK(requests[i].prompt.text == golden(names[i]));
    CHECK(requests[i].body.at("messages").at(0).at("content") == golden(names[i]));
  }
}

TEST_CASE("templates list their slots and carry stable versions") {
  std::set<std::string> versions;
  for (PromptId id : all_prompt_ids()) {
    const auto& t = prompt_template(id);
    CHECK(t.version.size() == 8);
    versions.insert(t.version);
    const bool has_slot = t.text.find("{{") != std::string_view::npos;
    CHECK(has_slot == !t.slots.empty());
  }
  CHECK(versions.size() == all_prompt_ids().size());
  CHECK(prompt_template(PromptId::kIcl).slots ==
        std::vector<std::string>{"example_document", "example_summary", "document"});
  CHECK(prompt_template(PromptId::kQuestion).slots ==
        std::vector<std::string>{"context", "target"});
}

TEST_CASE("slot values are not re-expanded") {
  const auto r = render_prompt(PromptId::kZeroShot, {{"document", "text with {{document}} inside"}});
  CHECK(r.text.find("Document: text with {{document}} inside\n") != std::string::npos);
  CHECK(r.template_id == "zero_shot");
  CHECK(r.slots.at("document") == "text with {{document}} inside");
}

TEST_CASE("missing and unknown slots are rejected") {
  CHECK_THROWS_AS(render_prompt(PromptId::kZeroShot, {}), std::invalid_argument);
  CHECK_THROWS_AS(render_prompt(PromptId::kZeroShot, {{"document", "x"}, {"extra", "y"}}),
                  std::invalid_argument);
}

TEST_CASE("unrender recovers slot values") {
  const std::map<std::string, std::string> slots = {
      {"example_document", "A doc.\nLay Summary: tricky"},
      {"example_summary", "Short."},
      {"document", "Second doc.\nDocument: nested"}};
  const auto r = render_prompt(PromptId::kIcl, slots);
  const auto back = unrender_prompt(PromptId::kIcl, r.text);
  CHECK(back.at("example_summary") == "Short.");
  CHECK(back.at("document") == "Second doc.\nDocument: nested");
  CHECK(render_prompt(PromptId::kIcl, back).text == r.text);

  for (PromptId id : all_prompt_ids()) {
    std::map<std::string, std::string> values;
    for (const auto& s : prompt_template(id).slots) values[s] = "value of " + s;
    CHECK(unrender_prompt(id, render_prompt(id, values).text) == values);
  }
  CHECK_THROWS_AS(unrender_prompt(PromptId::kZeroShot, "Not a prompt"), ParseError);
  CHECK_THROWS_AS(unrender_prompt(PromptId::kIrrelevantQuestion, golden("zero_shot")), ParseError);
}
