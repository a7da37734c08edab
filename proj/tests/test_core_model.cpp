#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clarify/core_model.hpp"
#include "clarify/errors.hpp"

using namespace clarify;

namespace {

Dialogue make_precise_dialogue() {
    Dialogue d;
    d.id = "fixture-precise";
    d.subtype = AmbiguitySubtype::Goal;
    d.persona = Persona::Precise;
    d.source = "fixture";
    d.turns = {
        {Speaker::User, "Can you plan a 3-day trip for me?", 1},
        {Speaker::Assistant, "Could you share the destination, dates, budget, or activities?", 2},
        {Speaker::User, "Kyoto from March 12-14. Budget around $800.", 3},
    };
    d.reference_actions = {Action::Clarify, Action::Answer};
    d.golden_clarifications = {d.turns[1].text};
    return d;
}

} // namespace

TEST_CASE("taxonomy maps each subtype to exactly one category per the grouping") {
    CHECK(all_subtypes().size() == 16);
    CHECK(category_of(AmbiguitySubtype::Lexical) == AmbiguityCategory::Linguistic);
    CHECK(category_of(AmbiguitySubtype::Syntactic) == AmbiguityCategory::Linguistic);
    CHECK(category_of(AmbiguitySubtype::Semantic) == AmbiguityCategory::Linguistic);
    CHECK(category_of(AmbiguitySubtype::Goal) == AmbiguityCategory::Intent);
    CHECK(category_of(AmbiguitySubtype::Scope) == AmbiguityCategory::Intent);
    CHECK(category_of(AmbiguitySubtype::IntentConflict) == AmbiguityCategory::Intent);
    CHECK(category_of(AmbiguitySubtype::Entity) == AmbiguityCategory::Contextual);
    CHECK(category_of(AmbiguitySubtype::Spatial) == AmbiguityCategory::Contextual);
    CHECK(category_of(AmbiguitySubtype::Temporal) == AmbiguityCategory::Contextual);
    CHECK(category_of(AmbiguitySubtype::KnowledgeGap) == AmbiguityCategory::Epistemic);
    CHECK(category_of(AmbiguitySubtype::Unfamiliarity) == AmbiguityCategory::Epistemic);
    CHECK(category_of(AmbiguitySubtype::Value) == AmbiguityCategory::Epistemic);
    CHECK(category_of(AmbiguitySubtype::PartialVague) == AmbiguityCategory::Interactional);
    CHECK(category_of(AmbiguitySubtype::FactuallyWrong) == AmbiguityCategory::Interactional);
    CHECK(category_of(AmbiguitySubtype::Contradictory) == AmbiguityCategory::Interactional);
    CHECK(category_of(AmbiguitySubtype::OffFocus) == AmbiguityCategory::Interactional);
}

TEST_CASE("the twelve non-interactional subtypes are the seed subtypes") {
    CHECK(seed_subtypes().size() == 12);
    for (auto subtype : seed_subtypes())
        CHECK(category_of(subtype) != AmbiguityCategory::Interactional);
    CHECK_FALSE(is_seed_subtype(AmbiguitySubtype::OffFocus));
    CHECK(is_seed_subtype(AmbiguitySubtype::Lexical));
}

TEST_CASE("string round-trips for enums") {
    for (auto subtype : all_subtypes()) CHECK(subtype_from_string(to_string(subtype)) == subtype);
    for (auto persona : all_personas()) CHECK(persona_from_string(to_string(persona)) == persona);
    CHECK(action_from_string("clarify") == Action::Clarify);
    CHECK(action_from_string("answer") == Action::Answer);
    CHECK_THROWS_AS(persona_from_string("bogus"), ParseError);
}

TEST_CASE("exactly six personas; only Precise and Refusal permit answers") {
    CHECK(all_personas().size() == 6);
    int permitting = 0;
    for (auto persona : all_personas())
        if (persona_permits_answer(persona)) ++permitting;
    CHECK(permitting == 2);
    CHECK(persona_permits_answer(Persona::Precise));
    CHECK(persona_permits_answer(Persona::Refusal));
}

TEST_CASE("decision-point count is a pure function of persona") {
    for (auto persona : all_personas()) {
        const int expected = (persona == Persona::Precise || persona == Persona::Refusal) ? 2 : 3;
        CHECK(expected_decision_points(persona) == expected);
    }
}

TEST_CASE("classify_decision covers the 2x2 truth table exhaustively") {
    CHECK(classify_decision(Action::Answer, Action::Clarify) == DecisionOutcome::UnderClarify);
    CHECK(classify_decision(Action::Clarify, Action::Answer) == DecisionOutcome::OverClarify);
    CHECK(classify_decision(Action::Clarify, Action::Clarify) == DecisionOutcome::Correct);
    CHECK(classify_decision(Action::Answer, Action::Answer) == DecisionOutcome::Correct);
}

TEST_CASE("well-formed precise dialogue validates cleanly") {
    CHECK(validate_dialogue(make_precise_dialogue()).empty());
}

TEST_CASE("two consecutive user turns violate alternation") {
    Dialogue d = make_precise_dialogue();
    d.turns[1].speaker = Speaker::User;
    auto violations = validate_dialogue(d);
    bool found = false;
    for (const auto& v : violations)
        if (v.invariant == "alternation") found = true;
    CHECK(found);
}

TEST_CASE("refusal dialogue with three decision points is flagged") {
    Dialogue d = make_precise_dialogue();
    d.persona = Persona::Refusal;
    d.turns.push_back({Speaker::Assistant, "Which city do you mean?", 4});
    d.turns.push_back({Speaker::User, "Whatever you think.", 5});
    d.reference_actions = {Action::Clarify, Action::Clarify, Action::Answer};
    d.golden_clarifications = {d.turns[1].text, d.turns[3].text};
    auto violations = validate_dialogue(d);
    bool found = false;
    for (const auto& v : violations)
        if (v.invariant == "decision_count") found = true;
    CHECK(found);
}

TEST_CASE("first reference action must be clarify") {
    Dialogue d = make_precise_dialogue();
    d.reference_actions = {Action::Answer, Action::Answer};
    auto violations = validate_dialogue(d);
    bool found = false;
    for (const auto& v : violations)
        if (v.invariant == "first_action_clarify") found = true;
    CHECK(found);
}

TEST_CASE("missing reference labels are reported, not guessed") {
    Dialogue d = make_precise_dialogue();
    d.reference_actions.pop_back();
    auto violations = validate_dialogue(d);
    bool found = false;
    for (const auto& v : violations)
        if (v.invariant == "reference_count") found = true;
    CHECK(found);
}

TEST_CASE("empty turn text and bad indices are flagged") {
    Dialogue d = make_precise_dialogue();
    d.turns[2].text = "";
    d.turns[2].turn_index = 7;
    auto violations = validate_dialogue(d);
    int hits = 0;
    for (const auto& v : violations)
        if (v.invariant == "non_empty_text" || v.invariant == "turn_indices") ++hits;
    CHECK(hits == 2);
}

TEST_CASE("canonical JSONL record round-trips with normative field names") {
    Dialogue d = make_precise_dialogue();
    auto record = dialogue_to_json(d);
    CHECK(record.at("category") == "intent");
    CHECK(record.at("subtype") == "goal");
    CHECK(record.at("persona") == "precise");
    CHECK(record.at("reference_actions")[0] == "clarify");
    CHECK(record.at("reference_actions")[1] == "answer");
    CHECK(record.at("turns")[0].at("speaker") == "user");

    Dialogue back = dialogue_from_json(record);
    CHECK(back.id == d.id);
    CHECK(back.subtype == d.subtype);
    CHECK(back.persona == d.persona);
    CHECK(back.turns.size() == d.turns.size());
    CHECK(back.turns[2].text == d.turns[2].text);
    CHECK(back.turns[2].turn_index == 3);
    CHECK(back.reference_actions == d.reference_actions);
    CHECK(back.golden_clarifications == d.golden_clarifications);
    CHECK(validate_dialogue(back).empty());
}

TEST_CASE("decision records serialize with lowercase action strings") {
    auto record = make_decision_record("d1", 2, Action::Answer, Action::Clarify, "The answer is x.");
    CHECK(record.outcome == DecisionOutcome::UnderClarify);
    auto js = decision_record_to_json(record);
    CHECK(js.at("predicted") == "answer");
    CHECK(js.at("reference") == "clarify");
    CHECK(js.at("outcome") == "under_clarify");
    auto back = decision_record_from_json(js);
    CHECK(back.outcome == DecisionOutcome::UnderClarify);
    CHECK(back.turn_index == 2);
}

TEST_CASE("prefix_for_decision returns the dialogue up to the t-th user turn") {
    Dialogue d = make_precise_dialogue();
    CHECK(d.decision_points() == 2);
    CHECK(d.prefix_for_decision(1).size() == 1);
    CHECK(d.prefix_for_decision(2).size() == 3);
    CHECK_THROWS_AS(d.prefix_for_decision(3), InvalidArgumentError);
}
