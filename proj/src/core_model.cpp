#include "clarify/core_model.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "clarify/errors.hpp"

namespace clarify {

using nlohmann::json;

// ============================================================================
// Taxonomy
// ============================================================================

AmbiguityCategory category_of(AmbiguitySubtype subtype) {
    switch (subtype) {
        case AmbiguitySubtype::Lexical:
        case AmbiguitySubtype::Syntactic:
        case AmbiguitySubtype::Semantic:
            return AmbiguityCategory::Linguistic;
        case AmbiguitySubtype::Goal:
        case AmbiguitySubtype::Scope:
        case AmbiguitySubtype::IntentConflict:
            return AmbiguityCategory::Intent;
        case AmbiguitySubtype::Entity:
        case AmbiguitySubtype::Spatial:
        case AmbiguitySubtype::Temporal:
            return AmbiguityCategory::Contextual;
        case AmbiguitySubtype::KnowledgeGap:
        case AmbiguitySubtype::Unfamiliarity:
        case AmbiguitySubtype::Value:
            return AmbiguityCategory::Epistemic;
        case AmbiguitySubtype::PartialVague:
        case AmbiguitySubtype::FactuallyWrong:
        case AmbiguitySubtype::Contradictory:
        case AmbiguitySubtype::OffFocus:
            return AmbiguityCategory::Interactional;
    }
    throw InvalidArgumentError("unknown ambiguity subtype");
}

bool is_seed_subtype(AmbiguitySubtype subtype) {
    return category_of(subtype) != AmbiguityCategory::Interactional;
}

const std::vector<AmbiguitySubtype>& all_subtypes() {
    static const std::vector<AmbiguitySubtype> kAll = {
        AmbiguitySubtype::Lexical,        AmbiguitySubtype::Syntactic,
        AmbiguitySubtype::Semantic,       AmbiguitySubtype::Goal,
        AmbiguitySubtype::Scope,          AmbiguitySubtype::IntentConflict,
        AmbiguitySubtype::Entity,         AmbiguitySubtype::Spatial,
        AmbiguitySubtype::Temporal,       AmbiguitySubtype::KnowledgeGap,
        AmbiguitySubtype::Unfamiliarity,  AmbiguitySubtype::Value,
        AmbiguitySubtype::PartialVague,   AmbiguitySubtype::FactuallyWrong,
        AmbiguitySubtype::Contradictory,  AmbiguitySubtype::OffFocus,
    };
    return kAll;
}

const std::vector<AmbiguitySubtype>& seed_subtypes() {
    static const std::vector<AmbiguitySubtype> kSeeds = [] {
        std::vector<AmbiguitySubtype> out;
        for (auto s : all_subtypes())
            if (is_seed_subtype(s)) out.push_back(s);
        return out;
    }();
    return kSeeds;
}

std::string to_string(AmbiguityCategory category) {
    switch (category) {
        case AmbiguityCategory::Linguistic: return "linguistic";
        case AmbiguityCategory::Intent: return "intent";
        case AmbiguityCategory::Contextual: return "contextual";
        case AmbiguityCategory::Epistemic: return "epistemic";
        case AmbiguityCategory::Interactional: return "interactional";
    }
    throw InvalidArgumentError("unknown ambiguity category");
}

std::string to_string(AmbiguitySubtype subtype) {
    switch (subtype) {
        case AmbiguitySubtype::Lexical: return "lexical";
        case AmbiguitySubtype::Syntactic: return "syntactic";
        case AmbiguitySubtype::Semantic: return "semantic";
        case AmbiguitySubtype::Goal: return "goal";
        case AmbiguitySubtype::Scope: return "scope";
        case AmbiguitySubtype::IntentConflict: return "intent_conflict";
        case AmbiguitySubtype::Entity: return "entity";
        case AmbiguitySubtype::Spatial: return "spatial";
        case AmbiguitySubtype::Temporal: return "temporal";
        case AmbiguitySubtype::KnowledgeGap: return "knowledge_gap";
        case AmbiguitySubtype::Unfamiliarity: return "unfamiliarity";
        case AmbiguitySubtype::Value: return "value";
        case AmbiguitySubtype::PartialVague: return "partial_vague";
        case AmbiguitySubtype::FactuallyWrong: return "factually_wrong";
        case AmbiguitySubtype::Contradictory: return "contradictory";
        case AmbiguitySubtype::OffFocus: return "off_focus";
    }
    throw InvalidArgumentError("unknown ambiguity subtype");
}

AmbiguitySubtype subtype_from_string(const std::string& name) {
    static const std::unordered_map<std::string, AmbiguitySubtype> kMap = [] {
        std::unordered_map<std::string, AmbiguitySubtype> m;
        for (auto s : all_subtypes()) m[to_string(s)] = s;
        return m;
    }();
    auto it = kMap.find(name);
    if (it == kMap.end()) throw ParseError("unknown ambiguity subtype: '" + name + "'");
    return it->second;
}

// ============================================================================
// Personas
// ============================================================================

const std::vector<Persona>& all_personas() {
    static const std::vector<Persona> kAll = {
        Persona::Precise,        Persona::PartialVague, Persona::OffFocus,
        Persona::Contradictory,  Persona::FactuallyWrong, Persona::Refusal,
    };
    return kAll;
}

std::string to_string(Persona persona) {
    switch (persona) {
        case Persona::Precise: return "precise";
        case Persona::PartialVague: return "partial_vague";
        case Persona::OffFocus: return "off_focus";
        case Persona::Contradictory: return "contradictory";
        case Persona::FactuallyWrong: return "factually_wrong";
        case Persona::Refusal: return "refusal";
    }
    throw InvalidArgumentError("unknown persona");
}

Persona persona_from_string(const std::string& name) {
    static const std::unordered_map<std::string, Persona> kMap = [] {
        std::unordered_map<std::string, Persona> m;
        for (auto p : all_personas()) m[to_string(p)] = p;
        return m;
    }();
    auto it = kMap.find(name);
    if (it == kMap.end()) throw ParseError("unknown persona: '" + name + "'");
    return it->second;
}

const PersonaDimensions& dimensions_of(Persona persona) {
    static const std::unordered_map<Persona, PersonaDimensions> kDims = {
        // coverage, truthfulness, self-consistency, cooperativeness, specificity
        {Persona::Precise,        {Level::High, Level::High, Level::High, Level::High, Level::High}},
        {Persona::PartialVague,   {Level::Low,  Level::High, Level::High, Level::Medium, Level::Low}},
        {Persona::OffFocus,       {Level::Low,  Level::High, Level::High, Level::Low, Level::Low}},
        {Persona::Contradictory,  {Level::Medium, Level::High, Level::Low, Level::Medium, Level::Medium}},
        {Persona::FactuallyWrong, {Level::High, Level::Low,  Level::High, Level::High, Level::High}},
        {Persona::Refusal,        {Level::Low,  Level::High, Level::High, Level::Low, Level::Low}},
    };
    return kDims.at(persona);
}

bool persona_permits_answer(Persona persona) {
    return persona == Persona::Precise || persona == Persona::Refusal;
}

int expected_decision_points(Persona persona) {
    return persona_permits_answer(persona) ? 2 : 3;
}

// ============================================================================
// Actions and dialogues
// ============================================================================

std::string to_string(Action action) {
    return action == Action::Clarify ? "clarify" : "answer";
}

Action action_from_string(const std::string& name) {
    if (name == "clarify") return Action::Clarify;
    if (name == "answer") return Action::Answer;
    throw ParseError("unknown action: '" + name + "'");
}

std::string to_string(Speaker speaker) {
    return speaker == Speaker::User ? "user" : "assistant";
}

Speaker speaker_from_string(const std::string& name) {
    if (name == "user") return Speaker::User;
    if (name == "assistant") return Speaker::Assistant;
    throw ParseError("unknown speaker: '" + name + "'");
}

int Dialogue::decision_points() const {
    int n = 0;
    for (const auto& t : turns)
        if (t.speaker == Speaker::User) ++n;
    return n;
}

std::vector<Turn> Dialogue::prefix_for_decision(int decision_point) const {
    std::vector<Turn> prefix;
    int seen = 0;
    for (const auto& t : turns) {
        prefix.push_back(t);
        if (t.speaker == Speaker::User && ++seen == decision_point) return prefix;
    }
    throw InvalidArgumentError("dialogue " + id + " has no decision point " +
                               std::to_string(decision_point));
}

// ============================================================================
// Decisions
// ============================================================================

std::string to_string(DecisionOutcome outcome) {
    switch (outcome) {
        case DecisionOutcome::Correct: return "correct";
        case DecisionOutcome::UnderClarify: return "under_clarify";
        case DecisionOutcome::OverClarify: return "over_clarify";
    }
    throw InvalidArgumentError("unknown outcome");
}

DecisionOutcome classify_decision(Action predicted, Action reference) {
    if (predicted == reference) return DecisionOutcome::Correct;
    return predicted == Action::Answer ? DecisionOutcome::UnderClarify
                                       : DecisionOutcome::OverClarify;
}

DecisionRecord make_decision_record(const std::string& dialogue_id, int turn_index,
                                    Action predicted, Action reference,
                                    std::string raw_response) {
    DecisionRecord r;
    r.dialogue_id = dialogue_id;
    r.turn_index = turn_index;
    r.predicted = predicted;
    r.reference = reference;
    r.outcome = classify_decision(predicted, reference);
    r.raw_response = std::move(raw_response);
    return r;
}

// ============================================================================
// Validation
// ============================================================================

namespace {

void add_violation(std::vector<Violation>& out, const Dialogue& d,
                   std::string invariant, std::string where, std::string detail) {
    out.push_back({std::move(invariant), d.id + (where.empty() ? "" : "/" + where),
                   std::move(detail)});
}

} // namespace

std::vector<Violation> validate_dialogue(const Dialogue& dialogue) {
    std::vector<Violation> out;

    if (dialogue.turns.empty()) {
        add_violation(out, dialogue, "non_empty", "", "dialogue has no turns");
        return out;
    }

    // Alternation: user first, then strictly alternating speakers.
    if (dialogue.turns.front().speaker != Speaker::User)
        add_violation(out, dialogue, "starts_with_user", "turn 1", "first turn is not the user");
    for (size_t i = 1; i < dialogue.turns.size(); ++i) {
        if (dialogue.turns[i].speaker == dialogue.turns[i - 1].speaker) {
            add_violation(out, dialogue, "alternation", "turn " + std::to_string(i + 1),
                          "two consecutive " + to_string(dialogue.turns[i].speaker) + " turns");
        }
    }

    int expected_index = 1;
    for (const auto& t : dialogue.turns) {
        if (t.text.empty())
            add_violation(out, dialogue, "non_empty_text", "turn " + std::to_string(t.turn_index),
                          "empty utterance");
        if (t.turn_index != expected_index)
            add_violation(out, dialogue, "turn_indices",
                          "turn " + std::to_string(expected_index),
                          "expected index " + std::to_string(expected_index) + ", found " +
                              std::to_string(t.turn_index));
        ++expected_index;
    }

    const int points = dialogue.decision_points();
    if (static_cast<int>(dialogue.reference_actions.size()) != points) {
        add_violation(out, dialogue, "reference_count", "",
                      std::to_string(dialogue.reference_actions.size()) +
                          " reference actions for " + std::to_string(points) +
                          " decision points (unlabeled decision points are reported, not guessed)");
    }

    if (dialogue.persona) {
        const int expected = expected_decision_points(*dialogue.persona);
        if (points != expected)
            add_violation(out, dialogue, "decision_count", "",
                          to_string(*dialogue.persona) + " dialogues have " +
                              std::to_string(expected) + " decision points, found " +
                              std::to_string(points));
    }

    if (!dialogue.reference_actions.empty() &&
        dialogue.reference_actions.front() != Action::Clarify) {
        add_violation(out, dialogue, "first_action_clarify", "decision 1",
                      "seed queries are ambiguous by construction; the first reference must be clarify");
    }

    size_t clarifies = 0;
    for (auto a : dialogue.reference_actions)
        if (a == Action::Clarify) ++clarifies;
    if (dialogue.golden_clarifications.size() != clarifies) {
        add_violation(out, dialogue, "golden_alignment", "",
                      std::to_string(dialogue.golden_clarifications.size()) +
                          " golden clarifications for " + std::to_string(clarifies) +
                          " clarify reference actions");
    }

    return out;
}

// ============================================================================
// Canonical JSONL records
// ============================================================================

json dialogue_to_json(const Dialogue& d) {
    json turns = json::array();
    for (const auto& t : d.turns)
        turns.push_back({{"speaker", to_string(t.speaker)}, {"text", t.text}});

    json refs = json::array();
    for (auto a : d.reference_actions) refs.push_back(to_string(a));

    json record = {
        {"id", d.id},
        {"category", to_string(category_of(d.subtype))},
        {"subtype", to_string(d.subtype)},
        {"persona", d.persona ? json(to_string(*d.persona)) : json(nullptr)},
        {"source", d.source},
        {"turns", turns},
        {"reference_actions", refs},
        {"golden_clarifications", d.golden_clarifications},
    };
    return record;
}

Dialogue dialogue_from_json(const json& record) {
    Dialogue d;
    d.id = record.at("id").get<std::string>();
    d.subtype = subtype_from_string(record.at("subtype").get<std::string>());
    if (record.contains("persona") && !record.at("persona").is_null())
        d.persona = persona_from_string(record.at("persona").get<std::string>());
    d.source = record.value("source", "");
    int index = 1;
    for (const auto& t : record.at("turns")) {
        Turn turn;
        turn.speaker = speaker_from_string(t.at("speaker").get<std::string>());
        turn.text = t.at("text").get<std::string>();
        turn.turn_index = index++;
        d.turns.push_back(std::move(turn));
    }
    if (record.contains("reference_actions"))
        for (const auto& a : record.at("reference_actions"))
            d.reference_actions.push_back(action_from_string(a.get<std::string>()));
    if (record.contains("golden_clarifications"))
        d.golden_clarifications =
            record.at("golden_clarifications").get<std::vector<std::string>>();
    return d;
}

json decision_record_to_json(const DecisionRecord& r) {
    return {
        {"dialogue_id", r.dialogue_id},
        {"turn_index", r.turn_index},
        {"predicted", to_string(r.predicted)},
        {"reference", to_string(r.reference)},
        {"outcome", to_string(r.outcome)},
        {"raw_response", r.raw_response},
    };
}

DecisionRecord decision_record_from_json(const json& record) {
    DecisionRecord r;
    r.dialogue_id = record.at("dialogue_id").get<std::string>();
    r.turn_index = record.at("turn_index").get<int>();
    r.predicted = action_from_string(record.at("predicted").get<std::string>());
    r.reference = action_from_string(record.at("reference").get<std::string>());
    r.outcome = classify_decision(r.predicted, r.reference);
    r.raw_response = record.value("raw_response", "");
    return r;
}

namespace {

template <typename T, typename ToJson>
void write_jsonl(const std::string& path, const std::vector<T>& items, ToJson to_json_fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& item : items) out << to_json_fn(item).dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json_fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<T> items;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded())
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed JSON line");
        items.push_back(from_json_fn(record));
    }
    return items;
}

} // namespace

void write_dialogues_jsonl(const std::string& path, const std::vector<Dialogue>& dialogues) {
    write_jsonl(path, dialogues, dialogue_to_json);
}

std::vector<Dialogue> read_dialogues_jsonl(const std::string& path) {
    return read_jsonl<Dialogue>(path, dialogue_from_json);
}

void write_decision_records_jsonl(const std::string& path,
                                  const std::vector<DecisionRecord>& records) {
    write_jsonl(path, records, decision_record_to_json);
}

std::vector<DecisionRecord> read_decision_records_jsonl(const std::string& path) {
    return read_jsonl<DecisionRecord>(path, decision_record_from_json);
}

} // namespace clarify
