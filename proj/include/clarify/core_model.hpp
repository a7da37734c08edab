#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace clarify {

// ============================================================================
// Ambiguity taxonomy
// ============================================================================

enum class AmbiguityCategory {
    Linguistic,
    Intent,
    Contextual,
    Epistemic,
    Interactional,
};

// Sixteen subtypes. The first twelve describe why a seed query is ambiguous;
// the four Interactional subtypes classify user replies, never seed queries.
enum class AmbiguitySubtype {
    Lexical,
    Syntactic,
    Semantic,
    Goal,
    Scope,
    IntentConflict,
    Entity,
    Spatial,
    Temporal,
    KnowledgeGap,
    Unfamiliarity,
    Value,
    PartialVague,
    FactuallyWrong,
    Contradictory,
    OffFocus,
};

AmbiguityCategory category_of(AmbiguitySubtype subtype);
bool is_seed_subtype(AmbiguitySubtype subtype);

const std::vector<AmbiguitySubtype>& all_subtypes();
const std::vector<AmbiguitySubtype>& seed_subtypes();

std::string to_string(AmbiguityCategory category);
std::string to_string(AmbiguitySubtype subtype);
AmbiguitySubtype subtype_from_string(const std::string& name);

// ============================================================================
// Personas
// ============================================================================

enum class Persona {
    Precise,
    PartialVague,
    OffFocus,
    Contradictory,
    FactuallyWrong,
    Refusal,
};

const std::vector<Persona>& all_personas();

std::string to_string(Persona persona);
Persona persona_from_string(const std::string& name);

enum class Level { Low, Medium, High };

// The five behavior dimensions that define a persona.
struct PersonaDimensions {
    Level information_coverage;
    Level truthfulness;
    Level self_consistency;
    Level cooperativeness;
    Level specificity;
};

const PersonaDimensions& dimensions_of(Persona persona);

// Precise and Refusal permit a direct answer once they have replied; the
// other four personas leave the query ambiguous and call for another
// clarification.
bool persona_permits_answer(Persona persona);

// Number of assistant decision points in a dialogue with this persona:
// 2 for Precise/Refusal, 3 for the four noisy personas.
int expected_decision_points(Persona persona);

// ============================================================================
// Actions and dialogues
// ============================================================================

enum class Action { Clarify, Answer };

std::string to_string(Action action);
Action action_from_string(const std::string& name);

enum class Speaker { User, Assistant };

std::string to_string(Speaker speaker);
Speaker speaker_from_string(const std::string& name);

struct Turn {
    Speaker speaker;
    std::string text;
    int turn_index = 0; // 1-based
};

struct Dialogue {
    std::string id;
    AmbiguitySubtype subtype = AmbiguitySubtype::Lexical;
    std::optional<Persona> persona; // absent for single-turn seeds
    std::string source;
    std::vector<Turn> turns;
    // One reference action per assistant decision point (== user turn).
    std::vector<Action> reference_actions;
    // One golden question per Clarify reference action, in order.
    std::vector<std::string> golden_clarifications;

    int decision_points() const;
    // Dialogue prefix ending at the user turn for 1-based decision point t.
    std::vector<Turn> prefix_for_decision(int decision_point) const;
};

// ============================================================================
// Decisions
// ============================================================================

enum class DecisionOutcome { Correct, UnderClarify, OverClarify };

std::string to_string(DecisionOutcome outcome);

struct DecisionRecord {
    std::string dialogue_id;
    int turn_index = 0; // decision point, 1-based
    Action predicted = Action::Clarify;
    Action reference = Action::Clarify;
    DecisionOutcome outcome = DecisionOutcome::Correct;
    std::string raw_response;
};

// Total over the 2x2 action grid: UnderClarify when the model answers a turn
// whose reference is Clarify, OverClarify for the reverse, Correct otherwise.
DecisionOutcome classify_decision(Action predicted, Action reference);

DecisionRecord make_decision_record(const std::string& dialogue_id, int turn_index,
                                    Action predicted, Action reference,
                                    std::string raw_response = {});

// ============================================================================
// Validation
// ============================================================================

struct Violation {
    std::string invariant; // short machine-readable tag
    std::string where;     // dialogue id plus location detail
    std::string detail;
};

// Returns one descriptor per violated invariant; empty means well-formed.
// Violations are data, not exceptions: importers keep malformed dialogues
// and decide what to do with them.
std::vector<Violation> validate_dialogue(const Dialogue& dialogue);

// ============================================================================
// Canonical JSONL records
// ============================================================================

nlohmann::json dialogue_to_json(const Dialogue& dialogue);
Dialogue dialogue_from_json(const nlohmann::json& record);

nlohmann::json decision_record_to_json(const DecisionRecord& record);
DecisionRecord decision_record_from_json(const nlohmann::json& record);

void write_dialogues_jsonl(const std::string& path, const std::vector<Dialogue>& dialogues);
std::vector<Dialogue> read_dialogues_jsonl(const std::string& path);

void write_decision_records_jsonl(const std::string& path, const std::vector<DecisionRecord>& records);
std::vector<DecisionRecord> read_decision_records_jsonl(const std::string& path);

} // namespace clarify
