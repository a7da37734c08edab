#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "clarify/core_model.hpp"
#include "clarify/gateway.hpp"
#include "clarify/slot_fsm.hpp"

namespace clarify {

// ============================================================================
// Scenarios
// ============================================================================

// One ambiguity-relevant slot with the ground-truth value a Precise user
// would give, plus the material the noisy personas draw on.
struct ScenarioSlot {
    std::string name;
    std::string true_value;
    std::string false_value;                                  // factually wrong material
    std::vector<std::string> hints;                            // vague associations
    std::optional<std::pair<std::string, std::string>> conflict_pair;
    bool required = true;
};

struct Scenario {
    std::string id;
    std::string seed_query;
    std::string clarifying_question;
    AmbiguitySubtype subtype = AmbiguitySubtype::Goal;
    std::vector<ScenarioSlot> slots;
    std::vector<std::string> off_topic; // reply lines sharing no slot terms

    SlotSchema schema() const;
    const ScenarioSlot* find_slot(const std::string& name) const;

    static Scenario from_json(const nlohmann::json& pack);
    nlohmann::json to_json() const;
};

// Loads every *.json pack in a directory, sorted by scenario id.
std::vector<Scenario> load_scenario_packs(const std::string& dir);

// ============================================================================
// Persona replies
// ============================================================================

struct PersonaReplySpec {
    Persona persona = Persona::Precise;
    bool resolves_ambiguity = false; // true only for Precise
};

PersonaReplySpec reply_spec_for(Persona persona);

// The reference action for the assistant decision point that follows a
// fidelity-passing reply of this persona.
Action reference_action_after(Persona persona);

struct SimulationContext {
    std::vector<Turn> history;          // dialogue so far, assistant last
    Persona persona = Persona::Precise;
    std::string clarifying_question;    // the question being answered
    Scenario scenario;                  // carries the facts
    std::uint64_t seed = 0;
};

enum class SimulatorMode { Template, Model };

struct SimulatedReply {
    std::string text;
    PersonaReplySpec spec;
};

// Template mode is a pure function of (persona, scenario, seed). Model mode
// prompts the gateway, style-checks the reply, regenerates once on a
// violation and then fails with a persona-fidelity error.
SimulatedReply simulate_reply(const SimulationContext& context, SimulatorMode mode,
                              Gateway* gateway = nullptr,
                              const std::string& prompt_dir = {});

// ============================================================================
// Style checking
// ============================================================================

struct FidelityResult {
    bool ok = true;
    std::vector<std::string> violations;
};

// What a perfect Perceiver would extract from a template reply of this
// persona: Provides observations for Precise (all required facts), the two
// conflicting statements for Contradictory, a Contradicts observation for
// FactuallyWrong, and nothing for the other three. The seed selects the same
// slot the template reply talks about.
std::vector<SlotObservation> oracle_observations(Persona persona, const Scenario& scenario,
                                                 std::uint64_t seed);

// Lexical/structural constraints per persona, over slot mentions and marker
// phrases:
//   Precise        every required slot's true value appears
//   PartialVague   >=1 slot mentioned (name, value, or hint) + hedging marker,
//                  without full precise coverage
//   OffFocus       no slot name or value appears
//   Contradictory  both halves of some slot's conflicting pair appear
//   FactuallyWrong some slot's false value appears
//   Refusal        a proceed-anyway marker and no slot values
FidelityResult check_persona_fidelity(const std::string& reply, const PersonaReplySpec& spec,
                                      const Scenario& scenario);

} // namespace clarify
