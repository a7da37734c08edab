#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clarify/core_model.hpp"
#include "clarify/dataset.hpp"
#include "clarify/gateway.hpp"
#include "clarify/slot_fsm.hpp"

namespace clarify {

// ============================================================================
// Stage outputs
// ============================================================================

struct ProposedSlot {
    std::string name;
    bool required = true;
};

struct PerceiverReport {
    std::vector<ProposedSlot> proposed_slots; // honored on the first turn only
    std::vector<SlotObservation> observations;
    std::string notes;

    nlohmann::json to_json() const;
};

struct PersonaEstimate {
    Persona persona = Persona::Precise;
    double confidence = 0.0;
    std::string evidence;

    nlohmann::json to_json() const;
};

struct PlannerDecision {
    Action action = Action::Clarify;
    std::optional<std::string> target_slot;      // set iff action == Clarify
    std::optional<std::string> assumption_note;  // conditional phrasing for answers

    nlohmann::json to_json() const;
};

// Hard cap on model calls within one turn.
struct TurnBudget {
    int max_calls = 5;
    int used = 0;

    void charge(const std::string& stage);
};

// Per-turn scratch shared by the stages: the budget plus the single repair
// allowance ("at most one repair anywhere in a turn").
struct TurnScratch {
    TurnBudget budget;
    bool repair_used = false;

    bool take_repair() {
        if (repair_used) return false;
        repair_used = true;
        return true;
    }
};

struct TurnContext {
    const std::vector<Turn>& history;
    int decision_point = 1;
};

// ============================================================================
// Pluggable stages
// ============================================================================

class Perceiver {
public:
    virtual ~Perceiver() = default;
    virtual PerceiverReport perceive(const TurnContext& context, const SlotSchema* schema,
                                     bool may_propose_schema, TurnScratch& scratch) = 0;
};

class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual PersonaEstimate forecast(const TurnContext& context, TurnScratch& scratch) = 0;
};

// LLM-backed stages issue one model call each, with a shared single repair
// call on malformed output.
std::unique_ptr<Perceiver> make_llm_perceiver(Gateway& gateway, const std::string& prompt_dir);
std::unique_ptr<Forecaster> make_llm_forecaster(Gateway& gateway, const std::string& prompt_dir);

// Ground-truth stages driven by construction-time oracle packs; they issue no
// model calls. The session's dialogue id selects the right oracle record.
class OracleIndex {
public:
    explicit OracleIndex(std::vector<DialogueOracle> oracles);
    const DialogueOracle& lookup(const std::string& dialogue_id) const;

private:
    std::map<std::string, DialogueOracle> by_id_;
};

std::unique_ptr<Perceiver> make_oracle_perceiver(std::shared_ptr<const OracleIndex> index,
                                                 std::string dialogue_id);
std::unique_ptr<Forecaster> make_oracle_forecaster(std::shared_ptr<const OracleIndex> index,
                                                   std::string dialogue_id);

// ============================================================================
// Planner policy
// ============================================================================

// Symbolic ask-or-answer policy, in order:
//   1. RSC satisfied                          -> Answer
//   2. persona == Refusal                     -> Answer, assumptions noted
//   3. some slot re-asked max_reasks times    -> Answer, "unlikely to help"
//   4. otherwise                              -> Clarify the head unresolved slot
// A slot's re-ask count is the number of Clarify decisions that targeted it
// beyond the first ask.
PlannerDecision planner_policy(const DialogueState& state, const PersonaEstimate& persona,
                               const std::map<std::string, int>& clarify_counts_by_slot,
                               int max_reasks);

// The two mandated response prefixes.
std::string response_prefix(Action action);
bool response_conforms(const std::string& text, Action action);

// Deterministic conforming response used as the repair fallback and by
// template-output sessions.
std::string fallback_response(const PlannerDecision& decision);

// ============================================================================
// Session
// ============================================================================

struct AgentOptions {
    int max_calls_per_turn = 5;
    int max_reasks = 2;
    int max_proposed_slots = 5;
    // Render the Output stage from templates instead of a model call.
    bool template_output = false;
    // Teacher-forced evaluation: the caller injects the dataset's assistant
    // turns and the session keeps deciding after an Answer.
    bool replay_mode = false;
    // Let the Planner spend one reasoning call when the persona estimate is
    // weaker than this; 0 keeps the planner fully symbolic.
    double planner_reasoning_below = 0.0;
    std::string prompt_dir = "data/prompts";
};

struct TurnResult {
    std::string final_text;
    PlannerDecision decision;
    PerceiverReport perceiver;
    PersonaEstimate persona;
    nlohmann::json state_before;
    nlohmann::json state_after;
    int calls_used = 0;
    nlohmann::json audit; // {perceiver, persona, state_before, state_after,
                          //  decision, calls_used, final_text}
};

class AgentSession {
public:
    AgentSession(Gateway& gateway, AgentOptions options,
                 std::optional<SlotSchema> schema = std::nullopt,
                 std::unique_ptr<Perceiver> perceiver = nullptr,
                 std::unique_ptr<Forecaster> forecaster = nullptr);

    // Runs Input -> Perceiver -> Tracker -> Forecaster -> Planner -> Output
    // for one user turn. Throws StateError once the session is terminal
    // (unless replaying) and BudgetExceededError if a turn would exceed the
    // call cap.
    TurnResult agent_turn(const std::string& user_text);

    // Replay support: appends the dataset's assistant turn to the context.
    void inject_assistant_turn(const std::string& text);

    bool terminal() const { return terminal_; }
    int decision_point() const { return decision_point_; }
    const std::optional<DialogueState>& state() const { return state_; }
    const std::vector<Turn>& history() const { return history_; }

private:
    std::string respond(const PlannerDecision& decision, TurnScratch& scratch);
    std::optional<PlannerDecision> planner_reasoning_call(const PlannerDecision& symbolic,
                                                          TurnScratch& scratch);

    Gateway& gateway_;
    AgentOptions options_;
    std::optional<SlotSchema> schema_;
    std::optional<DialogueState> state_;
    std::unique_ptr<Perceiver> perceiver_;
    std::unique_ptr<Forecaster> forecaster_;
    std::vector<Turn> history_;
    std::map<std::string, int> clarify_counts_;
    int decision_point_ = 0;
    int next_turn_index_ = 1;
    bool terminal_ = false;
};

} // namespace clarify
