#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace clarify {

// ============================================================================
// Slot schema and state
// ============================================================================

// The slot set S with its required subset S*. Order is meaningful: it drives
// the deterministic prioritization in unresolved_slots().
struct SlotSchema {
    std::vector<std::string> slots;
    std::vector<std::string> required;

    // Throws InvalidArgumentError unless: n >= 1, names unique,
    // required ⊆ slots.
    void validate() const;
    bool is_required(const std::string& slot) const;
    bool has_slot(const std::string& slot) const;
};

enum class SlotState { Unfilled, Filled, Conflict };

std::string to_string(SlotState state);
SlotState slot_state_from_string(const std::string& name);

struct SlotStatus {
    SlotState state = SlotState::Unfilled;
    // Present iff Filled or Conflict; for Conflict it is the most recent
    // contested value.
    std::optional<std::string> value;

    static SlotStatus unfilled() { return {}; }
    static SlotStatus filled(std::string v) { return {SlotState::Filled, std::move(v)}; }
    static SlotStatus conflict(std::string v) { return {SlotState::Conflict, std::move(v)}; }
};

bool operator==(const SlotStatus& a, const SlotStatus& b);

// Immutable snapshot of the per-slot status vector at turn t.
class DialogueState {
public:
    DialogueState() = default;
    explicit DialogueState(SlotSchema schema);
    DialogueState(SlotSchema schema, std::vector<SlotStatus> statuses, int turn);

    const SlotSchema& schema() const { return schema_; }
    int turn() const { return turn_; }
    const std::vector<SlotStatus>& statuses() const { return statuses_; }
    const SlotStatus& status(const std::string& slot) const;

    nlohmann::json to_json() const;
    static DialogueState from_json(const nlohmann::json& snapshot, SlotSchema schema);

private:
    SlotSchema schema_;
    std::vector<SlotStatus> statuses_; // aligned with schema_.slots
    int turn_ = 0;
};

bool operator==(const DialogueState& a, const DialogueState& b);

// ============================================================================
// Observations and transitions
// ============================================================================

enum class Relation { Provides, Contradicts };

std::string to_string(Relation relation);
Relation relation_from_string(const std::string& name);

struct SlotObservation {
    std::string slot;
    std::string extracted_value;
    Relation relation = Relation::Provides;
};

// Normalization used for re-fill equality: lowercase, leading/trailing
// whitespace trimmed.
std::string normalize_slot_value(const std::string& value);

// Applies one batch of observations and returns the successor state with
// turn+1. Per-slot transitions, applied in observation order:
//   Unfilled + Provides            -> Filled(new)
//   Filled(v) + Provides(v)        -> Filled(v)        (normalized equality)
//   Filled(v) + Provides(w)        -> Conflict(w)
//   any       + Contradicts        -> Conflict(new)
//   Conflict  + Provides           -> Filled(new)      (explicit repair wins)
// Unobserved slots are unchanged. Unknown slot names throw StateError.
DialogueState apply_observations(const DialogueState& state,
                                 const std::vector<SlotObservation>& observations);

// Required-Slot Completion: every required slot Filled and no slot anywhere
// in S in Conflict. The conflict clause deliberately spans all of S, not
// just S*.
bool rsc_satisfied(const DialogueState& state);

// Clarification targets in priority order: Conflict slots (schema order),
// then required Unfilled, then optional Unfilled. The conflict+required
// portion is empty exactly when rsc_satisfied holds.
std::vector<std::string> unresolved_slots(const DialogueState& state);

} // namespace clarify
