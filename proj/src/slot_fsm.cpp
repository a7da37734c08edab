#include "clarify/slot_fsm.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "clarify/errors.hpp"

namespace clarify {

using nlohmann::json;

// ============================================================================
// Schema
// ============================================================================

void SlotSchema::validate() const {
    if (slots.empty()) throw InvalidArgumentError("slot schema needs at least one slot");
    std::unordered_set<std::string> seen;
    for (const auto& s : slots) {
        if (s.empty()) throw InvalidArgumentError("empty slot name");
        if (!seen.insert(s).second) throw InvalidArgumentError("duplicate slot name: " + s);
    }
    for (const auto& r : required) {
        if (!seen.count(r))
            throw InvalidArgumentError("required slot '" + r + "' not in schema");
    }
}

bool SlotSchema::is_required(const std::string& slot) const {
    return std::find(required.begin(), required.end(), slot) != required.end();
}

bool SlotSchema::has_slot(const std::string& slot) const {
    return std::find(slots.begin(), slots.end(), slot) != slots.end();
}

// ============================================================================
// Status / state
// ============================================================================

std::string to_string(SlotState state) {
    switch (state) {
        case SlotState::Unfilled: return "unfilled";
        case SlotState::Filled: return "filled";
        case SlotState::Conflict: return "conflict";
    }
    throw InvalidArgumentError("unknown slot state");
}

SlotState slot_state_from_string(const std::string& name) {
    if (name == "unfilled") return SlotState::Unfilled;
    if (name == "filled") return SlotState::Filled;
    if (name == "conflict") return SlotState::Conflict;
    throw ParseError("unknown slot state: '" + name + "'");
}

bool operator==(const SlotStatus& a, const SlotStatus& b) {
    return a.state == b.state && a.value == b.value;
}

DialogueState::DialogueState(SlotSchema schema) : schema_(std::move(schema)) {
    schema_.validate();
    statuses_.assign(schema_.slots.size(), SlotStatus::unfilled());
}

DialogueState::DialogueState(SlotSchema schema, std::vector<SlotStatus> statuses, int turn)
    : schema_(std::move(schema)), statuses_(std::move(statuses)), turn_(turn) {
    schema_.validate();
    if (statuses_.size() != schema_.slots.size())
        throw InvalidArgumentError("status vector does not match schema slots");
    if (turn_ < 0) throw InvalidArgumentError("turn must be >= 0");
}

const SlotStatus& DialogueState::status(const std::string& slot) const {
    for (size_t i = 0; i < schema_.slots.size(); ++i)
        if (schema_.slots[i] == slot) return statuses_[i];
    throw StateError("unknown slot: '" + slot + "'");
}

bool operator==(const DialogueState& a, const DialogueState& b) {
    return a.schema().slots == b.schema().slots && a.schema().required == b.schema().required &&
           a.turn() == b.turn() && a.statuses() == b.statuses();
}

json DialogueState::to_json() const {
    json slots = json::object();
    for (size_t i = 0; i < schema_.slots.size(); ++i) {
        json entry = {{"status", to_string(statuses_[i].state)}};
        if (statuses_[i].value) entry["value"] = *statuses_[i].value;
        slots[schema_.slots[i]] = std::move(entry);
    }
    return {{"turn", turn_}, {"slots", slots}};
}

DialogueState DialogueState::from_json(const json& snapshot, SlotSchema schema) {
    schema.validate();
    std::vector<SlotStatus> statuses;
    const auto& slots = snapshot.at("slots");
    for (const auto& name : schema.slots) {
        const auto& entry = slots.at(name);
        SlotStatus st;
        st.state = slot_state_from_string(entry.at("status").get<std::string>());
        if (entry.contains("value")) st.value = entry.at("value").get<std::string>();
        statuses.push_back(std::move(st));
    }
    return DialogueState(std::move(schema), std::move(statuses), snapshot.at("turn").get<int>());
}

// ============================================================================
// Transitions
// ============================================================================

std::string to_string(Relation relation) {
    return relation == Relation::Provides ? "provides" : "contradicts";
}

Relation relation_from_string(const std::string& name) {
    if (name == "provides") return Relation::Provides;
    if (name == "contradicts") return Relation::Contradicts;
    throw ParseError("unknown relation: '" + name + "'");
}

std::string normalize_slot_value(const std::string& value) {
    size_t begin = 0, end = value.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(value[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(value[end - 1]))) --end;
    std::string out = value.substr(begin, end - begin);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace {

SlotStatus step(const SlotStatus& current, const SlotObservation& obs) {
    if (obs.relation == Relation::Contradicts)
        return SlotStatus::conflict(obs.extracted_value);
    switch (current.state) {
        case SlotState::Unfilled:
            return SlotStatus::filled(obs.extracted_value);
        case SlotState::Filled:
            if (normalize_slot_value(*current.value) == normalize_slot_value(obs.extracted_value))
                return current;
            return SlotStatus::conflict(obs.extracted_value);
        case SlotState::Conflict:
            return SlotStatus::filled(obs.extracted_value);
    }
    throw InvalidArgumentError("unknown slot state");
}

} // namespace

DialogueState apply_observations(const DialogueState& state,
                                 const std::vector<SlotObservation>& observations) {
    const auto& slots = state.schema().slots;
    std::vector<SlotStatus> next = state.statuses();
    for (const auto& obs : observations) {
        auto it = std::find(slots.begin(), slots.end(), obs.slot);
        if (it == slots.end())
            throw StateError("observation for slot '" + obs.slot + "' not in schema");
        auto idx = static_cast<size_t>(it - slots.begin());
        next[idx] = step(next[idx], obs);
    }
    return DialogueState(state.schema(), std::move(next), state.turn() + 1);
}

bool rsc_satisfied(const DialogueState& state) {
    const auto& schema = state.schema();
    for (size_t i = 0; i < schema.slots.size(); ++i) {
        if (state.statuses()[i].state == SlotState::Conflict) return false;
        if (schema.is_required(schema.slots[i]) &&
            state.statuses()[i].state != SlotState::Filled)
            return false;
    }
    return true;
}

std::vector<std::string> unresolved_slots(const DialogueState& state) {
    const auto& schema = state.schema();
    std::vector<std::string> out;
    for (size_t i = 0; i < schema.slots.size(); ++i)
        if (state.statuses()[i].state == SlotState::Conflict) out.push_back(schema.slots[i]);
    for (size_t i = 0; i < schema.slots.size(); ++i)
        if (state.statuses()[i].state == SlotState::Unfilled &&
            schema.is_required(schema.slots[i]))
            out.push_back(schema.slots[i]);
    for (size_t i = 0; i < schema.slots.size(); ++i)
        if (state.statuses()[i].state == SlotState::Unfilled &&
            !schema.is_required(schema.slots[i]))
            out.push_back(schema.slots[i]);
    return out;
}

} // namespace clarify
