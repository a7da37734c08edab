#include "clarify/agent.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "clarify/errors.hpp"
#include "clarify/prompts.hpp"

namespace clarify {

using nlohmann::json;

// ============================================================================
// Stage outputs
// ============================================================================

json PerceiverReport::to_json() const {
    json proposed = json::array();
    for (const auto& slot : proposed_slots)
        proposed.push_back({{"name", slot.name}, {"required", slot.required}});
    json obs = json::array();
    for (const auto& o : observations)
        obs.push_back({{"slot", o.slot},
                       {"value", o.extracted_value},
                       {"relation", to_string(o.relation)}});
    return {{"proposed_slots", proposed}, {"observations", obs}, {"notes", notes}};
}

json PersonaEstimate::to_json() const {
    return {{"persona", to_string(persona)}, {"confidence", confidence}, {"evidence", evidence}};
}

json PlannerDecision::to_json() const {
    json out = {{"action", to_string(action)}};
    if (target_slot) out["target_slot"] = *target_slot;
    if (assumption_note) out["assumption_note"] = *assumption_note;
    return out;
}

void TurnBudget::charge(const std::string& stage) {
    if (used >= max_calls)
        throw BudgetExceededError("model-call budget (" + std::to_string(max_calls) +
                                  ") exhausted at stage '" + stage + "'");
    ++used;
}

// ============================================================================
// Shared helpers
// ============================================================================

namespace {

std::string dialogue_block(const std::vector<Turn>& history) {
    std::ostringstream out;
    for (const auto& turn : history)
        out << (turn.speaker == Speaker::User ? "User: " : "Assistant: ") << turn.text << "\n";
    return out.str();
}

std::string lstrip(const std::string& text) {
    size_t begin = 0;
    while (begin < text.size() && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    return text.substr(begin);
}

std::string lowercase(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

// Tolerates prose around the object: parses the whole response first, then
// the outermost brace span.
std::optional<json> parse_json_object(const std::string& text) {
    json direct = json::parse(text, nullptr, false);
    if (!direct.is_discarded() && direct.is_object()) return direct;
    const auto begin = text.find('{');
    const auto end = text.rfind('}');
    if (begin == std::string::npos || end == std::string::npos || end <= begin)
        return std::nullopt;
    json inner = json::parse(text.substr(begin, end - begin + 1), nullptr, false);
    if (!inner.is_discarded() && inner.is_object()) return inner;
    return std::nullopt;
}

std::optional<Persona> persona_from_text(const std::string& text) {
    std::string normalized = lowercase(text);
    std::replace(normalized.begin(), normalized.end(), '-', '_');
    std::replace(normalized.begin(), normalized.end(), ' ', '_');
    for (Persona p : all_personas())
        if (normalized.find(to_string(p)) != std::string::npos) return p;
    return std::nullopt;
}

} // namespace

// ============================================================================
// LLM-backed stages
// ============================================================================

namespace {

class LlmPerceiver final : public Perceiver {
public:
    LlmPerceiver(Gateway& gateway, std::string prompt_dir)
        : gateway_(gateway), prompts_(std::move(prompt_dir)) {}

    PerceiverReport perceive(const TurnContext& context, const SlotSchema* schema,
                             bool may_propose_schema, TurnScratch& scratch) override {
        std::string slot_list = "(none yet)";
        if (schema != nullptr && !schema->slots.empty()) {
            slot_list.clear();
            for (const auto& slot : schema->slots) {
                if (!slot_list.empty()) slot_list += ", ";
                slot_list += slot + (schema->is_required(slot) ? " (required)" : " (optional)");
            }
        }
        std::vector<ChatMessage> messages = {
            {"system", prompts_.render("perceiver",
                                       {{"dialogue", dialogue_block(context.history)},
                                        {"slots", slot_list},
                                        {"may_propose", may_propose_schema ? "yes" : "no"}})},
            {"user", "Extract the observations now. Output only the JSON object."},
        };

        scratch.budget.charge("perceiver");
        std::string response = gateway_.complete_one(messages);
        auto parsed = parse_json_object(response);
        if (!parsed && scratch.take_repair()) {
            messages.push_back({"assistant", response});
            messages.push_back(
                {"user", "That was not valid JSON. Output only the JSON object, nothing else."});
            scratch.budget.charge("perceiver repair");
            response = gateway_.complete_one(messages);
            parsed = parse_json_object(response);
        }
        if (!parsed) throw ParseError("perception failure: unparseable report: " +
                                      response.substr(0, 120));
        return report_from_json(*parsed, schema, may_propose_schema);
    }

private:
    PerceiverReport report_from_json(const json& parsed, const SlotSchema* schema,
                                     bool may_propose_schema) {
        PerceiverReport report;
        report.notes = parsed.value("notes", "");
        if (may_propose_schema && parsed.contains("slots")) {
            for (const auto& slot : parsed.at("slots")) {
                if (slot.is_string())
                    report.proposed_slots.push_back({slot.get<std::string>(), true});
                else
                    report.proposed_slots.push_back(
                        {slot.at("name").get<std::string>(), slot.value("required", true)});
            }
        }
        if (parsed.contains("observations")) {
            for (const auto& o : parsed.at("observations")) {
                if (!o.contains("slot") || !o.contains("value")) continue;
                SlotObservation obs;
                obs.slot = o.at("slot").get<std::string>();
                obs.extracted_value = o.at("value").get<std::string>();
                obs.relation = o.value("relation", "provides") == "contradicts"
                                   ? Relation::Contradicts
                                   : Relation::Provides;
                const bool known = schema != nullptr && schema->has_slot(obs.slot);
                const bool proposed = std::any_of(
                    report.proposed_slots.begin(), report.proposed_slots.end(),
                    [&](const ProposedSlot& p) { return p.name == obs.slot; });
                if (known || proposed) {
                    report.observations.push_back(std::move(obs));
                } else {
                    report.notes += (report.notes.empty() ? "" : " ") + std::string("dropped ") +
                                    "observation for unknown slot '" + obs.slot + "'.";
                }
            }
        }
        return report;
    }

    Gateway& gateway_;
    PromptLibrary prompts_;
};

class LlmForecaster final : public Forecaster {
public:
    LlmForecaster(Gateway& gateway, std::string prompt_dir)
        : gateway_(gateway), prompts_(std::move(prompt_dir)) {}

    PersonaEstimate forecast(const TurnContext& context, TurnScratch& scratch) override {
        std::vector<ChatMessage> messages = {
            {"system",
             prompts_.render("forecaster", {{"dialogue", dialogue_block(context.history)}})},
            {"user", "Classify the user persona now. Output only the JSON object."},
        };

        scratch.budget.charge("forecaster");
        std::string response = gateway_.complete_one(messages);
        auto estimate = parse_estimate(response);
        if (!estimate && scratch.take_repair()) {
            messages.push_back({"assistant", response});
            messages.push_back({"user", "That was not one of the six persona labels. Output "
                                        "only the JSON object with a valid persona."});
            scratch.budget.charge("forecaster repair");
            response = gateway_.complete_one(messages);
            estimate = parse_estimate(response);
        }
        if (!estimate) {
            // Unknown persona degrades to the most clarify-leaning reading.
            return {Persona::PartialVague, 0.0,
                    "unparseable forecast: " + response.substr(0, 80)};
        }
        return *estimate;
    }

private:
    static std::optional<PersonaEstimate> parse_estimate(const std::string& response) {
        if (auto parsed = parse_json_object(response)) {
            if (parsed->contains("persona")) {
                auto persona = persona_from_text(parsed->at("persona").get<std::string>());
                if (persona) {
                    PersonaEstimate estimate;
                    estimate.persona = *persona;
                    estimate.confidence =
                        std::clamp(parsed->value("confidence", 0.5), 0.0, 1.0);
                    estimate.evidence = parsed->value("evidence", "");
                    return estimate;
                }
            }
        }
        if (auto persona = persona_from_text(response))
            return PersonaEstimate{*persona, 0.5, "bare label"};
        return std::nullopt;
    }

    Gateway& gateway_;
    PromptLibrary prompts_;
};

} // namespace

std::unique_ptr<Perceiver> make_llm_perceiver(Gateway& gateway, const std::string& prompt_dir) {
    return std::make_unique<LlmPerceiver>(gateway, prompt_dir);
}

std::unique_ptr<Forecaster> make_llm_forecaster(Gateway& gateway, const std::string& prompt_dir) {
    return std::make_unique<LlmForecaster>(gateway, prompt_dir);
}

// ============================================================================
// Oracle stages
// ============================================================================

OracleIndex::OracleIndex(std::vector<DialogueOracle> oracles) {
    for (auto& oracle : oracles) by_id_.emplace(oracle.dialogue_id, std::move(oracle));
}

const DialogueOracle& OracleIndex::lookup(const std::string& dialogue_id) const {
    auto it = by_id_.find(dialogue_id);
    if (it == by_id_.end()) throw StateError("no oracle for dialogue '" + dialogue_id + "'");
    return it->second;
}

namespace {

class OraclePerceiver final : public Perceiver {
public:
    OraclePerceiver(std::shared_ptr<const OracleIndex> index, std::string dialogue_id)
        : index_(std::move(index)), dialogue_id_(std::move(dialogue_id)) {}

    PerceiverReport perceive(const TurnContext& context, const SlotSchema* /*schema*/,
                             bool may_propose_schema, TurnScratch& /*scratch*/) override {
        const DialogueOracle& oracle = index_->lookup(dialogue_id_);
        PerceiverReport report;
        if (may_propose_schema) {
            for (const auto& slot : oracle.schema.slots)
                report.proposed_slots.push_back({slot, oracle.schema.is_required(slot)});
        }
        const auto t = static_cast<size_t>(context.decision_point - 1);
        if (t < oracle.observations_per_decision.size())
            report.observations = oracle.observations_per_decision[t];
        report.notes = "oracle";
        return report;
    }

private:
    std::shared_ptr<const OracleIndex> index_;
    std::string dialogue_id_;
};

class OracleForecaster final : public Forecaster {
public:
    OracleForecaster(std::shared_ptr<const OracleIndex> index, std::string dialogue_id)
        : index_(std::move(index)), dialogue_id_(std::move(dialogue_id)) {}

    PersonaEstimate forecast(const TurnContext& /*context*/, TurnScratch& /*scratch*/) override {
        return {index_->lookup(dialogue_id_).persona, 1.0, "oracle"};
    }

private:
    std::shared_ptr<const OracleIndex> index_;
    std::string dialogue_id_;
};

} // namespace

std::unique_ptr<Perceiver> make_oracle_perceiver(std::shared_ptr<const OracleIndex> index,
                                                 std::string dialogue_id) {
    return std::make_unique<OraclePerceiver>(std::move(index), std::move(dialogue_id));
}

std::unique_ptr<Forecaster> make_oracle_forecaster(std::shared_ptr<const OracleIndex> index,
                                                   std::string dialogue_id) {
    return std::make_unique<OracleForecaster>(std::move(index), std::move(dialogue_id));
}

// ============================================================================
// Planner
// ============================================================================

namespace {

// Conditional phrasing covering every blocking slot, rendered so answers can
// state their assumptions explicitly.
std::string assumption_note_for(const DialogueState& state, const std::string& lead_in) {
    std::vector<std::string> parts;
    for (const auto& slot : unresolved_slots(state)) {
        const auto& status = state.status(slot);
        if (status.state == SlotState::Conflict)
            parts.push_back("'" + *status.value + "' (your latest statement) for the " + slot);
        else if (state.schema().is_required(slot))
            parts.push_back("a sensible default for the " + slot);
    }
    if (parts.empty()) return lead_in;
    std::string joined;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) joined += i + 1 == parts.size() ? " and " : ", ";
        joined += parts[i];
    }
    return lead_in + "If you mean " + joined + ", I will proceed on that basis.";
}

} // namespace

PlannerDecision planner_policy(const DialogueState& state, const PersonaEstimate& persona,
                               const std::map<std::string, int>& clarify_counts_by_slot,
                               int max_reasks) {
    PlannerDecision decision;

    if (rsc_satisfied(state)) {
        decision.action = Action::Answer;
        return decision;
    }

    if (persona.persona == Persona::Refusal) {
        decision.action = Action::Answer;
        decision.assumption_note = assumption_note_for(state, "");
        return decision;
    }

    for (const auto& [slot, count] : clarify_counts_by_slot) {
        if (count - 1 >= max_reasks) { // re-asks beyond the first ask
            decision.action = Action::Answer;
            decision.assumption_note = assumption_note_for(
                state, "Further clarification is unlikely to yield more information. ");
            return decision;
        }
    }

    decision.action = Action::Clarify;
    decision.target_slot = unresolved_slots(state).front();
    return decision;
}

// ============================================================================
// Output helpers
// ============================================================================

std::string response_prefix(Action action) {
    return action == Action::Answer ? "The answer is" : "The clarifying question is";
}

bool response_conforms(const std::string& text, Action action) {
    const std::string body = lowercase(lstrip(text));
    const std::string prefix = lowercase(response_prefix(action));
    return body.rfind(prefix, 0) == 0;
}

std::string fallback_response(const PlannerDecision& decision) {
    if (decision.action == Action::Clarify) {
        const std::string slot = decision.target_slot.value_or("missing detail");
        return "The clarifying question is: could you tell me the " + slot + "?";
    }
    if (decision.assumption_note && !decision.assumption_note->empty())
        return "The answer is: " + *decision.assumption_note +
               " Here is my best response given those assumptions.";
    return "The answer is: proceeding with your request using the details you provided.";
}

// ============================================================================
// Session
// ============================================================================

AgentSession::AgentSession(Gateway& gateway, AgentOptions options,
                           std::optional<SlotSchema> schema,
                           std::unique_ptr<Perceiver> perceiver,
                           std::unique_ptr<Forecaster> forecaster)
    : gateway_(gateway), options_(std::move(options)), schema_(std::move(schema)),
      perceiver_(std::move(perceiver)), forecaster_(std::move(forecaster)) {
    if (!perceiver_) perceiver_ = make_llm_perceiver(gateway_, options_.prompt_dir);
    if (!forecaster_) forecaster_ = make_llm_forecaster(gateway_, options_.prompt_dir);
    if (schema_) {
        schema_->validate();
        state_ = DialogueState(*schema_);
    }
}

void AgentSession::inject_assistant_turn(const std::string& text) {
    history_.push_back({Speaker::Assistant, text, next_turn_index_++});
}

TurnResult AgentSession::agent_turn(const std::string& user_text) {
    if (terminal_ && !options_.replay_mode)
        throw StateError("session is terminal: an answer has already been emitted");

    // Input: normalize and append the latest user utterance.
    std::string normalized = lstrip(user_text);
    while (!normalized.empty() && std::isspace(static_cast<unsigned char>(normalized.back())))
        normalized.pop_back();
    if (normalized.empty()) throw InvalidArgumentError("empty user turn");
    history_.push_back({Speaker::User, normalized, next_turn_index_++});
    ++decision_point_;

    TurnScratch scratch;
    scratch.budget.max_calls = options_.max_calls_per_turn;
    TurnContext context{history_, decision_point_};

    TurnResult result;
    result.state_before = state_ ? state_->to_json() : json(nullptr);

    // Perceiver, then Tracker.
    const bool may_propose = decision_point_ == 1;
    result.perceiver = perceiver_->perceive(context, schema_ ? &*schema_ : nullptr,
                                            may_propose, scratch);
    if (may_propose && !result.perceiver.proposed_slots.empty()) {
        SlotSchema merged = schema_.value_or(SlotSchema{});
        for (const auto& proposal : result.perceiver.proposed_slots) {
            if (static_cast<int>(merged.slots.size()) >= options_.max_proposed_slots) break;
            if (merged.has_slot(proposal.name)) continue;
            merged.slots.push_back(proposal.name);
            if (proposal.required) merged.required.push_back(proposal.name);
        }
        if (!merged.slots.empty()) {
            schema_ = merged;
            state_ = DialogueState(*schema_);
        }
    }
    if (state_) {
        std::vector<SlotObservation> known;
        for (const auto& obs : result.perceiver.observations)
            if (schema_->has_slot(obs.slot)) known.push_back(obs);
        state_ = apply_observations(*state_, known);
    }

    // Forecaster; the first turn has no reply to judge yet.
    result.persona = decision_point_ == 1
                         ? PersonaEstimate{Persona::Precise, 0.0, "first turn default"}
                         : forecaster_->forecast(context, scratch);

    // Planner. Without any tracked slots there is nothing to clarify.
    if (state_) {
        result.decision = planner_policy(*state_, result.persona, clarify_counts_,
                                         options_.max_reasks);
    } else {
        result.decision.action = Action::Answer;
    }
    if (result.persona.confidence < options_.planner_reasoning_below) {
        if (auto overridden = planner_reasoning_call(result.decision, scratch))
            result.decision = *overridden;
    }
    if (result.decision.action == Action::Clarify && result.decision.target_slot)
        ++clarify_counts_[*result.decision.target_slot];

    // Output.
    result.final_text = respond(result.decision, scratch);
    if (result.decision.action == Action::Answer) terminal_ = true;
    if (!options_.replay_mode)
        history_.push_back({Speaker::Assistant, result.final_text, next_turn_index_++});

    result.state_after = state_ ? state_->to_json() : json(nullptr);
    result.calls_used = scratch.budget.used;
    result.audit = {{"perceiver", result.perceiver.to_json()},
                    {"persona", result.persona.to_json()},
                    {"state_before", result.state_before},
                    {"state_after", result.state_after},
                    {"decision", result.decision.to_json()},
                    {"calls_used", result.calls_used},
                    {"final_text", result.final_text}};
    return result;
}

std::optional<PlannerDecision> AgentSession::planner_reasoning_call(
    const PlannerDecision& symbolic, TurnScratch& scratch) {
    if (options_.planner_reasoning_below <= 0.0) return std::nullopt;
    if (!state_) return std::nullopt;
    // Leave room for the Output call.
    if (scratch.budget.used >= scratch.budget.max_calls - 1) return std::nullopt;

    PromptLibrary prompts(options_.prompt_dir);
    try {
        scratch.budget.charge("planner");
        const std::string response = gateway_.complete_one({
            {"system", prompts.render("planner", {{"dialogue", dialogue_block(history_)},
                                                  {"state", state_->to_json().dump()}})},
            {"user", "Decide now. Output only the JSON object."},
        });
        auto parsed = parse_json_object(response);
        if (!parsed || !parsed->contains("action")) return std::nullopt;
        const std::string action = lowercase(parsed->value("action", ""));
        if (action != "clarify" && action != "answer") return std::nullopt;
        PlannerDecision decision = symbolic;
        decision.action = action == "clarify" ? Action::Clarify : Action::Answer;
        if (decision.action == Action::Clarify) {
            std::string target = parsed->value("target_slot", "");
            auto unresolved = unresolved_slots(*state_);
            if (unresolved.empty()) return std::nullopt; // nothing left to ask about
            if (std::find(unresolved.begin(), unresolved.end(), target) == unresolved.end())
                target = unresolved.front();
            decision.target_slot = target;
            decision.assumption_note.reset();
        } else if (!decision.assumption_note) {
            decision.assumption_note = assumption_note_for(*state_, "");
        }
        return decision;
    } catch (const Error&) {
        return std::nullopt; // planning stays total: fall back to the symbolic decision
    }
}

std::string AgentSession::respond(const PlannerDecision& decision, TurnScratch& scratch) {
    if (options_.template_output) return fallback_response(decision);

    PromptLibrary prompts(options_.prompt_dir);
    const std::string instruction =
        decision.action == Action::Clarify
            ? "Ask one focused clarifying question about the " +
                  decision.target_slot.value_or("missing information") + "."
            : std::string("Give the user a direct, helpful answer.") +
                  (decision.assumption_note
                       ? " State your assumptions conditionally: " + *decision.assumption_note
                       : "");
    std::vector<ChatMessage> messages = {
        {"system", prompts.render("output", {{"dialogue", dialogue_block(history_)},
                                             {"instruction", instruction},
                                             {"prefix", response_prefix(decision.action)}})},
        {"user", "Write the response now."},
    };

    scratch.budget.charge("output");
    std::string text = gateway_.complete_one(messages);
    if (response_conforms(text, decision.action)) return text;

    if (scratch.take_repair()) {
        messages.push_back({"assistant", text});
        messages.push_back({"user", "Your response must begin with '" +
                                        response_prefix(decision.action) +
                                        "'. Rewrite it with that exact prefix."});
        scratch.budget.charge("output repair");
        text = gateway_.complete_one(messages);
        if (response_conforms(text, decision.action)) return text;
    }
    return fallback_response(decision);
}

} // namespace clarify
