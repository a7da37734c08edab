#include "clarify/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clarify/errors.hpp"
#include "clarify/prompts.hpp"

namespace clarify {

using nlohmann::json;
namespace fs = std::filesystem;

// ============================================================================
// Scenarios
// ============================================================================

SlotSchema Scenario::schema() const {
    SlotSchema schema;
    for (const auto& slot : slots) {
        schema.slots.push_back(slot.name);
        if (slot.required) schema.required.push_back(slot.name);
    }
    schema.validate();
    return schema;
}

const ScenarioSlot* Scenario::find_slot(const std::string& name) const {
    for (const auto& slot : slots)
        if (slot.name == name) return &slot;
    return nullptr;
}

Scenario Scenario::from_json(const json& pack) {
    Scenario s;
    s.id = pack.at("scenario_id").get<std::string>();
    s.seed_query = pack.at("seed_query").get<std::string>();
    s.clarifying_question = pack.value("clarifying_question", "");
    s.subtype = subtype_from_string(pack.at("subtype").get<std::string>());
    for (const auto& slot : pack.at("slots")) {
        ScenarioSlot out;
        out.name = slot.at("name").get<std::string>();
        out.true_value = slot.at("true_value").get<std::string>();
        out.false_value = slot.value("false_value", "");
        if (slot.contains("hints"))
            out.hints = slot.at("hints").get<std::vector<std::string>>();
        if (slot.contains("conflict_pair")) {
            const auto& pair = slot.at("conflict_pair");
            out.conflict_pair = std::make_pair(pair.at(0).get<std::string>(),
                                               pair.at(1).get<std::string>());
        }
        out.required = slot.value("required", true);
        s.slots.push_back(std::move(out));
    }
    if (pack.contains("off_topic"))
        s.off_topic = pack.at("off_topic").get<std::vector<std::string>>();
    return s;
}

json Scenario::to_json() const {
    json slots_json = json::array();
    for (const auto& slot : slots) {
        json entry = {{"name", slot.name},
                      {"true_value", slot.true_value},
                      {"false_value", slot.false_value},
                      {"hints", slot.hints},
                      {"required", slot.required}};
        if (slot.conflict_pair)
            entry["conflict_pair"] = {slot.conflict_pair->first, slot.conflict_pair->second};
        slots_json.push_back(std::move(entry));
    }
    return {{"scenario_id", id},
            {"seed_query", seed_query},
            {"clarifying_question", clarifying_question},
            {"subtype", to_string(subtype)},
            {"slots", slots_json},
            {"off_topic", off_topic}};
}

std::vector<Scenario> load_scenario_packs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("scenario directory not found: " + dir);
    std::vector<Scenario> out;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open scenario pack: " + path.string());
        json pack = json::parse(in, nullptr, false);
        if (pack.is_discarded()) throw ParseError("malformed scenario pack: " + path.string());
        out.push_back(Scenario::from_json(pack));
    }
    std::sort(out.begin(), out.end(),
              [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    return out;
}

// ============================================================================
// Specs and markers
// ============================================================================

PersonaReplySpec reply_spec_for(Persona persona) {
    return {persona, persona == Persona::Precise};
}

Action reference_action_after(Persona persona) {
    return persona_permits_answer(persona) ? Action::Answer : Action::Clarify;
}

namespace {

const std::vector<std::string>& hedge_markers() {
    static const std::vector<std::string> kMarkers = {
        "maybe", "perhaps", "sort of", "i guess", "not sure", "probably",
        "somewhere", "something like", "kind of", "roughly", "or so", "early",
    };
    return kMarkers;
}

const std::vector<std::string>& proceed_markers() {
    static const std::vector<std::string> kMarkers = {
        "just make", "just pick", "just go", "anything is fine", "you decide",
        "up to you", "go ahead", "don't ask", "no more questions",
        "whatever you think", "doesn't matter", "surprise me",
    };
    return kMarkers;
}

std::string lowercase(const std::string& text) {
    std::string out = text;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(const std::string& haystack_lower, const std::string& needle) {
    if (needle.empty()) return false;
    return haystack_lower.find(lowercase(needle)) != std::string::npos;
}

// Name or stated value. Used where a persona must avoid slot content.
bool mentions_slot_strict(const std::string& reply_lower, const ScenarioSlot& slot) {
    return contains_ci(reply_lower, slot.name) || contains_ci(reply_lower, slot.true_value) ||
           contains_ci(reply_lower, slot.false_value);
}

// Adds the vague associations; used where a persona must gesture at a slot.
bool mentions_slot_loose(const std::string& reply_lower, const ScenarioSlot& slot) {
    if (mentions_slot_strict(reply_lower, slot)) return true;
    for (const auto& hint : slot.hints)
        if (contains_ci(reply_lower, hint)) return true;
    return false;
}

bool mentions_any_value(const std::string& reply_lower, const Scenario& scenario) {
    for (const auto& slot : scenario.slots) {
        if (contains_ci(reply_lower, slot.true_value)) return true;
        if (contains_ci(reply_lower, slot.false_value)) return true;
    }
    return false;
}

bool covers_all_required(const std::string& reply_lower, const Scenario& scenario) {
    for (const auto& slot : scenario.slots)
        if (slot.required && !contains_ci(reply_lower, slot.true_value)) return false;
    return true;
}

} // namespace

// ============================================================================
// Fidelity checking
// ============================================================================

FidelityResult check_persona_fidelity(const std::string& reply, const PersonaReplySpec& spec,
                                      const Scenario& scenario) {
    FidelityResult result;
    const std::string reply_lower = lowercase(reply);
    auto fail = [&result](std::string violation) {
        result.ok = false;
        result.violations.push_back(std::move(violation));
    };

    switch (spec.persona) {
        case Persona::Precise: {
            for (const auto& slot : scenario.slots)
                if (slot.required && !contains_ci(reply_lower, slot.true_value))
                    fail("coverage: missing fact for slot '" + slot.name + "'");
            break;
        }
        case Persona::PartialVague: {
            bool mentioned = std::any_of(
                scenario.slots.begin(), scenario.slots.end(),
                [&](const ScenarioSlot& s) { return mentions_slot_loose(reply_lower, s); });
            if (!mentioned) fail("vagueness: no slot mentioned even loosely");
            bool hedged = std::any_of(hedge_markers().begin(), hedge_markers().end(),
                                      [&](const std::string& m) { return contains_ci(reply_lower, m); });
            if (!hedged) fail("vagueness: no hedging marker");
            if (covers_all_required(reply_lower, scenario))
                fail("vagueness: reply fully resolves the query");
            break;
        }
        case Persona::OffFocus: {
            for (const auto& slot : scenario.slots)
                if (mentions_slot_strict(reply_lower, slot))
                    fail("off-focus: mentions slot '" + slot.name + "'");
            break;
        }
        case Persona::Contradictory: {
            bool conflicting = false;
            for (const auto& slot : scenario.slots) {
                if (slot.conflict_pair && contains_ci(reply_lower, slot.conflict_pair->first) &&
                    contains_ci(reply_lower, slot.conflict_pair->second))
                    conflicting = true;
                if (contains_ci(reply_lower, slot.true_value) &&
                    contains_ci(reply_lower, slot.false_value))
                    conflicting = true;
            }
            if (!conflicting) fail("contradiction: no pair of conflicting value statements");
            break;
        }
        case Persona::FactuallyWrong: {
            bool wrong = std::any_of(
                scenario.slots.begin(), scenario.slots.end(),
                [&](const ScenarioSlot& s) { return contains_ci(reply_lower, s.false_value); });
            if (!wrong) fail("factuality: no value flagged false appears");
            break;
        }
        case Persona::Refusal: {
            bool proceeds = std::any_of(proceed_markers().begin(), proceed_markers().end(),
                                        [&](const std::string& m) { return contains_ci(reply_lower, m); });
            if (!proceeds) fail("refusal: no proceed-anyway marker");
            if (mentions_any_value(reply_lower, scenario))
                fail("refusal: reply adds slot information");
            break;
        }
    }
    return result;
}

// ============================================================================
// Template replies
// ============================================================================

namespace {

const ScenarioSlot& pick_slot(const Scenario& scenario, std::uint64_t seed,
                              bool (*eligible)(const ScenarioSlot&)) {
    std::vector<const ScenarioSlot*> candidates;
    for (const auto& slot : scenario.slots)
        if (eligible(slot)) candidates.push_back(&slot);
    if (candidates.empty())
        throw InvalidArgumentError("scenario '" + scenario.id +
                                   "' has no slot usable for this persona");
    return *candidates[seed % candidates.size()];
}

std::string template_reply(const SimulationContext& ctx) {
    const Scenario& sc = ctx.scenario;
    const std::uint64_t seed = ctx.seed;
    switch (ctx.persona) {
        case Persona::Precise: {
            std::string out;
            for (const auto& slot : sc.slots) {
                if (!slot.required) continue;
                if (!out.empty()) out += " ";
                out += (seed % 2 == 0)
                           ? "For the " + slot.name + ", " + slot.true_value + "."
                           : "The " + slot.name + " should be " + slot.true_value + ".";
            }
            return out;
        }
        case Persona::PartialVague: {
            const auto& slot = pick_slot(sc, seed, [](const ScenarioSlot& s) { return true; });
            const std::string hint = slot.hints.empty() ? slot.name : slot.hints[seed % slot.hints.size()];
            return (seed % 2 == 0)
                       ? "I have not decided, maybe something like " + hint +
                             " for the " + slot.name + ", I guess."
                       : "Hard to say, probably " + hint + " or so when it comes to the " +
                             slot.name + ".";
        }
        case Persona::OffFocus: {
            if (sc.off_topic.empty())
                throw InvalidArgumentError("scenario '" + sc.id + "' has no off-topic lines");
            return sc.off_topic[seed % sc.off_topic.size()];
        }
        case Persona::Contradictory: {
            const auto& slot = pick_slot(sc, seed, [](const ScenarioSlot& s) {
                return s.conflict_pair.has_value() || !s.false_value.empty();
            });
            const std::string a = slot.conflict_pair ? slot.conflict_pair->first : slot.true_value;
            const std::string b = slot.conflict_pair ? slot.conflict_pair->second : slot.false_value;
            return "Let's keep the " + slot.name + " " + a + ". Actually, forget that, " +
                   "make it " + b + " instead.";
        }
        case Persona::FactuallyWrong: {
            const auto& slot = pick_slot(sc, seed, [](const ScenarioSlot& s) {
                return !s.false_value.empty();
            });
            return (seed % 2 == 0)
                       ? "Go with " + slot.false_value + " for the " + slot.name +
                             ", that is what I had last time."
                       : "I am certain the " + slot.name + " should be " + slot.false_value + ".";
        }
        case Persona::Refusal: {
            static const std::vector<std::string> kVariants = {
                "Just make it for me. Anything is fine.",
                "No more questions, please. You decide, go ahead.",
                "It's up to you, just pick whatever you think works.",
            };
            return kVariants[seed % kVariants.size()];
        }
    }
    throw InvalidArgumentError("unknown persona");
}

} // namespace

std::vector<SlotObservation> oracle_observations(Persona persona, const Scenario& scenario,
                                                 std::uint64_t seed) {
    std::vector<SlotObservation> out;
    switch (persona) {
        case Persona::Precise:
            for (const auto& slot : scenario.slots)
                if (slot.required)
                    out.push_back({slot.name, slot.true_value, Relation::Provides});
            break;
        case Persona::Contradictory: {
            const auto& slot = pick_slot(scenario, seed, [](const ScenarioSlot& s) {
                return s.conflict_pair.has_value() || !s.false_value.empty();
            });
            const std::string a = slot.conflict_pair ? slot.conflict_pair->first : slot.true_value;
            const std::string b = slot.conflict_pair ? slot.conflict_pair->second : slot.false_value;
            out.push_back({slot.name, a, Relation::Provides});
            out.push_back({slot.name, b, Relation::Provides});
            break;
        }
        case Persona::FactuallyWrong: {
            const auto& slot = pick_slot(scenario, seed, [](const ScenarioSlot& s) {
                return !s.false_value.empty();
            });
            out.push_back({slot.name, slot.false_value, Relation::Contradicts});
            break;
        }
        case Persona::PartialVague:
        case Persona::OffFocus:
        case Persona::Refusal:
            break; // these replies add no usable slot information
    }
    return out;
}

namespace {

std::string persona_style_instructions(Persona persona) {
    switch (persona) {
        case Persona::Precise:
            return "Give the missing details clearly and specifically, stating the true value "
                   "of every requested item.";
        case Persona::PartialVague:
            return "Give a partially relevant but vague, indecisive reply. Use hedging words "
                   "and never state an exact value.";
        case Persona::OffFocus:
            return "Reply with something off-topic that ignores the question entirely. Do not "
                   "mention any of the requested items.";
        case Persona::Contradictory:
            return "Give two statements about the same item that conflict with each other.";
        case Persona::FactuallyWrong:
            return "Give specific but factually incorrect information, stated confidently.";
        case Persona::Refusal:
            return "Decline to clarify and push the assistant to proceed without more "
                   "information. Do not provide any values.";
    }
    throw InvalidArgumentError("unknown persona");
}

std::string facts_block(const Scenario& scenario) {
    std::ostringstream out;
    for (const auto& slot : scenario.slots) {
        out << "- " << slot.name << ": true value '" << slot.true_value << "'";
        if (!slot.false_value.empty()) out << ", a false value '" << slot.false_value << "'";
        out << "\n";
    }
    return out.str();
}

std::string dialogue_block(const std::vector<Turn>& history) {
    std::ostringstream out;
    for (const auto& turn : history)
        out << (turn.speaker == Speaker::User ? "User: " : "Assistant: ") << turn.text << "\n";
    return out.str();
}

} // namespace

SimulatedReply simulate_reply(const SimulationContext& context, SimulatorMode mode,
                              Gateway* gateway, const std::string& prompt_dir) {
    if (!context.history.empty() && context.history.back().speaker != Speaker::Assistant)
        throw InvalidArgumentError("a reply can only follow an assistant turn");
    if (context.clarifying_question.empty())
        throw InvalidArgumentError("simulation context has no clarifying question");

    const PersonaReplySpec spec = reply_spec_for(context.persona);

    if (mode == SimulatorMode::Template) {
        SimulatedReply reply{template_reply(context), spec};
        auto fidelity = check_persona_fidelity(reply.text, spec, context.scenario);
        if (!fidelity.ok) {
            std::string detail;
            for (const auto& v : fidelity.violations) detail += v + "; ";
            throw StateError("template reply failed its own persona check (" + detail +
                             ") for scenario '" + context.scenario.id + "'");
        }
        return reply;
    }

    if (gateway == nullptr)
        throw InvalidArgumentError("model-mode simulation needs a gateway");
    PromptLibrary prompts(prompt_dir.empty() ? "data/prompts" : prompt_dir);
    std::map<std::string, std::string> subs = {
        {"persona_name", to_string(context.persona)},
        {"persona_style", persona_style_instructions(context.persona)},
        {"dialogue", dialogue_block(context.history)},
        {"clarifying_question", context.clarifying_question},
        {"facts", facts_block(context.scenario)},
    };
    std::vector<ChatMessage> messages = {
        {"system", prompts.render("persona_reply", subs)},
        {"user", "Write the next user reply now."},
    };

    std::string text = gateway->complete_one(messages);
    auto fidelity = check_persona_fidelity(text, spec, context.scenario);
    if (!fidelity.ok) {
        std::string note = "The previous attempt violated the persona style:";
        for (const auto& v : fidelity.violations) note += " " + v + ";";
        messages.push_back({"assistant", text});
        messages.push_back({"user", note + " Rewrite the reply so it fits the persona."});
        text = gateway->complete_one(messages);
        fidelity = check_persona_fidelity(text, spec, context.scenario);
        if (!fidelity.ok) {
            std::string detail;
            for (const auto& v : fidelity.violations) detail += v + "; ";
            throw StateError("persona fidelity failure after regeneration: " + detail);
        }
    }
    return {text, spec};
}

} // namespace clarify
