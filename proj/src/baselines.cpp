#include "clarify/baselines.hpp"

#include <map>
#include <sstream>

#include "clarify/errors.hpp"
#include "clarify/evaluation.hpp"
#include "clarify/prompts.hpp"

namespace clarify {

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::Base: return "base";
        case BaselineKind::MajorityVote: return "majority";
        case BaselineKind::CoT: return "cot";
    }
    throw InvalidArgumentError("unknown baseline kind");
}

BaselineKind baseline_kind_from_string(const std::string& name) {
    if (name == "base") return BaselineKind::Base;
    if (name == "majority") return BaselineKind::MajorityVote;
    if (name == "cot") return BaselineKind::CoT;
    throw ParseError("unknown baseline kind: '" + name + "'");
}

BaselineSpec BaselineSpec::defaults(BaselineKind kind) {
    BaselineSpec spec;
    spec.kind = kind;
    if (kind == BaselineKind::MajorityVote) {
        spec.k = 5;
        spec.temperature = 0.7;
    }
    return spec;
}

void BaselineSpec::validate() const {
    if (k < 1) throw InvalidArgumentError("baseline sample count must be >= 1");
    if (kind != BaselineKind::MajorityVote && k != 1)
        throw InvalidArgumentError("only majority voting draws more than one sample");
    if (temperature < 0) throw InvalidArgumentError("temperature must be >= 0");
}

std::vector<ChatMessage> baseline_messages(const BaselineSpec& spec,
                                           const std::vector<Turn>& dialogue_prefix,
                                           const std::string& prompt_dir) {
    if (dialogue_prefix.empty())
        throw InvalidArgumentError("baseline needs a non-empty dialogue prefix");

    PromptLibrary prompts(prompt_dir);
    std::ostringstream dialogue;
    for (const auto& turn : dialogue_prefix)
        dialogue << (turn.speaker == Speaker::User ? "User: " : "Assistant: ") << turn.text
                 << "\n";

    const std::string cot_instruction =
        spec.kind == BaselineKind::CoT
            ? "First think through the dialogue step by step, then give your response.\n"
            : "";
    return {
        {"system", prompts.render("decision", {{"cot_instruction", cot_instruction}})},
        {"user", dialogue.str()},
    };
}

BaselineOutput run_baseline(const BaselineSpec& spec, const std::vector<Turn>& dialogue_prefix,
                            Gateway& gateway, const std::string& prompt_dir) {
    spec.validate();
    const auto messages = baseline_messages(spec, dialogue_prefix, prompt_dir);

    BaselineOutput out;
    out.samples = gateway.complete(messages, spec.k);

    std::map<Action, int> votes;
    for (const auto& sample : out.samples) {
        auto action = parse_action(sample);
        out.sample_actions.push_back(action);
        if (action)
            ++votes[*action];
        else
            ++out.unparseable;
    }
    if (votes.empty())
        throw ParseError("baseline failure: none of " + std::to_string(spec.k) +
                         " samples matched a mandated prefix");

    const int clarify_votes = votes.count(Action::Clarify) ? votes[Action::Clarify] : 0;
    const int answer_votes = votes.count(Action::Answer) ? votes[Action::Answer] : 0;
    // Ties fall to Clarify, the safer action under an under-clarification bias.
    out.action = answer_votes > clarify_votes ? Action::Answer : Action::Clarify;

    for (size_t i = 0; i < out.samples.size(); ++i) {
        if (out.sample_actions[i] && *out.sample_actions[i] == out.action) {
            out.final_text = out.samples[i];
            break;
        }
    }
    return out;
}

} // namespace clarify
