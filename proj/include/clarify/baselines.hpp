#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clarify/core_model.hpp"
#include "clarify/gateway.hpp"

namespace clarify {

// ============================================================================
// Training-free comparison policies
// ============================================================================

enum class BaselineKind { Base, MajorityVote, CoT };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

struct BaselineSpec {
    BaselineKind kind = BaselineKind::Base;
    int k = 1;                // 5 for MajorityVote
    double temperature = 0.0; // 0.7 for MajorityVote

    static BaselineSpec defaults(BaselineKind kind);
    void validate() const;
};

struct BaselineOutput {
    std::string final_text; // first sample from the winning action class
    Action action = Action::Clarify;
    std::vector<std::string> samples;
    std::vector<std::optional<Action>> sample_actions;
    int unparseable = 0;
};

// Builds the ask-or-answer prompt over a dialogue prefix and runs the policy.
// Base and CoT issue one call (CoT adds a step-by-step instruction ahead of
// the prefix mandate); MajorityVote draws spec.k samples in one exchange and
// returns the modal action, breaking ties toward Clarify. Every sample
// unparseable is a baseline failure, never a silent default.
//
// The decoding temperature comes from the gateway's backend config; callers
// construct the gateway with spec.temperature when running against a remote
// backend.
BaselineOutput run_baseline(const BaselineSpec& spec, const std::vector<Turn>& dialogue_prefix,
                            Gateway& gateway, const std::string& prompt_dir = "data/prompts");

// The Fig-style decision messages, exposed so tests and script tables can
// address the exact prompt a baseline will send.
std::vector<ChatMessage> baseline_messages(const BaselineSpec& spec,
                                           const std::vector<Turn>& dialogue_prefix,
                                           const std::string& prompt_dir = "data/prompts");

} // namespace clarify
