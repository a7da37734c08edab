#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clarify/core_model.hpp"
#include "clarify/gateway.hpp"

namespace clarify {

// ============================================================================
// Response parsing
// ============================================================================

// Matches the two mandated prefixes after stripping leading whitespace,
// case-insensitively. Anything else is a parse failure (nullopt): the caller
// records an invalid decision, never guesses.
std::optional<Action> parse_action(const std::string& response);

// Invalid outputs count as incorrect. With a Clarify reference the model
// failed to clarify (under-clarification); with an Answer reference it failed
// to answer (over-clarification). This keeps accuracy + under + over == 1.
DecisionOutcome classify_prediction(const std::optional<Action>& predicted, Action reference);

// ============================================================================
// Scoring
// ============================================================================

struct ScoredDecision {
    std::string dialogue_id;
    int turn_index = 0;
    std::optional<Action> predicted; // nullopt: unparseable output
    Action reference = Action::Clarify;
    std::string raw_response;
    std::string model;   // system-under-test tag
    std::string persona; // "none" when absent
    std::string subtype;

    DecisionOutcome outcome() const { return classify_prediction(predicted, reference); }

    nlohmann::json to_json() const;
    static ScoredDecision from_json(const nlohmann::json& record);
};

void write_scored_decisions_jsonl(const std::string& path,
                                  const std::vector<ScoredDecision>& records);
std::vector<ScoredDecision> read_scored_decisions_jsonl(const std::string& path);

struct ScoreCell {
    long long correct = 0;
    long long under = 0;
    long long over = 0;
    long long invalid = 0; // already included in under/over
    long long total = 0;

    double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
    double under_rate() const { return total ? static_cast<double>(under) / total : 0.0; }
    double over_rate() const { return total ? static_cast<double>(over) / total : 0.0; }
};

// Rows are group labels ("overall", "persona:precise", "subtype:lexical");
// columns are 1-based decision points, with column 0 holding the all-turn
// margin. Margins are count-weighted by construction. Absent cells stay
// absent rather than reading as zero.
struct ScoreTable {
    std::string model;
    std::map<std::string, std::map<int, ScoreCell>> cells;

    const ScoreCell* find(const std::string& row, int turn) const;
};

ScoreTable score_run(const std::vector<ScoredDecision>& records);

std::string render_csv(const ScoreTable& table);
std::string render_markdown(const ScoreTable& table); // per-column best/worst markers
nlohmann::json rates_json(const ScoreTable& table);

// ============================================================================
// LLM-as-a-judge
// ============================================================================

struct JudgeVerdict {
    int score = 0; // 0..5
    std::string candidate_id;
    std::string judge_model;

    nlohmann::json to_json() const;
};

// Scores how well a candidate clarifying question matches the golden one.
// The judge must output a bare integer 0..5; a malformed verdict gets one
// repair call, then the judge run fails loudly.
JudgeVerdict judge_quality(const std::string& question, const std::string& golden,
                           const std::string& candidate, Gateway& gateway,
                           const std::string& prompt_dir = "data/prompts",
                           const std::string& candidate_id = {});

// ============================================================================
// Agreement statistics
// ============================================================================

struct KappaResult {
    double observed_agreement = 0.0; // P_o
    double expected_agreement = 0.0; // P_e
    std::optional<double> kappa;     // empty when P_e == 1 (undefined)
};

// Chance-corrected agreement for two equal-length binary label lists.
KappaResult cohen_kappa(const std::vector<bool>& labels_a, const std::vector<bool>& labels_b);

// Product-moment correlation; empty when either argument has zero variance.
std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct PairedTTest {
    double t = 0.0;
    int degrees_of_freedom = 0;
    double p_two_sided = 1.0;
};

// Paired t-test over per-unit score differences; pairing granularity is the
// caller's choice (per-dialogue by default in the harness).
PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

} // namespace clarify
