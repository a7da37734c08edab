#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "clarify/core_model.hpp"
#include "clarify/dataset.hpp"
#include "clarify/evaluation.hpp"
#include "clarify/gateway.hpp"

namespace clarify {

extern const char* kVersion;

// ============================================================================
// Repository configuration
// ============================================================================

struct RepoConfig {
    std::map<std::string, BackendConfig> gateways;
    std::string data_dir = "data";
    std::string runs_root = "runs";
    double tau_sem = 0.7;   // semantic dedup threshold
    int per_subtype = 85;   // post-dedup seeds per subtype
    int judge_per_subtype = 30;
    int agent_budget = 5;   // model calls per turn
    std::uint64_t seed = 0;

    static RepoConfig from_json(const nlohmann::json& cfg);
    static RepoConfig load(const std::string& path);
    nlohmann::json to_json() const;

    const BackendConfig& gateway(const std::string& name) const;
};

// Content address for a resolved manifest; names the run directory.
std::string manifest_hash(const nlohmann::json& manifest);

// Creates <runs_root>/<hash>/ and writes manifest.json into it.
std::string prepare_run_dir(const std::string& runs_root, const nlohmann::json& manifest);

// ============================================================================
// Run harnesses (shared by the CLI subcommands and the C API)
// ============================================================================

struct AgentRunOptions {
    bool oracle_stages = false;   // ground-truth Perceiver/Forecaster from the oracle pack
    std::string oracle_path;      // required when oracle_stages
    Gateway* gateway = nullptr;   // required otherwise
    int max_calls_per_turn = 5;
    std::string prompt_dir = "data/prompts";
    std::string model_tag = "agent";
    std::vector<int> turns;       // restrict recorded decision points; empty = all
};

struct AgentRunResult {
    std::vector<ScoredDecision> records;
    std::vector<nlohmann::json> audits; // one audit record per executed turn
    int max_calls_used = 0;
};

// Teacher-forced replay: the agent decides at every decision point while the
// dataset's own turns provide the context.
AgentRunResult run_agent_over_dataset(const std::vector<Dialogue>& dialogues,
                                      const AgentRunOptions& options);

struct BaselineRunOptions {
    std::string spec_name = "base"; // base | majority | cot
    int k = 0;                      // 0 = spec default
    Gateway* gateway = nullptr;
    std::string prompt_dir = "data/prompts";
    std::string model_tag;
    std::vector<int> turns;
};

std::vector<ScoredDecision> run_baseline_over_dataset(const std::vector<Dialogue>& dialogues,
                                                      const BaselineRunOptions& options);

struct JudgeRunOptions {
    int per_subtype = 30;
    Gateway* gateway = nullptr;
    std::string prompt_dir = "data/prompts";
    std::uint64_t seed = 0;
};

struct JudgeRunResult {
    std::vector<nlohmann::json> verdicts;
    nlohmann::json summary;
};

// Task-2 scoring: samples clarify decisions per subtype and judges each
// candidate question against the dialogue's golden clarification.
JudgeRunResult judge_over_records(const std::vector<ScoredDecision>& records,
                                  const std::vector<Dialogue>& dialogues,
                                  const JudgeRunOptions& options);

// ============================================================================
// Command entry point
// ============================================================================

// argv[0] is the program name; subcommands are build, simulate, run-agent,
// run-baseline, evaluate, judge, report. Returns 0 on success, 1 on runtime
// errors, 2 on usage errors.
int run_command(int argc, const char* const* argv);

} // namespace clarify
