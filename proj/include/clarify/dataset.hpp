#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clarify/core_model.hpp"
#include "clarify/gateway.hpp"
#include "clarify/simulator.hpp"

namespace clarify {

// ============================================================================
// Seeds
// ============================================================================

struct SeedPair {
    std::string ambiguous_query;
    std::string clarifying_question;
    AmbiguitySubtype subtype = AmbiguitySubtype::Lexical;
    std::string source;
    double quality = 0.0; // in [0, 1]
};

// Length-and-parse heuristic standing in for a human fluency judgment.
double seed_quality(const SeedPair& seed);

struct SeedGenerationReport {
    std::vector<SeedPair> seeds;
    int malformed_lines = 0;
    int requests = 0;
    int shortfall = 0; // count still missing when the attempt budget ran out
};

// Prompts the gateway for `count` (q_amb, q_clar) pairs of the given seed
// subtype, parsing one JSON object per output line. Malformed lines are
// dropped and counted; generation retries until the count is reached or the
// 3x-count line budget is exhausted.
SeedGenerationReport generate_seeds(AmbiguitySubtype subtype, int count, Gateway& gateway,
                                    const std::string& prompt_dir = "data/prompts");

// ============================================================================
// Deduplication
// ============================================================================

// u.v / (|u||v|); zero-norm input is an undefined-similarity error.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

struct SimilarityCluster {
    std::vector<size_t> members;   // ascending indices into the input
    size_t representative = 0;     // quality argmax, ties to lowest index
    double threshold = 0.0;        // the floor used to build the edges
};

struct DedupResult {
    std::vector<SimilarityCluster> clusters; // ascending representative index
    std::vector<SeedPair> retained;          // one per cluster, same order
};

// Single-link clustering: edges where similarity is strictly above tau_sem,
// clusters are the connected components.
DedupResult dedup(const std::vector<SeedPair>& seeds,
                  const std::vector<EmbeddingVector>& embeddings, double tau_sem);

// ============================================================================
// Template seed bank
// ============================================================================

struct BankSeed {
    SeedPair seed;
    Scenario scenario;
};

// Deterministic parametric generator behind template-mode builds: for each of
// the twelve seed subtypes it derives the i-th ambiguous query, its golden
// clarifying question, and the per-seed facts the simulator needs.
BankSeed template_bank_seed(AmbiguitySubtype subtype, int index);

// ============================================================================
// Expansion
// ============================================================================

struct ExpansionOptions {
    SimulatorMode mode = SimulatorMode::Template;
    Gateway* gateway = nullptr;        // required in Model mode
    std::string prompt_dir = "data/prompts";
    std::uint64_t seed = 0;
    std::string dialogue_id;
    std::string source = "template-bank";
};

// Builds the full dialogue for one (seed, persona) pair: 2 decision points
// for Precise/Refusal, 3 for the noisy personas, with reference actions and
// the golden clarifying question for every Clarify decision.
Dialogue expand_to_multiturn(const SeedPair& seed, Persona persona, const Scenario& scenario,
                             const ExpansionOptions& options);

// Ground-truth perception for one dialogue, recorded at construction time:
// what a perfect Perceiver would observe at each decision point.
struct DialogueOracle {
    std::string dialogue_id;
    SlotSchema schema;
    Persona persona = Persona::Precise;
    // observations_per_decision[t-1] holds the observations available at
    // decision point t (empty at t=1: the seed query is ambiguous).
    std::vector<std::vector<SlotObservation>> observations_per_decision;

    nlohmann::json to_json() const;
    static DialogueOracle from_json(const nlohmann::json& record);
};

DialogueOracle oracle_for(const Dialogue& dialogue, const Scenario& scenario, Persona persona,
                          std::uint64_t base_seed);

void write_oracles_jsonl(const std::string& path, const std::vector<DialogueOracle>& oracles);
std::vector<DialogueOracle> read_oracles_jsonl(const std::string& path);

// ============================================================================
// Statistics
// ============================================================================

struct DatasetStats {
    size_t total = 0;
    std::map<std::string, size_t> by_subtype;
    std::map<std::string, size_t> by_persona;
    double mean_decision_points = 0.0;
    double mean_utterances = 0.0;
    double mean_token_length = 0.0; // whitespace tokens per dialogue

    nlohmann::json to_json() const;
};

size_t whitespace_token_count(const std::string& text);
DatasetStats dataset_stats(const std::vector<Dialogue>& dialogues);

// ============================================================================
// Build pipeline
// ============================================================================

struct BuildOptions {
    std::vector<AmbiguitySubtype> subtypes; // empty means all twelve
    int per_subtype = 85;                   // post-dedup target
    double tau_sem = 0.7;
    SimulatorMode mode = SimulatorMode::Template;
    Gateway* chat_gateway = nullptr;        // Model mode only
    Gateway* embed_gateway = nullptr;       // defaults to a scripted embedder
    std::string prompt_dir = "data/prompts";
    std::uint64_t seed = 0;
};

struct BuildResult {
    std::vector<Dialogue> dialogues;
    std::vector<DialogueOracle> oracles; // template mode only
    DatasetStats stats;
    int dedup_dropped = 0;
};

BuildResult build_dataset(const BuildOptions& options);

} // namespace clarify
