#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace clarify {

// ============================================================================
// Configuration
// ============================================================================

enum class BackendKind { RemoteChat, RemoteEmbedding, Scripted };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(const std::string& name);

// One scripted response rule. Rules are tried in declaration order against
// the rendered prompt; "exact" matches the whole rendering, "contains" a
// substring, "any" everything. A k-sample completion cycles through
// `responses` starting at index 0, so identical requests always see
// identical texts.
struct ScriptEntry {
    enum class Match { Exact, Contains, Any };
    Match match = Match::Exact;
    std::string key;
    std::vector<std::string> responses;
};

struct ScriptTable {
    std::vector<ScriptEntry> entries;
    // Optional fixed embeddings per exact text; anything else falls back to
    // the seeded hash embedder.
    std::map<std::string, std::vector<double>> embeddings;

    static ScriptTable from_json(const nlohmann::json& spec);
    nlohmann::json to_json() const;
};

struct BackendConfig {
    BackendKind backend = BackendKind::Scripted;
    std::string endpoint;       // e.g. http://localhost:8000/v1/chat/completions
    std::string model;
    double temperature = 0.0;   // greedy by default
    int k = 1;
    double timeout_s = 30.0;
    int retries = 3;
    std::string api_key_env;    // name of the env var holding the credential
    std::optional<int> max_tokens;

    // Scripted-backend fields; network fields above are ignored.
    ScriptTable script;
    int embed_dim = 16;
    std::uint64_t seed = 0;

    void validate() const;
    static BackendConfig from_json(const nlohmann::json& cfg);
    nlohmann::json to_json() const;
};

// ============================================================================
// Exchanges
// ============================================================================

struct ChatMessage {
    std::string role;
    std::string content;
};

nlohmann::json messages_to_json(const std::vector<ChatMessage>& messages);
std::vector<ChatMessage> messages_from_json(const nlohmann::json& messages);

// Canonical single-string rendering of a message list; scripted lookup and
// trace replay key on it.
std::string render_messages(const std::vector<ChatMessage>& messages);

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

// One request/response pair. A k-sample completion is one exchange with k
// responses so that replaying a trace reproduces every sample.
struct ChatExchange {
    std::vector<ChatMessage> request;
    std::vector<std::string> responses;
    std::optional<TokenUsage> usage;
    double latency_ms = 0.0; // 0 for scripted exchanges, keeping traces stable

    nlohmann::json to_json() const;
    static ChatExchange from_json(const nlohmann::json& record);
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model;
};

// ============================================================================
// Gateway
// ============================================================================

// Thread-safe facade over one backend. Remote requests are serialized and
// retried with exponential backoff; scripted requests are pure functions of
// (messages, k). Every completion is appended to the trace when one is set.
class Gateway {
public:
    explicit Gateway(BackendConfig config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    const BackendConfig& config() const { return config_; }

    // Appends every exchange to `path` as JSONL (append-only).
    void set_trace_path(const std::string& path);

    std::vector<std::string> complete(const std::vector<ChatMessage>& messages);
    std::vector<std::string> complete(const std::vector<ChatMessage>& messages, int k);
    std::string complete_one(const std::vector<ChatMessage>& messages);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

private:
    std::vector<std::string> scripted_complete(const std::string& rendered, int k) const;
    std::vector<std::string> remote_complete(const std::vector<ChatMessage>& messages, int k,
                                             double* latency_ms, std::optional<TokenUsage>* usage);
    EmbeddingVector scripted_embed(const std::string& text) const;
    std::vector<EmbeddingVector> remote_embed(const std::vector<std::string>& texts);
    void record(const ChatExchange& exchange);

    BackendConfig config_;
    std::string trace_path_;
    std::mutex mutex_;
};

// Rebuilds a script table from a trace file: each exchange becomes an exact
// entry for its rendered request. The first occurrence of a request wins.
ScriptTable script_from_trace(const std::string& trace_path);

} // namespace clarify
