#include "clarify/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "clarify/errors.hpp"

namespace clarify {

using nlohmann::json;

// ============================================================================
// Config
// ============================================================================

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::RemoteChat: return "remote_chat";
        case BackendKind::RemoteEmbedding: return "remote_embedding";
        case BackendKind::Scripted: return "scripted";
    }
    throw InvalidArgumentError("unknown backend kind");
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "remote_chat") return BackendKind::RemoteChat;
    if (name == "remote_embedding") return BackendKind::RemoteEmbedding;
    if (name == "scripted") return BackendKind::Scripted;
    throw ParseError("unknown backend kind: '" + name + "'");
}

namespace {

ScriptEntry::Match match_from_string(const std::string& name) {
    if (name == "exact") return ScriptEntry::Match::Exact;
    if (name == "contains") return ScriptEntry::Match::Contains;
    if (name == "any") return ScriptEntry::Match::Any;
    throw ParseError("unknown script match kind: '" + name + "'");
}

std::string match_to_string(ScriptEntry::Match match) {
    switch (match) {
        case ScriptEntry::Match::Exact: return "exact";
        case ScriptEntry::Match::Contains: return "contains";
        case ScriptEntry::Match::Any: return "any";
    }
    throw InvalidArgumentError("unknown script match kind");
}

} // namespace

ScriptTable ScriptTable::from_json(const json& spec) {
    ScriptTable table;
    if (spec.contains("entries")) {
        for (const auto& e : spec.at("entries")) {
            ScriptEntry entry;
            entry.match = match_from_string(e.value("match", "exact"));
            entry.key = e.value("key", "");
            entry.responses = e.at("responses").get<std::vector<std::string>>();
            if (entry.responses.empty())
                throw ParseError("script entry with no responses");
            table.entries.push_back(std::move(entry));
        }
    }
    if (spec.contains("embeddings")) {
        for (const auto& [text, values] : spec.at("embeddings").items())
            table.embeddings[text] = values.get<std::vector<double>>();
    }
    return table;
}

json ScriptTable::to_json() const {
    json out_entries = json::array();
    for (const auto& e : entries) {
        out_entries.push_back({{"match", match_to_string(e.match)},
                               {"key", e.key},
                               {"responses", e.responses}});
    }
    json out_embeddings = json::object();
    for (const auto& [text, values] : embeddings) out_embeddings[text] = values;
    return {{"entries", out_entries}, {"embeddings", out_embeddings}};
}

void BackendConfig::validate() const {
    if (temperature < 0) throw InvalidArgumentError("temperature must be >= 0");
    if (k < 1) throw InvalidArgumentError("sample count k must be >= 1");
    if (backend != BackendKind::Scripted && endpoint.empty())
        throw InvalidArgumentError("remote backend requires an endpoint");
    if (backend == BackendKind::Scripted && embed_dim < 1)
        throw InvalidArgumentError("embed_dim must be >= 1");
}

BackendConfig BackendConfig::from_json(const json& cfg) {
    BackendConfig out;
    out.backend = backend_kind_from_string(cfg.value("backend", "scripted"));
    out.endpoint = cfg.value("endpoint", "");
    out.model = cfg.value("model", "");
    out.temperature = cfg.value("temperature", 0.0);
    out.k = cfg.value("k", 1);
    out.timeout_s = cfg.value("timeout_s", 30.0);
    out.retries = cfg.value("retries", 3);
    out.api_key_env = cfg.value("api_key_env", "");
    if (cfg.contains("max_tokens")) out.max_tokens = cfg.at("max_tokens").get<int>();
    if (cfg.contains("script")) {
        if (cfg.at("script").is_string()) {
            std::ifstream in(cfg.at("script").get<std::string>());
            if (!in) throw IoError("cannot open script file: " + cfg.at("script").get<std::string>());
            json spec = json::parse(in);
            out.script = ScriptTable::from_json(spec);
        } else {
            out.script = ScriptTable::from_json(cfg.at("script"));
        }
    }
    out.embed_dim = cfg.value("embed_dim", 16);
    out.seed = cfg.value("seed", std::uint64_t{0});
    out.validate();
    return out;
}

json BackendConfig::to_json() const {
    json out = {
        {"backend", to_string(backend)}, {"endpoint", endpoint},
        {"model", model},                {"temperature", temperature},
        {"k", k},                        {"timeout_s", timeout_s},
        {"retries", retries},            {"api_key_env", api_key_env},
        {"embed_dim", embed_dim},        {"seed", seed},
    };
    if (max_tokens) out["max_tokens"] = *max_tokens;
    if (!script.entries.empty() || !script.embeddings.empty()) out["script"] = script.to_json();
    return out;
}

// ============================================================================
// Messages and exchanges
// ============================================================================

json messages_to_json(const std::vector<ChatMessage>& messages) {
    json out = json::array();
    for (const auto& m : messages) out.push_back({{"role", m.role}, {"content", m.content}});
    return out;
}

std::vector<ChatMessage> messages_from_json(const json& messages) {
    std::vector<ChatMessage> out;
    for (const auto& m : messages)
        out.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    return out;
}

std::string render_messages(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += m.role;
        out += ": ";
        out += m.content;
        out += "\n";
    }
    return out;
}

json ChatExchange::to_json() const {
    json out = {{"request", messages_to_json(request)},
                {"responses", responses},
                {"latency_ms", latency_ms}};
    if (usage)
        out["usage"] = {{"prompt_tokens", usage->prompt_tokens},
                        {"completion_tokens", usage->completion_tokens}};
    return out;
}

ChatExchange ChatExchange::from_json(const json& record) {
    ChatExchange out;
    out.request = messages_from_json(record.at("request"));
    out.responses = record.at("responses").get<std::vector<std::string>>();
    out.latency_ms = record.value("latency_ms", 0.0);
    if (record.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = record.at("usage").value("prompt_tokens", std::int64_t{0});
        usage.completion_tokens = record.at("usage").value("completion_tokens", std::int64_t{0});
        out.usage = usage;
    }
    return out;
}

// ============================================================================
// Gateway
// ============================================================================

Gateway::Gateway(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
}

Gateway::~Gateway() = default;

void Gateway::set_trace_path(const std::string& path) {
    std::lock_guard<std::mutex> lock(mutex_);
    trace_path_ = path;
}

std::vector<std::string> Gateway::complete(const std::vector<ChatMessage>& messages) {
    return complete(messages, config_.k);
}

std::vector<std::string> Gateway::complete(const std::vector<ChatMessage>& messages, int k) {
    if (messages.empty()) throw InvalidArgumentError("complete() needs at least one message");
    if (k < 1) throw InvalidArgumentError("sample count k must be >= 1");

    ChatExchange exchange;
    exchange.request = messages;
    if (config_.backend == BackendKind::Scripted) {
        exchange.responses = scripted_complete(render_messages(messages), k);
    } else if (config_.backend == BackendKind::RemoteChat) {
        exchange.responses = remote_complete(messages, k, &exchange.latency_ms, &exchange.usage);
    } else {
        throw InvalidArgumentError("embedding backend cannot serve chat completions");
    }
    record(exchange);
    return exchange.responses;
}

std::string Gateway::complete_one(const std::vector<ChatMessage>& messages) {
    return complete(messages, 1).front();
}

std::vector<std::string> Gateway::scripted_complete(const std::string& rendered, int k) const {
    for (const auto& entry : config_.script.entries) {
        bool hit = false;
        switch (entry.match) {
            case ScriptEntry::Match::Exact: hit = (rendered == entry.key); break;
            case ScriptEntry::Match::Contains:
                hit = rendered.find(entry.key) != std::string::npos;
                break;
            case ScriptEntry::Match::Any: hit = true; break;
        }
        if (!hit) continue;
        std::vector<std::string> out;
        out.reserve(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i)
            out.push_back(entry.responses[static_cast<size_t>(i) % entry.responses.size()]);
        return out;
    }
    throw UnscriptedPromptError("unscripted prompt: " + rendered.substr(0, 200));
}

namespace {

struct ParsedEndpoint {
    std::string base; // scheme://host[:port]
    std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidArgumentError("endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

httplib::Headers auth_headers(const std::string& api_key_env) {
    httplib::Headers headers = {{"Content-Type", "application/json"}};
    if (!api_key_env.empty()) {
        if (const char* key = std::getenv(api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    return headers;
}

// Sends `body` with up to cfg.retries attempts and exponential backoff.
// Requests here are idempotent (pure inference), so retrying is safe.
json post_with_retries(const BackendConfig& cfg, const json& body) {
    auto [base, path] = parse_endpoint(cfg.endpoint);
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, cfg.retries); ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(250LL << (attempt - 1)));
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration<double>(cfg.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(cfg.timeout_s));
        auto result = client.Post(path, auth_headers(cfg.api_key_env), body.dump(),
                                  "application/json");
        if (!result) {
            last_error = "transport failure (" + httplib::to_string(result.error()) + ")";
            continue;
        }
        if (result->status >= 500 || result->status == 429) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200)
            throw TransportError("backend returned HTTP " + std::to_string(result->status) +
                                 ": " + result->body.substr(0, 200));
        json parsed = json::parse(result->body, nullptr, false);
        if (parsed.is_discarded()) throw ParseError("backend returned malformed JSON");
        return parsed;
    }
    throw TransportError("request failed after " + std::to_string(std::max(1, cfg.retries)) +
                         " attempts: " + last_error);
}

} // namespace

std::vector<std::string> Gateway::remote_complete(const std::vector<ChatMessage>& messages,
                                                  int k, double* latency_ms,
                                                  std::optional<TokenUsage>* usage) {
    json body = {{"model", config_.model},
                 {"messages", messages_to_json(messages)},
                 {"temperature", config_.temperature}};
    if (k > 1) body["n"] = k;
    if (config_.max_tokens) body["max_tokens"] = *config_.max_tokens;

    const auto start = std::chrono::steady_clock::now();
    json parsed;
    {
        std::lock_guard<std::mutex> lock(mutex_); // serialize remote bursts
        parsed = post_with_retries(config_, body);
    }
    *latency_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();

    std::vector<std::string> out;
    const auto& choices = parsed.at("choices");
    for (const auto& choice : choices)
        out.push_back(choice.at("message").at("content").get<std::string>());
    if (static_cast<int>(out.size()) < k)
        throw TransportError("backend returned " + std::to_string(out.size()) +
                             " choices, expected " + std::to_string(k));
    out.resize(static_cast<size_t>(k));

    if (parsed.contains("usage")) {
        TokenUsage u;
        u.prompt_tokens = parsed.at("usage").value("prompt_tokens", std::int64_t{0});
        u.completion_tokens = parsed.at("usage").value("completion_tokens", std::int64_t{0});
        *usage = u;
    }
    return out;
}

// ============================================================================
// Embeddings
// ============================================================================

namespace {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

EmbeddingVector Gateway::scripted_embed(const std::string& text) const {
    auto it = config_.script.embeddings.find(text);
    if (it != config_.script.embeddings.end())
        return {it->second, config_.model.empty() ? "scripted" : config_.model};

    std::uint64_t state = fnv1a64(text) ^ config_.seed;
    std::vector<double> values(static_cast<size_t>(config_.embed_dim));
    for (auto& v : values) {
        // map to [-1, 1)
        v = (static_cast<double>(splitmix64(state) >> 11) /
             static_cast<double>(1ULL << 53)) * 2.0 - 1.0;
    }
    return {std::move(values), config_.model.empty() ? "scripted" : config_.model};
}

std::vector<EmbeddingVector> Gateway::remote_embed(const std::vector<std::string>& texts) {
    json body = {{"model", config_.model}, {"input", texts}};
    json parsed;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        parsed = post_with_retries(config_, body);
    }
    std::vector<EmbeddingVector> out;
    for (const auto& item : parsed.at("data")) {
        EmbeddingVector v;
        v.values = item.at("embedding").get<std::vector<double>>();
        v.model = config_.model;
        for (double x : v.values)
            if (!std::isfinite(x)) throw ParseError("non-finite embedding component");
        out.push_back(std::move(v));
    }
    if (out.size() != texts.size())
        throw TransportError("embedding count mismatch: got " + std::to_string(out.size()) +
                             " for " + std::to_string(texts.size()) + " texts");
    return out;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw InvalidArgumentError("embed() needs at least one text");
    if (config_.backend == BackendKind::Scripted) {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(scripted_embed(t));
        return out;
    }
    if (config_.backend == BackendKind::RemoteEmbedding) return remote_embed(texts);
    throw InvalidArgumentError("chat backend cannot serve embeddings");
}

// ============================================================================
// Trace
// ============================================================================

void Gateway::record(const ChatExchange& exchange) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (trace_path_.empty()) return;
    std::ofstream out(trace_path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to trace: " + trace_path_);
    out << exchange.to_json().dump() << "\n";
}

ScriptTable script_from_trace(const std::string& trace_path) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw IoError("cannot open trace: " + trace_path);
    ScriptTable table;
    std::map<std::string, bool> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto exchange = ChatExchange::from_json(json::parse(line));
        std::string key = render_messages(exchange.request);
        if (seen[key]) continue;
        seen[key] = true;
        table.entries.push_back({ScriptEntry::Match::Exact, key, exchange.responses});
    }
    return table;
}

} // namespace clarify
