#include "clarify.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "clarify/agent.hpp"
#include "clarify/errors.hpp"
#include "clarify/evaluation.hpp"
#include "clarify/gateway.hpp"
#include "clarify/orchestrator.hpp"

using nlohmann::json;

namespace {

thread_local std::string t_last_error;

clarify_status status_of(const clarify::Error& error) {
    switch (error.code()) {
        case clarify::ErrorCode::InvalidArgument: return CLARIFY_EINVAL;
        case clarify::ErrorCode::Parse: return CLARIFY_EPARSE;
        case clarify::ErrorCode::Unscripted: return CLARIFY_EUNSCRIPTED;
        case clarify::ErrorCode::Transport: return CLARIFY_ETRANSPORT;
        case clarify::ErrorCode::Budget: return CLARIFY_EBUDGET;
        case clarify::ErrorCode::Io: return CLARIFY_EIO;
        case clarify::ErrorCode::State: return CLARIFY_ESTATE;
        case clarify::ErrorCode::Usage: return CLARIFY_EUSAGE;
        case clarify::ErrorCode::Internal: return CLARIFY_EINTERNAL;
    }
    return CLARIFY_EINTERNAL;
}

// Runs `body` and folds any exception into a status code plus last-error.
template <typename Body>
clarify_status guarded(Body&& body) {
    try {
        t_last_error.clear();
        body();
        return CLARIFY_OK;
    } catch (const clarify::Error& e) {
        t_last_error = e.what();
        return status_of(e);
    } catch (const json::exception& e) {
        t_last_error = e.what();
        return CLARIFY_EPARSE;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return CLARIFY_EINTERNAL;
    }
}

char* copy_string(const std::string& text) {
    char* out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

} // namespace

struct clarify_gateway {
    clarify::Gateway impl;
    explicit clarify_gateway(clarify::BackendConfig cfg) : impl(std::move(cfg)) {}
};

struct clarify_agent {
    clarify::AgentSession impl;
    clarify_agent(clarify::Gateway& gateway, clarify::AgentOptions options,
                  std::optional<clarify::SlotSchema> schema)
        : impl(gateway, std::move(options), std::move(schema)) {}
};

extern "C" {

const char* clarify_version(void) { return clarify::kVersion; }

const char* clarify_last_error(void) { return t_last_error.c_str(); }

void clarify_string_free(char* s) { delete[] s; }

clarify_status clarify_gateway_open(const char* config_json, clarify_gateway** out) {
    return guarded([&] {
        if (config_json == nullptr || out == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        auto cfg = clarify::BackendConfig::from_json(json::parse(config_json));
        *out = new clarify_gateway(std::move(cfg));
    });
}

void clarify_gateway_close(clarify_gateway* gateway) { delete gateway; }

clarify_status clarify_gateway_trace(clarify_gateway* gateway, const char* path) {
    return guarded([&] {
        if (gateway == nullptr || path == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        gateway->impl.set_trace_path(path);
    });
}

clarify_status clarify_gateway_complete(clarify_gateway* gateway, const char* messages_json,
                                        int k, char** out_texts_json) {
    return guarded([&] {
        if (gateway == nullptr || messages_json == nullptr || out_texts_json == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        auto messages = clarify::messages_from_json(json::parse(messages_json));
        auto texts = gateway->impl.complete(messages, k);
        *out_texts_json = copy_string(json(texts).dump());
    });
}

clarify_status clarify_gateway_embed(clarify_gateway* gateway, const char* texts_json,
                                     char** out_vectors_json) {
    return guarded([&] {
        if (gateway == nullptr || texts_json == nullptr || out_vectors_json == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        auto texts = json::parse(texts_json).get<std::vector<std::string>>();
        json vectors = json::array();
        for (const auto& vector : gateway->impl.embed(texts)) vectors.push_back(vector.values);
        *out_vectors_json = copy_string(vectors.dump());
    });
}

clarify_status clarify_agent_open(clarify_gateway* gateway, const char* options_json,
                                  clarify_agent** out) {
    return guarded([&] {
        if (gateway == nullptr || out == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        json spec = options_json && *options_json ? json::parse(options_json) : json::object();
        clarify::AgentOptions options;
        options.max_calls_per_turn = spec.value("max_calls_per_turn", 5);
        options.max_reasks = spec.value("max_reasks", 2);
        options.max_proposed_slots = spec.value("max_proposed_slots", 5);
        options.template_output = spec.value("template_output", false);
        options.replay_mode = spec.value("replay_mode", false);
        options.prompt_dir = spec.value("prompt_dir", std::string("data/prompts"));
        std::optional<clarify::SlotSchema> schema;
        if (spec.contains("schema")) {
            clarify::SlotSchema parsed;
            parsed.slots = spec.at("schema").at("slots").get<std::vector<std::string>>();
            parsed.required =
                spec.at("schema").value("required", std::vector<std::string>{});
            schema = std::move(parsed);
        }
        *out = new clarify_agent(gateway->impl, std::move(options), std::move(schema));
    });
}

void clarify_agent_close(clarify_agent* agent) { delete agent; }

clarify_status clarify_agent_turn(clarify_agent* agent, const char* user_text,
                                  char** out_turn_json) {
    return guarded([&] {
        if (agent == nullptr || user_text == nullptr || out_turn_json == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        auto result = agent->impl.agent_turn(user_text);
        *out_turn_json = copy_string(result.audit.dump());
    });
}

clarify_status clarify_parse_action(const char* response_text, int* out_action) {
    return guarded([&] {
        if (response_text == nullptr || out_action == nullptr)
            throw clarify::InvalidArgumentError("null argument");
        auto action = clarify::parse_action(response_text);
        if (!action)
            throw clarify::ParseError("response matches neither mandated prefix");
        *out_action = *action == clarify::Action::Answer ? 1 : 0;
    });
}

int clarify_run(int argc, const char* const* argv) {
    try {
        return clarify::run_command(argc, argv);
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return 1;
    }
}

} // extern "C"
