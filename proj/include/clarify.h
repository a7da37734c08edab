/*
 * C API for the clarify toolkit: multi-turn clarification dialogues,
 * persona simulation, the ask-or-answer agent, and the evaluation harness.
 *
 * All functions returning clarify_status report failure details through
 * clarify_last_error(), which is thread-local. Strings returned through
 * out-parameters are heap-allocated; release them with clarify_string_free().
 * Handles are opaque and must be closed with their matching close function.
 */

#ifndef CLARIFY_H
#define CLARIFY_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clarify_status {
    CLARIFY_OK = 0,
    CLARIFY_EINVAL = 1,      /* invalid argument or configuration */
    CLARIFY_EPARSE = 2,      /* malformed JSON, model output, or file */
    CLARIFY_EUNSCRIPTED = 3, /* scripted backend has no entry for the prompt */
    CLARIFY_ETRANSPORT = 4,  /* network failure after retries */
    CLARIFY_EBUDGET = 5,     /* per-turn model-call budget exhausted */
    CLARIFY_EIO = 6,         /* filesystem failure */
    CLARIFY_ESTATE = 7,      /* schema mismatch, terminal session, undefined statistic */
    CLARIFY_EUSAGE = 8,      /* bad command-line invocation */
    CLARIFY_EINTERNAL = 9
} clarify_status;

typedef struct clarify_gateway clarify_gateway;
typedef struct clarify_agent clarify_agent;

const char* clarify_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* clarify_last_error(void);

void clarify_string_free(char* s);

/*
 * Gateway. config_json uses the backend config schema:
 *   {"backend": "scripted" | "remote_chat" | "remote_embedding",
 *    "endpoint": ..., "model": ..., "temperature": 0, "k": 1,
 *    "timeout_s": 30, "retries": 3, "script": {...}, "seed": 0}
 */
clarify_status clarify_gateway_open(const char* config_json, clarify_gateway** out);
void clarify_gateway_close(clarify_gateway* gateway);

/* Route every exchange to an append-only JSONL trace. */
clarify_status clarify_gateway_trace(clarify_gateway* gateway, const char* path);

/* messages_json: [{"role": ..., "content": ...}, ...]. On success
 * *out_texts_json holds a JSON array of k response strings. */
clarify_status clarify_gateway_complete(clarify_gateway* gateway, const char* messages_json,
                                        int k, char** out_texts_json);

/* texts_json: JSON array of strings. On success *out_vectors_json holds a
 * JSON array of equal-length numeric arrays. */
clarify_status clarify_gateway_embed(clarify_gateway* gateway, const char* texts_json,
                                     char** out_vectors_json);

/*
 * Agent session. options_json (all keys optional):
 *   {"max_calls_per_turn": 5, "max_reasks": 2, "max_proposed_slots": 5,
 *    "template_output": false, "replay_mode": false,
 *    "prompt_dir": "data/prompts",
 *    "schema": {"slots": [...], "required": [...]}}
 */
clarify_status clarify_agent_open(clarify_gateway* gateway, const char* options_json,
                                  clarify_agent** out);
void clarify_agent_close(clarify_agent* agent);

/* Runs one agent turn. *out_turn_json carries the audit record:
 * {"final_text", "decision", "persona", "perceiver", "state_before",
 *  "state_after", "calls_used"}. */
clarify_status clarify_agent_turn(clarify_agent* agent, const char* user_text,
                                  char** out_turn_json);

/* Parses a mandated-prefix response. *out_action: 0 = clarify, 1 = answer.
 * Returns CLARIFY_EPARSE when neither prefix matches. */
clarify_status clarify_parse_action(const char* response_text, int* out_action);

/* The command-line entry point: argv[0] is the program name, then a
 * subcommand (build, simulate, run-agent, run-baseline, evaluate, judge,
 * report). Returns the process exit status (0 ok, 1 runtime, 2 usage). */
int clarify_run(int argc, const char* const* argv);

#ifdef __cplusplus
}
#endif

#endif /* CLARIFY_H */
