#include "clarify/orchestrator.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "clarify/agent.hpp"
#include "clarify/baselines.hpp"
#include "clarify/errors.hpp"
#include "clarify/simulator.hpp"

namespace clarify {

namespace fs = std::filesystem;
using nlohmann::json;

const char* kVersion = "0.1.0";

// ============================================================================
// Config
// ============================================================================

RepoConfig RepoConfig::from_json(const json& cfg) {
    RepoConfig out;
    if (cfg.contains("gateways"))
        for (const auto& [name, spec] : cfg.at("gateways").items())
            out.gateways[name] = BackendConfig::from_json(spec);
    out.data_dir = cfg.value("data_dir", out.data_dir);
    out.runs_root = cfg.value("runs_root", out.runs_root);
    out.tau_sem = cfg.value("tau_sem", out.tau_sem);
    out.per_subtype = cfg.value("per_subtype", out.per_subtype);
    out.judge_per_subtype = cfg.value("judge_per_subtype", out.judge_per_subtype);
    out.agent_budget = cfg.value("agent_budget", out.agent_budget);
    out.seed = cfg.value("seed", out.seed);
    return out;
}

RepoConfig RepoConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config not found: " + path);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded()) throw ParseError("malformed config: " + path);
    return from_json(cfg);
}

json RepoConfig::to_json() const {
    json gateways_json = json::object();
    for (const auto& [name, cfg] : gateways) gateways_json[name] = cfg.to_json();
    return {{"gateways", gateways_json},
            {"data_dir", data_dir},
            {"tau_sem", tau_sem},
            {"per_subtype", per_subtype},
            {"judge_per_subtype", judge_per_subtype},
            {"agent_budget", agent_budget},
            {"seed", seed}};
}

const BackendConfig& RepoConfig::gateway(const std::string& name) const {
    auto it = gateways.find(name);
    if (it == gateways.end())
        throw InvalidArgumentError("no gateway named '" + name + "' in the config");
    return it->second;
}

// ============================================================================
// Run directories
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

void deterministic_shuffle(std::vector<size_t>& indices, std::uint64_t seed) {
    for (size_t i = indices.size(); i > 1; --i)
        std::swap(indices[i - 1], indices[splitmix64(seed) % i]);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

void write_json_lines(const std::string& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& line : lines) out << line.dump() << "\n";
}

} // namespace

std::string manifest_hash(const json& manifest) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(manifest.dump());
    return out.str();
}

std::string prepare_run_dir(const std::string& runs_root, const json& manifest) {
    const std::string dir = runs_root + "/" + manifest_hash(manifest);
    fs::create_directories(dir);
    write_text(dir + "/manifest.json", manifest.dump(2) + "\n");
    return dir;
}

// ============================================================================
// Agent harness
// ============================================================================

AgentRunResult run_agent_over_dataset(const std::vector<Dialogue>& dialogues,
                                      const AgentRunOptions& options) {
    std::shared_ptr<const OracleIndex> index;
    if (options.oracle_stages) {
        if (options.oracle_path.empty())
            throw InvalidArgumentError("oracle run needs an oracle pack path");
        index = std::make_shared<OracleIndex>(read_oracles_jsonl(options.oracle_path));
    } else if (options.gateway == nullptr) {
        throw InvalidArgumentError("agent run needs a gateway unless oracle stages are used");
    }

    // Oracle stages issue no model calls and the Output stage is templated,
    // so the placeholder gateway is never consulted.
    BackendConfig placeholder_cfg;
    Gateway placeholder(placeholder_cfg);
    Gateway& gateway = options.gateway ? *options.gateway : placeholder;

    auto record_turn = [&options](int t) {
        return options.turns.empty() ||
               std::find(options.turns.begin(), options.turns.end(), t) != options.turns.end();
    };

    AgentRunResult result;
    for (const auto& dialogue : dialogues) {
        AgentOptions agent_options;
        agent_options.max_calls_per_turn = options.max_calls_per_turn;
        agent_options.replay_mode = true;
        agent_options.template_output = options.oracle_stages;
        agent_options.prompt_dir = options.prompt_dir;

        std::optional<SlotSchema> schema;
        std::unique_ptr<Perceiver> perceiver;
        std::unique_ptr<Forecaster> forecaster;
        if (options.oracle_stages) {
            schema = index->lookup(dialogue.id).schema;
            perceiver = make_oracle_perceiver(index, dialogue.id);
            forecaster = make_oracle_forecaster(index, dialogue.id);
        }
        AgentSession session(gateway, agent_options, std::move(schema), std::move(perceiver),
                             std::move(forecaster));

        int t = 0;
        for (const auto& turn : dialogue.turns) {
            if (turn.speaker == Speaker::Assistant) {
                session.inject_assistant_turn(turn.text);
                continue;
            }
            ++t;
            TurnResult turn_result = session.agent_turn(turn.text);
            result.max_calls_used = std::max(result.max_calls_used, turn_result.calls_used);

            json audit = turn_result.audit;
            audit["dialogue_id"] = dialogue.id;
            audit["turn_index"] = t;
            result.audits.push_back(std::move(audit));

            if (!record_turn(t)) continue;
            if (t > static_cast<int>(dialogue.reference_actions.size()))
                continue; // unlabeled decision point: reported by validate, never guessed

            ScoredDecision record;
            record.dialogue_id = dialogue.id;
            record.turn_index = t;
            record.predicted = parse_action(turn_result.final_text);
            record.reference = dialogue.reference_actions[static_cast<size_t>(t - 1)];
            record.raw_response = turn_result.final_text;
            record.model = options.model_tag;
            record.persona = dialogue.persona ? to_string(*dialogue.persona) : "none";
            record.subtype = to_string(dialogue.subtype);
            result.records.push_back(std::move(record));
        }
    }
    return result;
}

// ============================================================================
// Baseline harness
// ============================================================================

std::vector<ScoredDecision> run_baseline_over_dataset(const std::vector<Dialogue>& dialogues,
                                                      const BaselineRunOptions& options) {
    if (options.gateway == nullptr) throw InvalidArgumentError("baseline run needs a gateway");
    BaselineSpec spec = BaselineSpec::defaults(baseline_kind_from_string(options.spec_name));
    if (options.k > 0) spec.k = options.k;

    auto record_turn = [&options](int t) {
        return options.turns.empty() ||
               std::find(options.turns.begin(), options.turns.end(), t) != options.turns.end();
    };

    std::vector<ScoredDecision> records;
    for (const auto& dialogue : dialogues) {
        const int points = std::min(dialogue.decision_points(),
                                    static_cast<int>(dialogue.reference_actions.size()));
        for (int t = 1; t <= points; ++t) {
            if (!record_turn(t)) continue;
            ScoredDecision record;
            record.dialogue_id = dialogue.id;
            record.turn_index = t;
            record.reference = dialogue.reference_actions[static_cast<size_t>(t - 1)];
            record.model = options.model_tag.empty() ? options.spec_name : options.model_tag;
            record.persona = dialogue.persona ? to_string(*dialogue.persona) : "none";
            record.subtype = to_string(dialogue.subtype);
            try {
                BaselineOutput output = run_baseline(spec, dialogue.prefix_for_decision(t),
                                                     *options.gateway, options.prompt_dir);
                record.predicted = output.action;
                record.raw_response = output.final_text;
            } catch (const Error& e) {
                record.predicted = std::nullopt; // counted incorrect, never guessed
                record.raw_response = std::string("[baseline failure] ") + e.what();
            }
            records.push_back(std::move(record));
        }
    }
    return records;
}

// ============================================================================
// Judge harness
// ============================================================================

JudgeRunResult judge_over_records(const std::vector<ScoredDecision>& records,
                                  const std::vector<Dialogue>& dialogues,
                                  const JudgeRunOptions& options) {
    if (options.gateway == nullptr) throw InvalidArgumentError("judge run needs a gateway");

    std::map<std::string, const Dialogue*> by_id;
    for (const auto& dialogue : dialogues) by_id[dialogue.id] = &dialogue;

    // Candidates: turns where the system actually asked and a golden
    // clarification exists for that decision point.
    std::map<std::string, std::vector<size_t>> by_subtype;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& record = records[i];
        if (!record.predicted || *record.predicted != Action::Clarify) continue;
        if (record.reference != Action::Clarify) continue;
        if (!by_id.count(record.dialogue_id)) continue;
        by_subtype[record.subtype].push_back(i);
    }

    JudgeRunResult result;
    std::map<std::string, std::pair<double, int>> sums;
    for (auto& [subtype, indices] : by_subtype) {
        deterministic_shuffle(indices, options.seed ^ fnv1a64(subtype));
        const size_t take = std::min(indices.size(), static_cast<size_t>(options.per_subtype));
        std::vector<size_t> chosen(indices.begin(), indices.begin() + take);
        std::sort(chosen.begin(), chosen.end());
        for (size_t i : chosen) {
            const auto& record = records[i];
            const Dialogue& dialogue = *by_id.at(record.dialogue_id);

            // The golden for decision point t is the (number of Clarify
            // references before t)-th entry.
            size_t golden_index = 0;
            for (int t = 1; t < record.turn_index; ++t)
                if (dialogue.reference_actions[static_cast<size_t>(t - 1)] == Action::Clarify)
                    ++golden_index;
            if (golden_index >= dialogue.golden_clarifications.size()) continue;

            const std::string candidate_id =
                record.dialogue_id + "#" + std::to_string(record.turn_index);
            JudgeVerdict verdict = judge_quality(
                dialogue.turns.front().text, dialogue.golden_clarifications[golden_index],
                record.raw_response, *options.gateway, options.prompt_dir, candidate_id);

            json entry = verdict.to_json();
            entry["dialogue_id"] = record.dialogue_id;
            entry["turn_index"] = record.turn_index;
            entry["subtype"] = record.subtype;
            result.verdicts.push_back(std::move(entry));
            sums[record.subtype].first += verdict.score;
            sums[record.subtype].second += 1;
        }
    }

    json per_subtype = json::object();
    double total = 0.0;
    int count = 0;
    for (const auto& [subtype, sum] : sums) {
        per_subtype[subtype] = {{"mean_score", sum.first / sum.second}, {"count", sum.second}};
        total += sum.first;
        count += sum.second;
    }
    result.summary = {{"per_subtype", per_subtype},
                      {"overall_mean", count ? total / count : 0.0},
                      {"count", count}};
    return result;
}

// ============================================================================
// Subcommands
// ============================================================================

namespace {

struct CommonOptions {
    std::string config_path;
    std::string data_dir;
    std::string runs_root;
};

RepoConfig resolve_config(const CommonOptions& common) {
    RepoConfig config;
    if (!common.config_path.empty()) config = RepoConfig::load(common.config_path);
    if (!common.data_dir.empty()) config.data_dir = common.data_dir;
    if (!common.runs_root.empty()) config.runs_root = common.runs_root;
    return config;
}

json config_manifest(const RepoConfig& config) {
    return {{"data_dir", config.data_dir},
            {"tau_sem", config.tau_sem},
            {"per_subtype", config.per_subtype},
            {"judge_per_subtype", config.judge_per_subtype},
            {"agent_budget", config.agent_budget},
            {"seed", config.seed}};
}

std::vector<AmbiguitySubtype> parse_subtypes(const std::string& csv) {
    if (csv.empty() || csv == "all") return {};
    std::vector<AmbiguitySubtype> out;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) out.push_back(subtype_from_string(token));
    return out;
}

std::vector<int> parse_turns(const std::string& csv) {
    if (csv.empty() || csv == "all") return {};
    std::vector<int> out;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) out.push_back(std::stoi(token));
    return out;
}

int cmd_build(const CommonOptions& common, const std::string& mode, int per_subtype,
              const std::string& subtypes_csv, double tau, std::uint64_t seed,
              const std::string& backend_name) {
    RepoConfig config = resolve_config(common);
    if (per_subtype > 0) config.per_subtype = per_subtype;
    if (tau > 0) config.tau_sem = tau;
    config.seed = seed;

    json manifest = {{"command", "build"},
                     {"mode", mode},
                     {"per_subtype", config.per_subtype},
                     {"subtypes", subtypes_csv.empty() ? "all" : subtypes_csv},
                     {"tau_sem", config.tau_sem},
                     {"seed", config.seed},
                     {"config", config_manifest(config)}};

    std::unique_ptr<Gateway> chat;
    if (mode == "model") {
        manifest["backend"] = backend_name;
        chat = std::make_unique<Gateway>(config.gateway(backend_name));
    } else if (mode != "template") {
        throw UsageError("--mode must be template or model");
    }

    const std::string run_dir = prepare_run_dir(config.runs_root, manifest);

    BuildOptions options;
    options.subtypes = parse_subtypes(subtypes_csv);
    options.per_subtype = config.per_subtype;
    options.tau_sem = config.tau_sem;
    options.mode = mode == "model" ? SimulatorMode::Model : SimulatorMode::Template;
    options.chat_gateway = chat.get();
    options.prompt_dir = config.data_dir + "/prompts";
    options.seed = config.seed;

    BuildResult result = build_dataset(options);
    write_dialogues_jsonl(run_dir + "/dialogues.jsonl", result.dialogues);
    if (!result.oracles.empty()) write_oracles_jsonl(run_dir + "/oracle.jsonl", result.oracles);
    write_text(run_dir + "/stats.json", result.stats.to_json().dump(2) + "\n");

    std::cout << "run: " << run_dir << "\n"
              << "dialogues: " << result.stats.total << "\n"
              << "mean decision points: " << result.stats.mean_decision_points << "\n"
              << "mean token length: " << result.stats.mean_token_length << "\n";
    return 0;
}

int cmd_simulate(const CommonOptions& common, const std::string& scenario_id,
                 const std::string& persona_name, std::uint64_t seed) {
    RepoConfig config = resolve_config(common);
    auto scenarios = load_scenario_packs(config.data_dir + "/scenarios");
    const Scenario* scenario = nullptr;
    for (const auto& s : scenarios)
        if (s.id == scenario_id) scenario = &s;
    if (scenario == nullptr) throw InvalidArgumentError("unknown scenario: " + scenario_id);
    if (scenario->clarifying_question.empty())
        throw InvalidArgumentError("scenario has no clarifying question to answer");

    json manifest = {{"command", "simulate"},
                     {"scenario", scenario_id},
                     {"persona", persona_name},
                     {"seed", seed},
                     {"config", config_manifest(config)}};
    const std::string run_dir = prepare_run_dir(config.runs_root, manifest);

    std::vector<Persona> personas;
    if (persona_name == "all")
        personas = all_personas();
    else
        personas.push_back(persona_from_string(persona_name));

    json replies = json::object();
    for (Persona persona : personas) {
        SimulationContext context;
        context.history = {{Speaker::User, scenario->seed_query, 1},
                           {Speaker::Assistant, scenario->clarifying_question, 2}};
        context.persona = persona;
        context.clarifying_question = scenario->clarifying_question;
        context.scenario = *scenario;
        context.seed = seed;
        auto reply = simulate_reply(context, SimulatorMode::Template);
        replies[to_string(persona)] = {
            {"text", reply.text},
            {"reference_action", to_string(reference_action_after(persona))}};
        std::cout << to_string(persona) << ": " << reply.text << "\n";
    }
    write_text(run_dir + "/simulate.json",
               json{{"scenario", scenario->to_json()}, {"replies", replies}}.dump(2) + "\n");
    std::cout << "run: " << run_dir << "\n";
    return 0;
}

void score_and_write(const std::vector<ScoredDecision>& records, const std::string& run_dir) {
    ScoreTable table = score_run(records);
    write_text(run_dir + "/scores.csv", render_csv(table));
    write_text(run_dir + "/report.md", render_markdown(table));
    write_text(run_dir + "/rates.json", rates_json(table).dump(2) + "\n");
    if (const ScoreCell* overall = table.find("overall", 0)) {
        std::cout << "decisions: " << overall->total << "\n"
                  << "accuracy: " << overall->accuracy() << "\n"
                  << "under-clarify rate: " << overall->under_rate() << "\n"
                  << "over-clarify rate: " << overall->over_rate() << "\n";
    }
}

int cmd_run_agent(const CommonOptions& common, const std::string& dataset_path,
                  const std::string& oracle_path, const std::string& backend_name, int budget,
                  const std::string& turns_csv, const std::string& model_tag) {
    RepoConfig config = resolve_config(common);
    if (budget > 0) config.agent_budget = budget;

    json manifest = {{"command", "run-agent"},
                     {"dataset", dataset_path},
                     {"oracle", oracle_path},
                     {"backend", backend_name},
                     {"budget", config.agent_budget},
                     {"turns", turns_csv.empty() ? "all" : turns_csv},
                     {"model_tag", model_tag},
                     {"config", config_manifest(config)}};
    const std::string run_dir = prepare_run_dir(config.runs_root, manifest);

    auto dialogues = read_dialogues_jsonl(dataset_path);

    AgentRunOptions options;
    options.oracle_stages = !oracle_path.empty();
    options.oracle_path = oracle_path;
    options.max_calls_per_turn = config.agent_budget;
    options.prompt_dir = config.data_dir + "/prompts";
    options.turns = parse_turns(turns_csv);
    options.model_tag = model_tag.empty()
                            ? (options.oracle_stages ? "agent-oracle" : "agent:" + backend_name)
                            : model_tag;

    std::unique_ptr<Gateway> gateway;
    if (!options.oracle_stages) {
        gateway = std::make_unique<Gateway>(config.gateway(backend_name));
        gateway->set_trace_path(run_dir + "/trace.jsonl");
        options.gateway = gateway.get();
    }

    AgentRunResult result;
    try {
        result = run_agent_over_dataset(dialogues, options);
    } catch (const Error&) {
        std::cerr << "audit trail: " << run_dir << "/audit.jsonl\n";
        throw;
    }
    write_json_lines(run_dir + "/audit.jsonl", result.audits);
    std::vector<json> record_lines;
    for (const auto& record : result.records) record_lines.push_back(record.to_json());
    write_json_lines(run_dir + "/records.jsonl", record_lines);

    std::cout << "run: " << run_dir << "\n"
              << "max calls in a turn: " << result.max_calls_used << "\n";
    score_and_write(result.records, run_dir);
    return 0;
}

int cmd_run_baseline(const CommonOptions& common, const std::string& spec_name,
                     const std::string& dataset_path, const std::string& backend_name, int k,
                     const std::string& turns_csv, const std::string& model_tag) {
    RepoConfig config = resolve_config(common);

    json manifest = {{"command", "run-baseline"},
                     {"spec", spec_name},
                     {"dataset", dataset_path},
                     {"backend", backend_name},
                     {"k", k},
                     {"turns", turns_csv.empty() ? "all" : turns_csv},
                     {"model_tag", model_tag},
                     {"config", config_manifest(config)}};
    const std::string run_dir = prepare_run_dir(config.runs_root, manifest);

    auto dialogues = read_dialogues_jsonl(dataset_path);
    Gateway gateway(config.gateway(backend_name));
    gateway.set_trace_path(run_dir + "/trace.jsonl");

    BaselineRunOptions options;
    options.spec_name = spec_name;
    options.k = k;
    options.gateway = &gateway;
    options.prompt_dir = config.data_dir + "/prompts";
    options.turns = parse_turns(turns_csv);
    options.model_tag =
        model_tag.empty() ? spec_name + ":" + gateway.config().model : model_tag;

    auto records = run_baseline_over_dataset(dialogues, options);
    std::vector<json> record_lines;
    for (const auto& record : records) record_lines.push_back(record.to_json());
    write_json_lines(run_dir + "/records.jsonl", record_lines);

    std::cout << "run: " << run_dir << "\n";
    score_and_write(records, run_dir);
    return 0;
}

int cmd_evaluate(const CommonOptions& common, const std::string& manifest_path,
                 const std::string& records_path) {
    RepoConfig config = resolve_config(common);

    if (!records_path.empty()) {
        json manifest = {{"command", "evaluate"},
                         {"records", records_path},
                         {"config", config_manifest(config)}};
        const std::string run_dir = prepare_run_dir(config.runs_root, manifest);
        auto records = read_scored_decisions_jsonl(records_path);
        std::cout << "run: " << run_dir << "\n";
        score_and_write(records, run_dir);
        return 0;
    }

    if (manifest_path.empty())
        throw UsageError("evaluate needs --manifest or --records");
    std::ifstream in(manifest_path);
    if (!in) {
        std::cerr << "manifest not found: " << manifest_path << "\n";
        return 1;
    }
    json spec = json::parse(in, nullptr, false);
    if (spec.is_discarded()) throw ParseError("malformed manifest: " + manifest_path);

    json manifest = {{"command", "evaluate"},
                     {"spec", spec},
                     {"config", config_manifest(config)}};
    const std::string run_dir = prepare_run_dir(config.runs_root, manifest);

    auto dialogues = read_dialogues_jsonl(spec.at("dataset").get<std::string>());
    const json system = spec.at("system");
    std::vector<ScoredDecision> records;
    if (system.at("kind") == "agent") {
        AgentRunOptions options;
        options.oracle_stages = system.value("mode", "oracle") == "oracle";
        options.oracle_path = spec.value("oracle", "");
        options.max_calls_per_turn = system.value("budget", config.agent_budget);
        options.prompt_dir = config.data_dir + "/prompts";
        options.model_tag = spec.value("model_tag", "agent");
        std::unique_ptr<Gateway> gateway;
        if (!options.oracle_stages) {
            gateway = std::make_unique<Gateway>(
                config.gateway(system.value("backend", "default")));
            gateway->set_trace_path(run_dir + "/trace.jsonl");
            options.gateway = gateway.get();
        }
        auto result = run_agent_over_dataset(dialogues, options);
        write_json_lines(run_dir + "/audit.jsonl", result.audits);
        records = std::move(result.records);
    } else if (system.at("kind") == "baseline") {
        Gateway gateway(config.gateway(system.value("backend", "default")));
        gateway.set_trace_path(run_dir + "/trace.jsonl");
        BaselineRunOptions options;
        options.spec_name = system.value("spec", "base");
        options.k = system.value("k", 0);
        options.gateway = &gateway;
        options.prompt_dir = config.data_dir + "/prompts";
        options.model_tag = spec.value("model_tag", "");
        records = run_baseline_over_dataset(dialogues, options);
    } else {
        throw UsageError("manifest system.kind must be agent or baseline");
    }

    std::vector<json> record_lines;
    for (const auto& record : records) record_lines.push_back(record.to_json());
    write_json_lines(run_dir + "/records.jsonl", record_lines);
    std::cout << "run: " << run_dir << "\n";
    score_and_write(records, run_dir);
    return 0;
}

int cmd_judge(const CommonOptions& common, const std::string& records_path,
              const std::string& dataset_path, int per_subtype,
              const std::string& backend_name, std::uint64_t seed) {
    RepoConfig config = resolve_config(common);
    if (per_subtype > 0) config.judge_per_subtype = per_subtype;

    json manifest = {{"command", "judge"},
                     {"records", records_path},
                     {"dataset", dataset_path},
                     {"per_subtype", config.judge_per_subtype},
                     {"backend", backend_name},
                     {"seed", seed},
                     {"config", config_manifest(config)}};
    const std::string run_dir = prepare_run_dir(config.runs_root, manifest);

    auto records = read_scored_decisions_jsonl(records_path);
    auto dialogues = read_dialogues_jsonl(dataset_path);
    Gateway gateway(config.gateway(backend_name));
    gateway.set_trace_path(run_dir + "/trace.jsonl");

    JudgeRunOptions options;
    options.per_subtype = config.judge_per_subtype;
    options.gateway = &gateway;
    options.prompt_dir = config.data_dir + "/prompts";
    options.seed = seed;

    JudgeRunResult result = judge_over_records(records, dialogues, options);
    write_json_lines(run_dir + "/judge.jsonl", result.verdicts);
    write_text(run_dir + "/judge_summary.json", result.summary.dump(2) + "\n");

    std::cout << "run: " << run_dir << "\n"
              << "judged: " << result.summary.at("count") << "\n"
              << "overall mean score: " << result.summary.at("overall_mean") << "\n";
    return 0;
}

ScoreTable table_from_rates(const json& rates) {
    ScoreTable table;
    table.model = rates.value("model", "");
    for (const auto& [row, by_turn] : rates.at("rows").items()) {
        for (const auto& [turn_key, cell] : by_turn.items()) {
            ScoreCell& out = table.cells[row][turn_key == "all" ? 0 : std::stoi(turn_key)];
            out.total = cell.at("total").get<long long>();
            out.correct = cell.at("correct").get<long long>();
            out.under = cell.at("under").get<long long>();
            out.over = cell.at("over").get<long long>();
            out.invalid = cell.at("invalid").get<long long>();
        }
    }
    return table;
}

int cmd_report(const std::string& run_dir) {
    std::ifstream in(run_dir + "/rates.json");
    if (!in) {
        std::cerr << "no score tables in " << run_dir << "\n";
        return 1;
    }
    json rates = json::parse(in, nullptr, false);
    if (rates.is_discarded() || !rates.contains("rows") || rates.at("rows").empty()) {
        std::cerr << "no score tables in " << run_dir << "\n";
        return 1;
    }
    ScoreTable table = table_from_rates(rates);
    write_text(run_dir + "/report.md", render_markdown(table));
    write_text(run_dir + "/scores.csv", render_csv(table));
    std::cout << "report: " << run_dir << "/report.md\n";
    return 0;
}

} // namespace

// ============================================================================
// Entry point
// ============================================================================

int run_command(int argc, const char* const* argv) {
    CLI::App app{"multi-turn clarification benchmark and agent toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonOptions common;

    auto add_common = [&common](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "config file (JSON)");
        cmd->add_option("--data-dir", common.data_dir, "data directory");
        cmd->add_option("--runs-root", common.runs_root, "root for run directories");
    };

    // build
    std::string build_mode = "template", build_subtypes = "all", build_backend = "default";
    int build_per_subtype = 0;
    double build_tau = 0.0;
    std::uint64_t build_seed = 0;
    auto* build = app.add_subcommand("build", "construct the dialogue dataset");
    add_common(build);
    build->add_option("--mode", build_mode, "template or model");
    build->add_option("--per-subtype", build_per_subtype, "seeds per subtype (post-dedup)");
    build->add_option("--subtypes", build_subtypes, "comma-separated subtypes or 'all'");
    build->add_option("--tau", build_tau, "semantic dedup threshold");
    build->add_option("--seed", build_seed, "build seed");
    build->add_option("--backend", build_backend, "chat gateway name (model mode)");

    // simulate
    std::string sim_scenario = "travel", sim_persona = "all";
    std::uint64_t sim_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "produce persona replies for a scenario");
    add_common(simulate);
    simulate->add_option("--scenario", sim_scenario, "scenario id");
    simulate->add_option("--persona", sim_persona, "persona name or 'all'");
    simulate->add_option("--seed", sim_seed, "simulation seed");

    // run-agent
    std::string agent_dataset, agent_oracle, agent_backend = "default", agent_turns,
        agent_tag;
    int agent_budget = 0;
    auto* run_agent = app.add_subcommand("run-agent", "replay the agent over a dataset");
    add_common(run_agent);
    run_agent->add_option("--dataset", agent_dataset, "dialogues JSONL")->required();
    run_agent->add_option("--oracle", agent_oracle, "oracle pack JSONL (ground-truth stages)");
    run_agent->add_option("--backend", agent_backend, "chat gateway name");
    run_agent->add_option("--budget", agent_budget, "model calls per turn");
    run_agent->add_option("--turns", agent_turns, "decision points to record, e.g. 1,2");
    run_agent->add_option("--model-tag", agent_tag, "tag recorded in the score table");

    // run-baseline
    std::string baseline_spec = "base", baseline_dataset, baseline_backend = "default",
        baseline_turns, baseline_tag;
    int baseline_k = 0;
    auto* run_baseline_cmd = app.add_subcommand("run-baseline", "run a prompting baseline");
    add_common(run_baseline_cmd);
    run_baseline_cmd->add_option("--spec", baseline_spec, "base, majority, or cot");
    run_baseline_cmd->add_option("--dataset", baseline_dataset, "dialogues JSONL")->required();
    run_baseline_cmd->add_option("--backend", baseline_backend, "chat gateway name");
    run_baseline_cmd->add_option("--k", baseline_k, "sample count override");
    run_baseline_cmd->add_option("--turns", baseline_turns, "decision points to record");
    run_baseline_cmd->add_option("--model-tag", baseline_tag, "tag recorded in the score table");

    // evaluate
    std::string eval_manifest, eval_records;
    auto* evaluate = app.add_subcommand("evaluate", "run a system and score its decisions");
    add_common(evaluate);
    evaluate->add_option("--manifest", eval_manifest, "evaluation manifest (JSON)");
    evaluate->add_option("--records", eval_records, "pre-computed decision records JSONL");

    // judge
    std::string judge_records, judge_dataset, judge_backend = "default";
    int judge_per_subtype = 0;
    std::uint64_t judge_seed = 0;
    auto* judge = app.add_subcommand("judge", "score clarifying-question quality");
    add_common(judge);
    judge->add_option("--records", judge_records, "decision records JSONL")->required();
    judge->add_option("--dataset", judge_dataset, "dialogues JSONL")->required();
    judge->add_option("--per-subtype", judge_per_subtype, "instances judged per subtype");
    judge->add_option("--backend", judge_backend, "judge gateway name");
    judge->add_option("--seed", judge_seed, "sampling seed");

    // report
    std::string report_run;
    auto* report = app.add_subcommand("report", "re-render reports for a run directory");
    report->add_option("--run", report_run, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (build->parsed())
            return cmd_build(common, build_mode, build_per_subtype, build_subtypes, build_tau,
                             build_seed, build_backend);
        if (simulate->parsed()) return cmd_simulate(common, sim_scenario, sim_persona, sim_seed);
        if (run_agent->parsed())
            return cmd_run_agent(common, agent_dataset, agent_oracle, agent_backend,
                                 agent_budget, agent_turns, agent_tag);
        if (run_baseline_cmd->parsed())
            return cmd_run_baseline(common, baseline_spec, baseline_dataset, baseline_backend,
                                    baseline_k, baseline_turns, baseline_tag);
        if (evaluate->parsed()) return cmd_evaluate(common, eval_manifest, eval_records);
        if (judge->parsed())
            return cmd_judge(common, judge_records, judge_dataset, judge_per_subtype,
                             judge_backend, judge_seed);
        if (report->parsed()) return cmd_report(report_run);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace clarify
