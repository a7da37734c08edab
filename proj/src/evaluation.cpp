#include "clarify/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "clarify/errors.hpp"
#include "clarify/prompts.hpp"

namespace clarify {

using nlohmann::json;

// ============================================================================
// Response parsing
// ============================================================================

namespace {

bool starts_with_ci(const std::string& text, const std::string& prefix) {
    if (text.size() < prefix.size()) return false;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

} // namespace

std::optional<Action> parse_action(const std::string& response) {
    size_t begin = 0;
    while (begin < response.size() &&
           std::isspace(static_cast<unsigned char>(response[begin])))
        ++begin;
    const std::string body = response.substr(begin);
    if (starts_with_ci(body, "the answer is")) return Action::Answer;
    if (starts_with_ci(body, "the clarifying question is")) return Action::Clarify;
    return std::nullopt;
}

DecisionOutcome classify_prediction(const std::optional<Action>& predicted, Action reference) {
    if (predicted) return classify_decision(*predicted, reference);
    return reference == Action::Clarify ? DecisionOutcome::UnderClarify
                                        : DecisionOutcome::OverClarify;
}

// ============================================================================
// Scored decisions
// ============================================================================

json ScoredDecision::to_json() const {
    return {{"dialogue_id", dialogue_id},
            {"turn_index", turn_index},
            {"predicted", predicted ? json(to_string(*predicted)) : json(nullptr)},
            {"reference", to_string(reference)},
            {"outcome", to_string(outcome())},
            {"raw_response", raw_response},
            {"model", model},
            {"persona", persona},
            {"subtype", subtype}};
}

ScoredDecision ScoredDecision::from_json(const json& record) {
    ScoredDecision out;
    out.dialogue_id = record.at("dialogue_id").get<std::string>();
    out.turn_index = record.at("turn_index").get<int>();
    if (record.contains("predicted") && !record.at("predicted").is_null())
        out.predicted = action_from_string(record.at("predicted").get<std::string>());
    out.reference = action_from_string(record.at("reference").get<std::string>());
    out.raw_response = record.value("raw_response", "");
    out.model = record.value("model", "");
    out.persona = record.value("persona", "none");
    out.subtype = record.value("subtype", "");
    return out;
}

void write_scored_decisions_jsonl(const std::string& path,
                                  const std::vector<ScoredDecision>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& r : records) out << r.to_json().dump() << "\n";
}

std::vector<ScoredDecision> read_scored_decisions_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<ScoredDecision> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(ScoredDecision::from_json(json::parse(line)));
    }
    return records;
}

// ============================================================================
// Scoring
// ============================================================================

const ScoreCell* ScoreTable::find(const std::string& row, int turn) const {
    auto row_it = cells.find(row);
    if (row_it == cells.end()) return nullptr;
    auto cell_it = row_it->second.find(turn);
    return cell_it == row_it->second.end() ? nullptr : &cell_it->second;
}

ScoreTable score_run(const std::vector<ScoredDecision>& records) {
    ScoreTable table;
    if (!records.empty()) table.model = records.front().model;

    auto bump = [&table](const std::string& row, int turn, const ScoredDecision& r) {
        ScoreCell& cell = table.cells[row][turn];
        ++cell.total;
        if (!r.predicted) ++cell.invalid;
        switch (r.outcome()) {
            case DecisionOutcome::Correct: ++cell.correct; break;
            case DecisionOutcome::UnderClarify: ++cell.under; break;
            case DecisionOutcome::OverClarify: ++cell.over; break;
        }
    };

    for (const auto& r : records) {
        bump("overall", 0, r);
        bump("overall", r.turn_index, r);
        bump("persona:" + r.persona, 0, r);
        bump("persona:" + r.persona, r.turn_index, r);
        bump("subtype:" + r.subtype, 0, r);
        bump("subtype:" + r.subtype, r.turn_index, r);
    }
    return table;
}

// ============================================================================
// Rendering
// ============================================================================

namespace {

std::string format_rate(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << value;
    return out.str();
}

std::vector<int> table_turns(const ScoreTable& table) {
    std::vector<int> turns;
    for (const auto& [row, cells] : table.cells)
        for (const auto& [turn, cell] : cells)
            if (std::find(turns.begin(), turns.end(), turn) == turns.end()) turns.push_back(turn);
    std::sort(turns.begin(), turns.end());
    return turns;
}

} // namespace

std::string render_csv(const ScoreTable& table) {
    std::ostringstream out;
    out << "model,row,turn,total,correct,under,over,invalid,accuracy,under_rate,over_rate\n";
    for (const auto& [row, cells] : table.cells) {
        for (const auto& [turn, cell] : cells) {
            out << table.model << "," << row << "," << (turn == 0 ? "all" : std::to_string(turn))
                << "," << cell.total << "," << cell.correct << "," << cell.under << ","
                << cell.over << "," << cell.invalid << "," << format_rate(cell.accuracy()) << ","
                << format_rate(cell.under_rate()) << "," << format_rate(cell.over_rate()) << "\n";
        }
    }
    return out.str();
}

std::string render_markdown(const ScoreTable& table) {
    const std::vector<int> turns = table_turns(table);

    // Column-wise extremes over accuracy, marking best (bold) and worst
    // (italic) per turn column.
    std::map<int, double> best, worst;
    for (int turn : turns) {
        for (const auto& [row, cells] : table.cells) {
            auto it = cells.find(turn);
            if (it == cells.end()) continue;
            const double acc = it->second.accuracy();
            if (!best.count(turn) || acc > best[turn]) best[turn] = acc;
            if (!worst.count(turn) || acc < worst[turn]) worst[turn] = acc;
        }
    }

    std::ostringstream out;
    out << "# Decision accuracy";
    if (!table.model.empty()) out << " (" << table.model << ")";
    out << "\n\n| row |";
    for (int turn : turns) out << (turn == 0 ? " all |" : " turn " + std::to_string(turn) + " |");
    out << "\n|---|";
    for (size_t i = 0; i < turns.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& [row, cells] : table.cells) {
        out << "| " << row << " |";
        for (int turn : turns) {
            auto it = cells.find(turn);
            if (it == cells.end()) {
                out << " - |";
                continue;
            }
            const double acc = it->second.accuracy();
            std::string text = format_rate(acc);
            if (acc == best[turn]) text = "**" + text + "**";
            else if (acc == worst[turn]) text = "_" + text + "_";
            out << " " << text << " |";
        }
        out << "\n";
    }
    out << "\nRates per row (all turns): accuracy / under-clarify / over-clarify\n\n";
    for (const auto& [row, cells] : table.cells) {
        auto it = cells.find(0);
        if (it == cells.end()) continue;
        out << "- " << row << ": " << format_rate(it->second.accuracy()) << " / "
            << format_rate(it->second.under_rate()) << " / "
            << format_rate(it->second.over_rate()) << " (n=" << it->second.total << ")\n";
    }
    return out.str();
}

json rates_json(const ScoreTable& table) {
    json rows = json::object();
    for (const auto& [row, cells] : table.cells) {
        json by_turn = json::object();
        for (const auto& [turn, cell] : cells) {
            by_turn[turn == 0 ? "all" : std::to_string(turn)] = {
                {"total", cell.total},         {"correct", cell.correct},
                {"under", cell.under},         {"over", cell.over},
                {"invalid", cell.invalid},     {"accuracy", cell.accuracy()},
                {"under_rate", cell.under_rate()}, {"over_rate", cell.over_rate()},
            };
        }
        rows[row] = std::move(by_turn);
    }
    return {{"model", table.model}, {"rows", rows}};
}

// ============================================================================
// LLM-as-a-judge
// ============================================================================

namespace {

std::optional<int> parse_bare_score(const std::string& response) {
    std::string trimmed;
    for (char c : response)
        if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
    if (trimmed.empty() || trimmed.size() > 2) return std::nullopt;
    if (!std::all_of(trimmed.begin(), trimmed.end(),
                     [](unsigned char c) { return std::isdigit(c); }))
        return std::nullopt;
    const int value = std::stoi(trimmed);
    if (value < 0 || value > 5) return std::nullopt;
    return value;
}

} // namespace

JudgeVerdict judge_quality(const std::string& question, const std::string& golden,
                           const std::string& candidate, Gateway& gateway,
                           const std::string& prompt_dir, const std::string& candidate_id) {
    if (golden.empty()) throw InvalidArgumentError("judge needs a non-empty golden response");

    PromptLibrary prompts(prompt_dir);
    std::vector<ChatMessage> messages = {
        {"system", prompts.raw("judge")},
        {"user", "Candidate question: " + question + "\nGolden response: " + golden +
                     "\nCandidate response: " + candidate},
    };

    std::string response = gateway.complete_one(messages);
    auto score = parse_bare_score(response);
    if (!score) {
        messages.push_back({"assistant", response});
        messages.push_back(
            {"user", "Output only a single integer from 0 to 5, with no other text."});
        response = gateway.complete_one(messages);
        score = parse_bare_score(response);
    }
    if (!score)
        throw ParseError("judge failure: expected a bare integer 0..5, got: " +
                         response.substr(0, 80));

    JudgeVerdict verdict;
    verdict.score = *score;
    verdict.candidate_id = candidate_id;
    verdict.judge_model = gateway.config().model;
    return verdict;
}

json JudgeVerdict::to_json() const {
    return {{"score", score}, {"candidate_id", candidate_id}, {"judge_model", judge_model}};
}

// ============================================================================
// Agreement statistics
// ============================================================================

KappaResult cohen_kappa(const std::vector<bool>& labels_a, const std::vector<bool>& labels_b) {
    if (labels_a.size() != labels_b.size())
        throw InvalidArgumentError("kappa needs equal-length label lists");
    if (labels_a.empty()) throw InvalidArgumentError("kappa needs at least one label");

    const auto n = static_cast<double>(labels_a.size());
    double agree = 0.0, a_pos = 0.0, b_pos = 0.0;
    for (size_t i = 0; i < labels_a.size(); ++i) {
        if (labels_a[i] == labels_b[i]) ++agree;
        if (labels_a[i]) ++a_pos;
        if (labels_b[i]) ++b_pos;
    }

    KappaResult result;
    result.observed_agreement = agree / n;
    const double pa = a_pos / n, pb = b_pos / n;
    result.expected_agreement = pa * pb + (1.0 - pa) * (1.0 - pb);
    if (result.expected_agreement < 1.0)
        result.kappa = (result.observed_agreement - result.expected_agreement) /
                       (1.0 - result.expected_agreement);
    return result;
}

std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InvalidArgumentError("pearson needs equal-length lists");
    if (x.size() < 2) throw InvalidArgumentError("pearson needs at least two points");

    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

// Regularized incomplete beta via the Lentz continued fraction; standard
// machinery for the student-t tail probability.
double betacf(double a, double b, double x) {
    constexpr int kMaxIterations = 200;
    constexpr double kEpsilon = 3.0e-12;
    constexpr double kTiny = 1.0e-30;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEpsilon) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_beta);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

} // namespace

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgumentError("paired t-test needs equal lengths");
    if (a.size() < 2) throw InvalidArgumentError("paired t-test needs at least two pairs");

    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= n;
    double variance = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i] - mean;
        variance += d * d;
    }
    variance /= (n - 1.0);

    PairedTTest result;
    result.degrees_of_freedom = static_cast<int>(a.size()) - 1;
    if (variance == 0.0) {
        result.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        result.p_two_sided = mean == 0.0 ? 1.0 : 0.0;
        return result;
    }
    result.t = mean / std::sqrt(variance / n);
    const double df = n - 1.0;
    result.p_two_sided = incomplete_beta(df / 2.0, 0.5, df / (df + result.t * result.t));
    return result;
}

} // namespace clarify
