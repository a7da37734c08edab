#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "clarify/errors.hpp"
#include "clarify/slot_fsm.hpp"

using namespace clarify;

// ============================================================================
// Independent oracles, written from the stated rules before the checks below
// ============================================================================

namespace {

// Exhaustive single-step transition oracle over (state, relation, equality).
SlotStatus oracle_step(const SlotStatus& current, const SlotObservation& obs) {
    if (obs.relation == Relation::Contradicts) return SlotStatus::conflict(obs.extracted_value);
    if (current.state == SlotState::Unfilled) return SlotStatus::filled(obs.extracted_value);
    if (current.state == SlotState::Conflict) return SlotStatus::filled(obs.extracted_value);
    // Filled + Provides
    if (normalize_slot_value(*current.value) == normalize_slot_value(obs.extracted_value))
        return current;
    return SlotStatus::conflict(obs.extracted_value);
}

// Direct reading of the stopping rule: all required filled, no conflict
// anywhere in S.
bool oracle_stop(const SlotSchema& schema, const std::vector<SlotStatus>& statuses) {
    for (size_t i = 0; i < schema.slots.size(); ++i) {
        if (schema.is_required(schema.slots[i]) && statuses[i].state != SlotState::Filled)
            return false;
        if (statuses[i].state == SlotState::Conflict) return false;
    }
    return true;
}

// Priority sorter: conflicts, then required unfilled, then optional unfilled.
std::vector<std::string> oracle_unresolved(const SlotSchema& schema,
                                           const std::vector<SlotStatus>& statuses) {
    struct Entry {
        int priority;
        size_t index;
        std::string name;
    };
    std::vector<Entry> entries;
    for (size_t i = 0; i < schema.slots.size(); ++i) {
        if (statuses[i].state == SlotState::Conflict)
            entries.push_back({0, i, schema.slots[i]});
        else if (statuses[i].state == SlotState::Unfilled)
            entries.push_back({schema.is_required(schema.slots[i]) ? 1 : 2, i, schema.slots[i]});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.priority != b.priority ? a.priority < b.priority : a.index < b.index;
    });
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.name);
    return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SlotSchema schema_of(int n, const std::vector<int>& required_indices) {
    SlotSchema schema;
    for (int i = 0; i < n; ++i) schema.slots.push_back("s" + std::to_string(i + 1));
    for (int i : required_indices) schema.required.push_back("s" + std::to_string(i + 1));
    return schema;
}

// Enumerates the i-th of 3^n status vectors (base-3 digits).
std::vector<SlotStatus> nth_status_vector(int n, int index) {
    std::vector<SlotStatus> statuses;
    for (int slot = 0; slot < n; ++slot) {
        switch (index % 3) {
            case 0: statuses.push_back(SlotStatus::unfilled()); break;
            case 1: statuses.push_back(SlotStatus::filled("v" + std::to_string(slot))); break;
            default: statuses.push_back(SlotStatus::conflict("w" + std::to_string(slot))); break;
        }
        index /= 3;
    }
    return statuses;
}

} // namespace

// ============================================================================
// Schema and status basics
// ============================================================================

TEST_CASE("schema validation rejects empty, duplicate, and dangling-required") {
    CHECK_THROWS_AS(SlotSchema{}.validate(), InvalidArgumentError);
    SlotSchema dup{{"a", "a"}, {}};
    CHECK_THROWS_AS(dup.validate(), InvalidArgumentError);
    SlotSchema dangling{{"a"}, {"b"}};
    CHECK_THROWS_AS(dangling.validate(), InvalidArgumentError);
    SlotSchema ok{{"a", "b"}, {"b"}};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("fresh state starts unfilled at turn zero") {
    DialogueState state(schema_of(2, {0}));
    CHECK(state.turn() == 0);
    CHECK(state.status("s1").state == SlotState::Unfilled);
    CHECK_FALSE(state.status("s1").value.has_value());
}

// ============================================================================
// Transitions
// ============================================================================

TEST_CASE("first fill: unfilled + provides -> filled") {
    DialogueState state(schema_of(1, {0}));
    auto next = apply_observations(state, {{"s1", "Kyoto", Relation::Provides}});
    CHECK(next.status("s1").state == SlotState::Filled);
    CHECK(*next.status("s1").value == "Kyoto");
    CHECK(next.turn() == 1);
}

TEST_CASE("conflicting re-fill: filled + different value -> conflict with the new value") {
    DialogueState state(schema_of(1, {0}));
    state = apply_observations(state, {{"s1", "cheap", Relation::Provides}});
    state = apply_observations(state, {{"s1", "fancy", Relation::Provides}});
    CHECK(state.status("s1").state == SlotState::Conflict);
    CHECK(*state.status("s1").value == "fancy");
}

TEST_CASE("explicit repair: conflict + provides -> filled with the new value") {
    DialogueState state(schema_of(1, {0}));
    state = apply_observations(state, {{"s1", "cheap", Relation::Provides}});
    state = apply_observations(state, {{"s1", "fancy", Relation::Provides}});
    state = apply_observations(state, {{"s1", "mid-range", Relation::Provides}});
    CHECK(state.status("s1").state == SlotState::Filled);
    CHECK(*state.status("s1").value == "mid-range");
}

TEST_CASE("re-fill equality is case-insensitive and trim-normalized") {
    DialogueState state(schema_of(1, {0}));
    state = apply_observations(state, {{"s1", "Kyoto", Relation::Provides}});
    state = apply_observations(state, {{"s1", "  kyoto ", Relation::Provides}});
    CHECK(state.status("s1").state == SlotState::Filled);
    CHECK(*state.status("s1").value == "Kyoto");
}

TEST_CASE("single-step transitions match the exhaustive table oracle") {
    const std::vector<SlotStatus> starts = {
        SlotStatus::unfilled(), SlotStatus::filled("alpha"), SlotStatus::conflict("beta")};
    const std::vector<Relation> relations = {Relation::Provides, Relation::Contradicts};
    const std::vector<std::string> values = {"alpha", "gamma"}; // same-as-filled and different

    for (const auto& start : starts) {
        for (auto relation : relations) {
            for (const auto& value : values) {
                SlotObservation obs{"s1", value, relation};
                DialogueState state(schema_of(1, {0}), {start}, 0);
                auto got = apply_observations(state, {obs}).status("s1");
                auto want = oracle_step(start, obs);
                CAPTURE(to_string(start.state));
                CAPTURE(to_string(relation));
                CAPTURE(value);
                CHECK(got.state == want.state);
                CHECK(got.value == want.value);
            }
        }
    }
}

TEST_CASE("unknown slot names are rejected with a schema mismatch") {
    DialogueState state(schema_of(1, {0}));
    CHECK_THROWS_AS(apply_observations(state, {{"nope", "x", Relation::Provides}}), StateError);
}

TEST_CASE("unobserved slots are unchanged and every batch bumps the turn") {
    DialogueState state(schema_of(3, {0, 1}));
    state = apply_observations(state, {{"s2", "x", Relation::Provides}});
    CHECK(state.turn() == 1);
    CHECK(state.status("s1").state == SlotState::Unfilled);
    CHECK(state.status("s3").state == SlotState::Unfilled);
    state = apply_observations(state, {});
    CHECK(state.turn() == 2);
    CHECK(state.status("s2").state == SlotState::Filled);
}

// ============================================================================
// Stopping rule
// ============================================================================

TEST_CASE("stopping-rule spec examples") {
    // required={s1}: filled + unrelated unfilled stops
    DialogueState a(schema_of(2, {0}),
                    {SlotStatus::filled("x"), SlotStatus::unfilled()}, 1);
    CHECK(rsc_satisfied(a));

    // a conflict anywhere in S blocks stopping, not just in S*
    DialogueState b(schema_of(2, {0}),
                    {SlotStatus::filled("x"), SlotStatus::conflict("y")}, 1);
    CHECK_FALSE(rsc_satisfied(b));
}

TEST_CASE("n=3, required={s1,s2}: exactly 2 of the 27 assignments stop") {
    const SlotSchema schema = schema_of(3, {0, 1});
    int satisfied = 0;
    for (int i = 0; i < 27; ++i) {
        DialogueState state(schema, nth_status_vector(3, i), 0);
        if (rsc_satisfied(state)) ++satisfied;
    }
    CHECK(satisfied == 2); // s3 free to be unfilled or filled
}

TEST_CASE("rsc_satisfied equals brute-force evaluation over all 3^n states, n <= 4") {
    for (int n = 1; n <= 4; ++n) {
        std::vector<std::vector<int>> required_choices = {{}, {0}};
        std::vector<int> all;
        for (int i = 0; i < n; ++i) all.push_back(i);
        required_choices.push_back(all);

        int states = 1;
        for (int i = 0; i < n; ++i) states *= 3;
        for (const auto& required : required_choices) {
            const SlotSchema schema = schema_of(n, required);
            for (int i = 0; i < states; ++i) {
                auto statuses = nth_status_vector(n, i);
                DialogueState state(schema, statuses, 0);
                CHECK(rsc_satisfied(state) == oracle_stop(schema, statuses));
            }
        }
    }
}

// ============================================================================
// Prioritization
// ============================================================================

TEST_CASE("unresolved ordering: conflicts first, then required, then optional") {
    DialogueState state(schema_of(2, {1}),
                        {SlotStatus::conflict("v"), SlotStatus::unfilled()}, 0);
    CHECK(unresolved_slots(state) == std::vector<std::string>{"s1", "s2"});
}

TEST_CASE("all filled leaves nothing unresolved") {
    DialogueState state(schema_of(2, {0}),
                        {SlotStatus::filled("a"), SlotStatus::filled("b")}, 0);
    CHECK(unresolved_slots(state).empty());
}

TEST_CASE("optional unfilled slots trail and do not block stopping") {
    DialogueState state(schema_of(2, {0}),
                        {SlotStatus::filled("a"), SlotStatus::unfilled()}, 0);
    CHECK(unresolved_slots(state) == std::vector<std::string>{"s2"});
    CHECK(rsc_satisfied(state));
}

TEST_CASE("unresolved_slots matches the brute-force sorter; head is blocking iff not RSC") {
    std::uint64_t rng = 2024;
    for (int n = 1; n <= 4; ++n) {
        int states = 1;
        for (int i = 0; i < n; ++i) states *= 3;
        std::vector<int> required;
        for (int i = 0; i < n; ++i)
            if (splitmix64(rng) % 2 == 0) required.push_back(i);
        const SlotSchema schema = schema_of(n, required);
        for (int i = 0; i < states; ++i) {
            auto statuses = nth_status_vector(n, i);
            DialogueState state(schema, statuses, 0);
            auto got = unresolved_slots(state);
            CHECK(got == oracle_unresolved(schema, statuses));

            // empty-of-required-and-conflict  <=>  rsc_satisfied
            bool blocking = false;
            for (const auto& slot : got)
                if (state.status(slot).state == SlotState::Conflict ||
                    schema.is_required(slot))
                    blocking = true;
            CHECK(blocking == !rsc_satisfied(state));
        }
    }
}

// ============================================================================
// Properties
// ============================================================================

TEST_CASE("permuting observations on disjoint slots yields identical states") {
    std::uint64_t rng = 7;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(splitmix64(rng) % 3);
        SlotSchema schema = schema_of(n, {0});
        DialogueState start(schema);

        // one observation per distinct slot, in random order
        std::vector<SlotObservation> batch;
        for (int i = 0; i < n; ++i) {
            if (splitmix64(rng) % 4 == 0) continue;
            batch.push_back({"s" + std::to_string(i + 1),
                             "v" + std::to_string(splitmix64(rng) % 5),
                             splitmix64(rng) % 3 == 0 ? Relation::Contradicts
                                                      : Relation::Provides});
        }
        auto shuffled = batch;
        for (size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[splitmix64(rng) % i]);

        auto a = apply_observations(start, batch);
        auto b = apply_observations(start, shuffled);
        CHECK(a == b);
    }
}

TEST_CASE("cooperative input never decreases the filled count") {
    std::uint64_t rng = 99;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(splitmix64(rng) % 4);
        DialogueState state(schema_of(n, {}));
        int last_filled = 0;
        for (int step = 0; step < 5; ++step) {
            std::vector<SlotObservation> batch;
            for (int i = 0; i < n; ++i) {
                if (splitmix64(rng) % 2) continue;
                const std::string slot = "s" + std::to_string(i + 1);
                // consistent with the current fill, or a fresh value for unfilled
                const auto& status = state.status(slot);
                batch.push_back({slot,
                                 status.state == SlotState::Filled ? *status.value : "fresh",
                                 Relation::Provides});
            }
            state = apply_observations(state, batch);
            int filled = 0;
            for (const auto& status : state.statuses())
                if (status.state == SlotState::Filled) ++filled;
            CHECK(filled >= last_filled);
            last_filled = filled;
        }
    }
}

TEST_CASE("state snapshots round-trip through the audit JSON schema") {
    SlotSchema schema = schema_of(3, {0, 2});
    DialogueState state(schema,
                        {SlotStatus::filled("Kyoto"), SlotStatus::unfilled(),
                         SlotStatus::conflict("fancy")},
                        4);
    auto snapshot = state.to_json();
    CHECK(snapshot.at("turn") == 4);
    CHECK(snapshot.at("slots").at("s1").at("status") == "filled");
    CHECK(snapshot.at("slots").at("s2").at("status") == "unfilled");
    CHECK_FALSE(snapshot.at("slots").at("s2").contains("value"));
    CHECK(snapshot.at("slots").at("s3").at("value") == "fancy");

    auto back = DialogueState::from_json(snapshot, schema);
    CHECK(back == state);
}
