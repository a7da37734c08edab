#include "clarify/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "clarify/errors.hpp"
#include "clarify/prompts.hpp"

namespace clarify {

using nlohmann::json;

// ============================================================================
// Seed quality
// ============================================================================

size_t whitespace_token_count(const std::string& text) {
    std::istringstream in(text);
    std::string token;
    size_t count = 0;
    while (in >> token) ++count;
    return count;
}

double seed_quality(const SeedPair& seed) {
    double q = 0.0;
    const auto amb_tokens = static_cast<double>(whitespace_token_count(seed.ambiguous_query));
    const auto clar_tokens = static_cast<double>(whitespace_token_count(seed.clarifying_question));
    if (!seed.ambiguous_query.empty()) q += 0.2;
    if (!seed.ambiguous_query.empty() &&
        (seed.ambiguous_query.back() == '.' || seed.ambiguous_query.back() == '?'))
        q += 0.1;
    if (!seed.clarifying_question.empty() && seed.clarifying_question.back() == '?') q += 0.2;
    q += 0.25 * std::min(1.0, amb_tokens / 8.0);
    q += 0.25 * std::min(1.0, clar_tokens / 10.0);
    return q;
}

// ============================================================================
// Seed generation
// ============================================================================

namespace {

std::string subtype_description(AmbiguitySubtype subtype) {
    switch (subtype) {
        case AmbiguitySubtype::Lexical:
            return "ambiguity comes from a word with multiple meanings";
        case AmbiguitySubtype::Syntactic:
            return "ambiguity comes from a sentence structure that allows multiple parses";
        case AmbiguitySubtype::Semantic:
            return "ambiguity comes from an unclear semantic role or unclear criteria";
        case AmbiguitySubtype::Goal:
            return "goal is vague or incomplete";
        case AmbiguitySubtype::Scope:
            return "intended task scope is unclear";
        case AmbiguitySubtype::IntentConflict:
            return "stated goals are incompatible with each other";
        case AmbiguitySubtype::Entity:
            return "mentioned name has several possible referents";
        case AmbiguitySubtype::Spatial:
            return "location is unspecified or underspecified";
        case AmbiguitySubtype::Temporal:
            return "time is unspecified or underspecified";
        case AmbiguitySubtype::KnowledgeGap:
            return "request assumes shared prior knowledge the assistant may not have";
        case AmbiguitySubtype::Unfamiliarity:
            return "request involves entities or facts the assistant may not know";
        case AmbiguitySubtype::Value:
            return "request uses subjective or evaluative terms without clear criteria";
        default:
            throw InvalidArgumentError("not a seed subtype: " + to_string(subtype));
    }
}

} // namespace

SeedGenerationReport generate_seeds(AmbiguitySubtype subtype, int count, Gateway& gateway,
                                    const std::string& prompt_dir) {
    if (count < 1) throw InvalidArgumentError("seed count must be >= 1");
    if (!is_seed_subtype(subtype))
        throw InvalidArgumentError("interactional subtypes describe replies, not seed queries: " +
                                   to_string(subtype));

    PromptLibrary prompts(prompt_dir);
    SeedGenerationReport report;
    int requested_lines = 0;
    const int line_budget = 3 * count;

    while (static_cast<int>(report.seeds.size()) < count && requested_lines < line_budget) {
        const int ask = std::min(count - static_cast<int>(report.seeds.size()),
                                 line_budget - requested_lines);
        requested_lines += ask;
        ++report.requests;

        const std::string prompt = prompts.render(
            "seed_generation", {{"ambiguity_type", to_string(subtype)},
                                {"number", std::to_string(ask)},
                                {"ambiguity_description", subtype_description(subtype)}});
        const std::string response = gateway.complete_one({{"user", prompt}});

        std::istringstream lines(response);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json parsed = json::parse(line, nullptr, false);
            if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("question") ||
                !parsed.contains("clarifying_question") ||
                parsed.at("question").get<std::string>().empty() ||
                parsed.at("clarifying_question").get<std::string>().empty()) {
                ++report.malformed_lines;
                continue;
            }
            if (static_cast<int>(report.seeds.size()) >= count) break;
            SeedPair seed;
            seed.ambiguous_query = parsed.at("question").get<std::string>();
            seed.clarifying_question = parsed.at("clarifying_question").get<std::string>();
            seed.subtype = subtype;
            seed.source = gateway.config().model.empty()
                              ? "generator"
                              : "generator:" + gateway.config().model;
            seed.quality = seed_quality(seed);
            report.seeds.push_back(std::move(seed));
        }
    }
    report.shortfall = count - static_cast<int>(report.seeds.size());
    return report;
}

// ============================================================================
// Cosine similarity and dedup
// ============================================================================

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.values.size() != v.values.size())
        throw InvalidArgumentError("cosine similarity needs equal-length vectors");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0)
        throw InvalidArgumentError("cosine similarity undefined for a zero-norm vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

class UnionFind {
public:
    explicit UnionFind(size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), size_t{0});
    }
    size_t find(size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(size_t a, size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<size_t> parent_;
};

} // namespace

DedupResult dedup(const std::vector<SeedPair>& seeds,
                  const std::vector<EmbeddingVector>& embeddings, double tau_sem) {
    if (seeds.size() != embeddings.size())
        throw InvalidArgumentError("dedup needs one embedding per seed");
    if (!(tau_sem > 0.0 && tau_sem < 1.0))
        throw InvalidArgumentError("tau_sem must lie in (0, 1)");

    const size_t n = seeds.size();
    UnionFind components(n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (cosine_similarity(embeddings[i], embeddings[j]) > tau_sem) // strictly above
                components.unite(i, j);

    std::map<size_t, SimilarityCluster> by_root;
    for (size_t i = 0; i < n; ++i) {
        auto& cluster = by_root[components.find(i)];
        cluster.threshold = tau_sem;
        cluster.members.push_back(i);
    }

    DedupResult result;
    for (auto& [root, cluster] : by_root) {
        cluster.representative = cluster.members.front();
        for (size_t member : cluster.members)
            if (seeds[member].quality > seeds[cluster.representative].quality)
                cluster.representative = member; // strict: ties keep the lowest index
        result.clusters.push_back(std::move(cluster));
    }
    std::sort(result.clusters.begin(), result.clusters.end(),
              [](const SimilarityCluster& a, const SimilarityCluster& b) {
                  return a.representative < b.representative;
              });
    for (const auto& cluster : result.clusters)
        result.retained.push_back(seeds[cluster.representative]);
    return result;
}

// ============================================================================
// Template seed bank
// ============================================================================

namespace {

struct BankTopic {
    std::string fill;
    std::string option_a;
    std::string option_b;
};

struct BankSubtype {
    std::string slot_name;
    std::vector<std::string> hints;
    std::vector<BankTopic> topics;
    // q_amb and q_clar patterns; <t>, <a>, <b> are filled per topic.
    std::vector<std::pair<std::string, std::string>> phrasings;
};

const std::vector<std::string>& shared_off_topic() {
    static const std::vector<std::string> kLines = {
        "By the way, is it supposed to rain tomorrow?",
        "Did you watch the game last night?",
        "Unrelated, but I am thinking of repainting my kitchen.",
        "Let's talk about something else for a moment.",
    };
    return kLines;
}

std::string fill_pattern(const std::string& pattern, const BankTopic& topic) {
    return substitute_placeholders(
        pattern, {{"t", topic.fill}, {"a", topic.option_a}, {"b", topic.option_b}});
}

const BankSubtype& bank_for(AmbiguitySubtype subtype) {
    static const std::map<AmbiguitySubtype, BankSubtype> kBank = [] {
        std::map<AmbiguitySubtype, BankSubtype> bank;

        bank[AmbiguitySubtype::Lexical] = {
            "sense",
            {"the everyday one", "whichever is more common"},
            {
                {"seal", "the marine animal", "the official stamp"},
                {"bank", "the edge of a river", "the financial institution"},
                {"bat", "the flying mammal", "the wooden club used in baseball"},
                {"crane", "the tall wading bird", "the lifting machine"},
                {"mouse", "the small rodent", "the computer pointing device"},
                {"jaguar", "the big cat", "the luxury car marque"},
                {"python", "the large snake", "the programming language"},
                {"bass", "the freshwater fish", "the low musical range"},
                {"palm", "the tropical tree", "the inner side of the hand"},
                {"ruler", "the measuring stick", "the person who governs"},
                {"pitcher", "the jug for liquids", "the baseball player"},
                {"cell", "the biological unit", "the small prison room"},
                {"bolt", "the metal fastener", "the flash of lightning"},
            },
            {
                {"Please tell me about the <t>.", "Do you mean <a> or <b>?"},
                {"Can you give me some background on the <t>?",
                 "Should I cover <a>, or <b> instead?"},
                {"I need a short write-up about the <t>.",
                 "Which one do you have in mind, <a> or <b>?"},
                {"What should I know about the <t>?", "Are you asking about <a> or about <b>?"},
                {"Could you explain the <t> to me?", "To be clear, is this about <a> or <b>?"},
                {"Share a few interesting facts about the <t>.",
                 "Is your interest in <a>, or rather in <b>?"},
                {"Give me a quick overview of the <t>.",
                 "Before I start, do you mean <a> or <b>?"},
            },
        };

        bank[AmbiguitySubtype::Syntactic] = {
            "reading",
            {"the first option", "the usual way"},
            {
                {"list movies from the 1990s starring actors from Canada",
                 "1990s films that feature Canadian actors", "Canadian films made in the 1990s"},
                {"show me articles about startups from Berlin",
                 "articles written in Berlin about startups",
                 "articles about startups based in Berlin"},
                {"find the report about the merger in the archive",
                 "the merger discussed in the archive", "the report stored in the archive"},
                {"list restaurants near parks with outdoor seating",
                 "restaurants that offer outdoor seating", "parks that offer outdoor seating"},
                {"find songs by bands from the sixties", "songs recorded in the sixties",
                 "bands formed in the sixties"},
                {"search for houses with gardens under 300k", "houses that cost under 300k",
                 "gardens smaller than 300 square meters"},
                {"show papers by researchers from MIT published last year",
                 "papers published last year", "researchers who joined MIT last year"},
                {"list paintings of women by Dutch masters",
                 "portraits of women painted by Dutch masters",
                 "paintings that depict Dutch women"},
                {"find toys for children with batteries", "toys that ship with batteries",
                 "toys that run on batteries they already own"},
                {"show flights to Paris on Friday", "flights departing on Friday",
                 "flights arriving on Friday"},
                {"list courses for beginners in Spanish",
                 "courses that teach Spanish to beginners",
                 "beginner courses delivered in Spanish"},
                {"find reviews of laptops from last month", "reviews written last month",
                 "laptops released last month"},
                {"find recipes for children with nuts", "recipes that include nuts",
                 "nut-free recipes safe for children"},
            },
            {
                {"<t>.", "Do you mean <a>, or <b>?"},
                {"Please <t>.", "Just to check, should I find <a> or <b>?"},
                {"Can you <t>?", "Which reading did you intend, <a> or <b>?"},
                {"I want you to <t>.", "Is the request about <a>, or about <b>?"},
                {"<t>, please.", "Before I search, do you want <a> or <b>?"},
                {"Help me out: <t>.", "That can be read two ways, <a> or <b>. Which one?"},
                {"Quick task: <t>.", "Should the results be <a>, or <b>?"},
            },
        };

        bank[AmbiguitySubtype::Semantic] = {
            "measure",
            {"whichever ranking", "some common measure"},
            {
                {"is New York the largest city", "by population", "by land area"},
                {"is the blue whale the biggest animal", "by weight", "by length"},
                {"which is the best-selling book", "by copies sold", "by revenue"},
                {"is Everest the tallest mountain", "by height above sea level",
                 "by base-to-peak height"},
                {"which company is the largest employer", "by headcount", "by payroll"},
                {"is the Nile the longest river", "by main channel length",
                 "by total basin size"},
                {"which movie was the most successful", "by box office", "by critical ratings"},
                {"is this the fastest train", "by top speed", "by average journey time"},
                {"which city is the most expensive", "by rent prices",
                 "by overall cost of living"},
                {"is that the most popular sport", "by participants", "by television audience"},
                {"which airport is the busiest", "by passenger count", "by flight movements"},
                {"is this the richest country", "by total output", "by income per person"},
                {"which language is the largest", "by native speakers", "by total speakers"},
            },
            {
                {"So, <t>?", "In what respect, <a> or <b>?"},
                {"Settle this for me: <t>?", "That depends on the measure: <a> or <b>?"},
                {"Quick question, <t>?", "Do you mean <a>, or <b>?"},
                {"I keep wondering, <t>?", "Should I judge it <a> or <b>?"},
                {"Tell me, <t>?", "By which standard, <a> or <b>?"},
                {"We had a debate: <t>?", "It differs <a> versus <b>. Which applies?"},
                {"Honestly, <t>?", "Is the comparison <a>, or <b>?"},
            },
        };

        bank[AmbiguitySubtype::Goal] = {
            "purpose",
            {"work", "school"},
            {
                {"a report", "an academic assignment", "a business update"},
                {"a speech", "a wedding toast", "a conference talk"},
                {"an email", "a job application", "a complaint to customer support"},
                {"a letter", "a cover letter", "a thank-you note"},
                {"a summary", "study notes", "an executive briefing"},
                {"a proposal", "a grant application", "a sales pitch"},
                {"an essay", "a school submission", "a personal blog post"},
                {"a presentation", "a classroom lesson", "an investor deck"},
                {"a poem", "a birthday card verse", "a contest entry"},
                {"a resume", "an internship application", "a senior engineering role"},
                {"a review", "a product review", "a performance review"},
                {"a plan", "a study plan", "a project schedule"},
                {"a post", "a company announcement", "a casual update for friends"},
            },
            {
                {"Help me write <t>.", "Happy to help. Is this for <a> or for <b>?"},
                {"I need to write <t>.", "Could you say whether it is <a> or <b>?"},
                {"Can you draft <t> for me?", "What is it for, <a> or <b>?"},
                {"Write <t> with me.", "Sure. Is the occasion <a>, or rather <b>?"},
                {"I have to prepare <t> today.", "Is it meant as <a> or as <b>?"},
                {"Please put together <t>.", "Before I start, is this <a> or <b>?"},
                {"Give me a hand with <t>.", "What is the purpose, <a> or <b>?"},
            },
        };

        bank[AmbiguitySubtype::Scope] = {
            "depth",
            {"not too long", "whatever fits"},
            {
                {"quantum computing", "a quick high-level overview",
                 "an in-depth technical treatment"},
                {"machine learning", "a beginner-friendly summary", "the mathematical details"},
                {"the French Revolution", "the short version", "a full chronology"},
                {"climate change", "the headline facts", "the underlying science"},
                {"the stock market", "a plain-language introduction",
                 "a trader-level explanation"},
                {"black holes", "a popular-science sketch", "the general relativity view"},
                {"the immune system", "a simple overview", "the cell-level mechanisms"},
                {"the history of the internet", "the milestones", "a detailed timeline"},
                {"renewable energy", "the big picture", "a comparison of every technology"},
                {"ancient Rome", "a brief portrait", "an era-by-era account"},
                {"cryptography", "the basic idea", "the algorithms and proofs"},
                {"the human brain", "a layperson's summary", "the neuroscience specifics"},
                {"plate tectonics", "the core concept", "the geological evidence"},
            },
            {
                {"Tell me about <t>.", "Are you looking for <a> or <b>?"},
                {"Explain <t> to me.", "Would you like <a>, or <b>?"},
                {"I want to understand <t>.", "Should I give you <a> or <b>?"},
                {"What's the deal with <t>?", "Do you want <a>, or rather <b>?"},
                {"Teach me something about <t>.", "Shall I start with <a> or go for <b>?"},
                {"Walk me through <t>.", "How far should I go: <a> or <b>?"},
                {"Give me the story of <t>.", "Do you prefer <a> or <b>?"},
            },
        };

        bank[AmbiguitySubtype::IntentConflict] = {
            "priority",
            {"balance", "somewhere in between"},
            {
                {"summarize 'War and Peace' without omitting anything", "completeness",
                 "brevity"},
                {"make the essay shorter but add more detail", "a shorter text", "more detail"},
                {"explain this simply but cover every edge case", "simplicity", "full coverage"},
                {"make the design minimalist with lots of decorations", "a minimalist look",
                 "rich decoration"},
                {"write a thorough answer in one sentence", "thoroughness",
                 "a single sentence"},
                {"plan a luxurious trip that costs almost nothing", "luxury", "a tiny budget"},
                {"give me an unbiased argument for my side", "neutrality",
                 "advocacy for your side"},
                {"make it formal but keep it playful", "a formal tone", "a playful tone"},
                {"translate it literally but make it sound natural", "a literal rendering",
                 "natural phrasing"},
                {"list everything briefly", "the complete list", "brevity"},
                {"surprise me with exactly what I expect", "a surprise",
                 "meeting expectations"},
                {"write a detailed outline with no structure", "a detailed outline",
                 "free-form text"},
                {"be fast and double-check everything twice", "speed",
                 "careful double-checking"},
            },
            {
                {"<t>.", "Those goals pull apart. Should I put <a> or <b> first?"},
                {"Please <t>.", "I can lean toward <a> or toward <b>. Which matters more?"},
                {"Can you <t>?", "Which should win when they clash, <a> or <b>?"},
                {"I'd like you to <t>.", "Should I favor <a>, or favor <b>?"},
                {"Here's the task: <t>.", "If I must trade off, do you prefer <a> or <b>?"},
                {"Do me a favor and <t>.", "What takes priority, <a> or <b>?"},
                {"Next job: <t>.", "One has to give: <a> or <b>?"},
            },
        };

        bank[AmbiguitySubtype::Entity] = {
            "referent",
            {"the famous one", "whichever comes up first"},
            {
                {"Spider-Man", "the comic-book character", "the film portrayals"},
                {"Phoenix", "the city in Arizona", "the mythical bird"},
                {"Georgia", "the U.S. state", "the country in the Caucasus"},
                {"Jordan", "the basketball player", "the country"},
                {"Lincoln", "the president", "the car brand"},
                {"Victoria", "the queen", "the Australian state"},
                {"Columbia", "the university", "the sportswear company"},
                {"Washington", "the capital city", "the state on the west coast"},
                {"Orion", "the constellation", "the spacecraft program"},
                {"Tesla", "the inventor", "the car company"},
                {"Java", "the island", "the coffee style"},
                {"Darwin", "the naturalist", "the city in Australia"},
                {"Apollo", "the Greek god", "the space program"},
            },
            {
                {"Who or what is the real <t>?", "Are you referring to <a> or <b>?"},
                {"Find information about <t>.", "Do you mean <a>, or <b>?"},
                {"What can you tell me about <t>?", "Should I talk about <a> or <b>?"},
                {"I'm researching <t>. Where should I start?",
                 "Is your research about <a> or <b>?"},
                {"Write a paragraph about <t>.", "Which one, <a> or <b>?"},
                {"Give me the key facts on <t>.", "Facts about <a>, or about <b>?"},
                {"What made <t> famous?", "Do you have <a> or <b> in mind?"},
            },
        };

        bank[AmbiguitySubtype::Spatial] = {
            "origin",
            {"downtown", "nearby"},
            {
                {"London", "the central station", "the airport terminal"},
                {"the stadium", "the main square", "the river ferry pier"},
                {"the national museum", "my hotel on King Street", "the east bus depot"},
                {"the city center", "the suburb of Westfield", "the harbor gate"},
                {"the main station", "the old town hall", "the exhibition grounds"},
                {"the harbor", "the cathedral steps", "the northern ring road"},
                {"the university campus", "the science park", "the downtown library"},
                {"the old town", "the marina", "the southern tollgate"},
                {"the convention center", "the opera house", "the eastern industrial park"},
                {"the botanical gardens", "the zoo entrance", "the hillside funicular"},
                {"the observatory", "the valley car park", "the mountain cable car base"},
                {"the castle", "the village green", "the western gatehouse"},
                {"the airport", "the long-distance coach stop", "the rental car return"},
            },
            {
                {"Tell me how to reach <t>.", "From which location are you starting?"},
                {"What's the best way to get to <t>?",
                 "Where do you begin the trip, for example <a>?"},
                {"How long does it take to get to <t>?",
                 "That depends on the starting point. Where from?"},
                {"Give me directions to <t>.", "Starting from where, perhaps <a> or <b>?"},
                {"Which bus goes to <t>?", "From which stop are you leaving?"},
                {"Can I walk to <t>?", "Walking from where exactly?"},
                {"Plan my route to <t>.", "What is the starting point of the route?"},
            },
        };

        bank[AmbiguitySubtype::Temporal] = {
            "timing",
            {"soonish", "sometime next week"},
            {
                {"the weather forecast", "for today", "for the weekend"},
                {"the meeting schedule", "today's meeting", "next week's meeting"},
                {"the exchange rate", "the current rate", "the rate from last month"},
                {"the train timetable", "this morning's trains", "tomorrow's trains"},
                {"the sales figures", "this quarter", "last year"},
                {"the traffic report", "right now", "during tomorrow's rush hour"},
                {"the exam dates", "the midterm", "the final in June"},
                {"the holiday calendar", "this year's holidays", "next year's holidays"},
                {"the release notes", "the latest release", "the first release"},
                {"the opening hours", "weekday hours", "Sunday hours"},
                {"the ticket prices", "tonight's show", "the matinee next Saturday"},
                {"the deadline", "the draft deadline", "the final submission date"},
                {"the moon phase", "tonight", "at the end of the month"},
            },
            {
                {"I need <t>.", "For which time, <a> or <b>?"},
                {"Can you check <t> for me?", "Do you mean <a>, or <b>?"},
                {"Look up <t>.", "Should I look at <a> or at <b>?"},
                {"What does <t> say?", "For <a>, or for <b>?"},
                {"Remind me about <t>.", "Which period matters, <a> or <b>?"},
                {"Pull up <t>, please.", "For what date, <a> or <b>?"},
                {"I was asking about <t> earlier.", "Was that about <a> or <b>?"},
            },
        };

        bank[AmbiguitySubtype::KnowledgeGap] = {
            "reference",
            {"the one from before", "the recent one"},
            {
                {"the new update", "the mobile app update", "the billing system update"},
                {"that document", "the quarterly report", "the onboarding guide"},
                {"the plan we discussed", "the marketing plan", "the travel plan"},
                {"the issue from yesterday", "the login outage", "the slow dashboard"},
                {"the new policy", "the remote-work policy", "the expense policy"},
                {"that article", "the privacy piece", "the interview with the founder"},
                {"the change they announced", "the pricing change", "the leadership change"},
                {"our usual spot", "the corner cafe", "the bench by the fountain"},
                {"the thing I sent you", "the spreadsheet", "the photo album"},
                {"the famous incident", "the server crash", "the product recall"},
                {"the new feature", "the dark theme", "the offline sync"},
                {"that book everyone mentions", "the productivity book", "the sci-fi novel"},
                {"the old version", "version two", "the beta build"},
            },
            {
                {"You remember <t>, right?", "Could you clarify which one you mean, <a> or <b>?"},
                {"So, about <t>, what do you think?", "Remind me, is that <a> or <b>?"},
                {"Following up on <t>.", "Which one exactly, <a> or <b>?"},
                {"Any news on <t>?", "Do you mean <a>, or <b>?"},
                {"Has anything changed with <t>?", "Are we talking about <a> or <b>?"},
                {"What's the status of <t>?", "Status of <a>, or of <b>?"},
                {"Tell me more about <t>.", "I may be missing context. Is it <a> or <b>?"},
            },
        };

        bank[AmbiguitySubtype::Unfamiliarity] = {
            "product",
            {"the popular model", "whatever the stores carry"},
            {
                {"the Samsung Chromecast", "a Samsung streaming stick", "Google's Chromecast"},
                {"the Apple Galaxy", "an Apple iPhone", "a Samsung Galaxy"},
                {"the Nintendo PlayStation", "a Nintendo Switch", "a Sony PlayStation"},
                {"the Toyota Mustang", "a Toyota sports coupe", "a Ford Mustang"},
                {"the Dell MacBook", "a Dell laptop", "an Apple MacBook"},
                {"the Canon GoPro", "a Canon action camera", "a GoPro camera"},
                {"the Rolex Swatch", "a Rolex watch", "a Swatch watch"},
                {"the Adidas Air Jordan", "an Adidas sneaker", "a Nike Air Jordan"},
                {"the Kindle Kobo", "an Amazon Kindle", "a Kobo reader"},
                {"the Bose AirPods", "Bose earbuds", "Apple AirPods"},
                {"the Lego Playmobil castle", "a Lego castle set", "a Playmobil castle set"},
                {"the IKEA gaming throne", "an IKEA desk chair", "a dedicated gaming chair"},
                {"the Fender Gibson", "a Fender guitar", "a Gibson guitar"},
            },
            {
                {"Find the price of <t>.", "Did you mean <a> or <b>?"},
                {"Where can I buy <t>?", "I could not find that exact product. Is it <a> or <b>?"},
                {"Is <t> any good?", "Do you mean <a>, or <b>?"},
                {"Compare <t> with alternatives.", "Should I compare <a> or <b>?"},
                {"Look up reviews for <t>.", "Reviews for <a>, or for <b>?"},
                {"Does <t> ship internationally?", "Which product is it, <a> or <b>?"},
                {"What are the specs of <t>?", "Specs of <a>, or of <b>?"},
            },
        };

        bank[AmbiguitySubtype::Value] = {
            "preference",
            {"you know best", "whatever most people like"},
            {
                {"movie", "a recent blockbuster", "a critically acclaimed classic"},
                {"restaurant", "somewhere cheap and cheerful", "a fine-dining place"},
                {"book", "a light page-turner", "a serious literary novel"},
                {"laptop", "a budget machine for browsing", "a workstation for heavy software"},
                {"city to visit", "a beach destination", "a culture-packed capital"},
                {"podcast", "a comedy show", "a deep-dive documentary series"},
                {"wine", "an easy everyday bottle", "something special for a celebration"},
                {"workout", "a gentle beginner routine", "an intense training program"},
                {"camera", "a simple point-and-shoot", "a professional body with lenses"},
                {"board game", "a quick party game", "a long strategy game"},
                {"gift", "something small and funny", "something sentimental"},
                {"album", "an upbeat pop record", "a quiet acoustic set"},
                {"course", "a weekend crash course", "a full semester program"},
            },
            {
                {"Recommend a good <t>.", "What does 'good' mean for you here, <a> or <b>?"},
                {"What's a good <t> these days?", "Are you after <a>, or <b>?"},
                {"I need a really good <t>.", "Good as in <a>, or good as in <b>?"},
                {"Suggest a great <t> for me.", "Should it be <a> or <b>?"},
                {"Which <t> should I pick?", "Do you lean toward <a> or toward <b>?"},
                {"Any good <t> you'd vouch for?", "Vouch for <a>, or for <b>?"},
                {"Help me choose a <t>.", "Choosing by taste: <a> or <b>?"},
            },
        };

        return bank;
    }();
    auto it = kBank.find(subtype);
    if (it == kBank.end())
        throw InvalidArgumentError("no template bank for subtype: " + to_string(subtype));
    return it->second;
}

} // namespace

BankSeed template_bank_seed(AmbiguitySubtype subtype, int index) {
    if (index < 0) throw InvalidArgumentError("bank index must be >= 0");
    const BankSubtype& bank = bank_for(subtype);

    const size_t t = static_cast<size_t>(index) % bank.topics.size();
    const size_t p = (static_cast<size_t>(index) / bank.topics.size()) % bank.phrasings.size();
    const size_t round =
        static_cast<size_t>(index) / (bank.topics.size() * bank.phrasings.size());
    const BankTopic& topic = bank.topics[t];

    BankSeed out;
    out.seed.ambiguous_query = fill_pattern(bank.phrasings[p].first, topic);
    if (round > 0) // keep texts distinct once every (topic, phrasing) pair is used
        out.seed.ambiguous_query += " This is request number " + std::to_string(round + 1) + ".";
    out.seed.clarifying_question = fill_pattern(bank.phrasings[p].second, topic);
    out.seed.subtype = subtype;
    out.seed.source = "template-bank";
    out.seed.quality = seed_quality(out.seed);

    ScenarioSlot slot;
    slot.name = bank.slot_name;
    slot.true_value = topic.option_a;
    slot.false_value = topic.option_b;
    slot.hints = bank.hints;
    slot.conflict_pair = std::make_pair(topic.option_a, topic.option_b);
    slot.required = true;

    out.scenario.id = "bank:" + to_string(subtype) + ":" + std::to_string(index);
    out.scenario.seed_query = out.seed.ambiguous_query;
    out.scenario.clarifying_question = out.seed.clarifying_question;
    out.scenario.subtype = subtype;
    out.scenario.slots.push_back(std::move(slot));
    out.scenario.off_topic = shared_off_topic();
    return out;
}

// ============================================================================
// Expansion
// ============================================================================

namespace {

std::string template_followup(const std::string& clarifying_question, int variant) {
    switch (variant % 3) {
        case 0: return "Sorry, I still need this to proceed: " + clarifying_question;
        case 1: return "I may have been unclear. " + clarifying_question;
        default: return "Let me ask once more: " + clarifying_question;
    }
}

std::string model_followup(const std::vector<Turn>& history, Gateway& gateway,
                           const std::string& prompt_dir) {
    PromptLibrary prompts(prompt_dir);
    std::ostringstream dialogue;
    for (const auto& turn : history)
        dialogue << (turn.speaker == Speaker::User ? "User: " : "Assistant: ") << turn.text
                 << "\n";
    const std::string prompt =
        prompts.render("followup_clarification", {{"dialogue", dialogue.str()}});
    return gateway.complete_one({{"user", prompt}});
}

} // namespace

Dialogue expand_to_multiturn(const SeedPair& seed, Persona persona, const Scenario& scenario,
                             const ExpansionOptions& options) {
    if (options.mode == SimulatorMode::Model && options.gateway == nullptr)
        throw InvalidArgumentError("model-mode expansion needs a gateway");

    Dialogue d;
    d.id = options.dialogue_id;
    d.subtype = seed.subtype;
    d.persona = persona;
    d.source = options.source;

    int index = 1;
    auto push = [&d, &index](Speaker speaker, std::string text) {
        d.turns.push_back({speaker, std::move(text), index++});
    };

    push(Speaker::User, seed.ambiguous_query);       // q_amb, verbatim
    push(Speaker::Assistant, seed.clarifying_question); // q_clar, verbatim
    d.golden_clarifications.push_back(seed.clarifying_question);
    d.reference_actions.push_back(Action::Clarify);

    SimulationContext ctx;
    ctx.history = d.turns;
    ctx.persona = persona;
    ctx.clarifying_question = seed.clarifying_question;
    ctx.scenario = scenario;
    ctx.seed = options.seed;
    auto first_reply = simulate_reply(ctx, options.mode, options.gateway, options.prompt_dir);
    push(Speaker::User, first_reply.text);

    if (persona_permits_answer(persona)) {
        d.reference_actions.push_back(Action::Answer);
        return d;
    }

    // Noisy persona: the reply leaves the query unresolved, so the golden
    // behaviour is a follow-up clarification, another noisy reply, and a
    // final Clarify reference.
    d.reference_actions.push_back(Action::Clarify);
    const std::string followup =
        options.mode == SimulatorMode::Template
            ? template_followup(seed.clarifying_question, static_cast<int>(options.seed))
            : model_followup(d.turns, *options.gateway, options.prompt_dir);
    d.golden_clarifications.push_back(followup);
    push(Speaker::Assistant, followup);

    ctx.history = d.turns;
    ctx.clarifying_question = followup;
    ctx.seed = options.seed + 1;
    auto second_reply = simulate_reply(ctx, options.mode, options.gateway, options.prompt_dir);
    push(Speaker::User, second_reply.text);

    d.reference_actions.push_back(Action::Clarify);
    const std::string final_golden =
        options.mode == SimulatorMode::Template
            ? template_followup(seed.clarifying_question, static_cast<int>(options.seed) + 1)
            : model_followup(d.turns, *options.gateway, options.prompt_dir);
    d.golden_clarifications.push_back(final_golden);

    return d;
}

// ============================================================================
// Oracles
// ============================================================================

DialogueOracle oracle_for(const Dialogue& dialogue, const Scenario& scenario, Persona persona,
                          std::uint64_t base_seed) {
    DialogueOracle oracle;
    oracle.dialogue_id = dialogue.id;
    oracle.schema = scenario.schema();
    oracle.persona = persona;

    const int points = dialogue.decision_points();
    oracle.observations_per_decision.emplace_back(); // the seed query fills nothing
    for (int t = 2; t <= points; ++t) {
        // The reply at decision point t was simulated with base_seed + (t-2);
        // reuse it so the oracle describes the same slot the reply mentions.
        oracle.observations_per_decision.push_back(
            oracle_observations(persona, scenario, base_seed + static_cast<std::uint64_t>(t - 2)));
    }
    return oracle;
}

json DialogueOracle::to_json() const {
    json decisions = json::array();
    for (const auto& observations : observations_per_decision) {
        json obs = json::array();
        for (const auto& o : observations)
            obs.push_back({{"slot", o.slot},
                           {"value", o.extracted_value},
                           {"relation", to_string(o.relation)}});
        decisions.push_back({{"observations", obs}});
    }
    return {{"dialogue_id", dialogue_id},
            {"persona", to_string(persona)},
            {"schema", {{"slots", schema.slots}, {"required", schema.required}}},
            {"decisions", decisions}};
}

DialogueOracle DialogueOracle::from_json(const json& record) {
    DialogueOracle oracle;
    oracle.dialogue_id = record.at("dialogue_id").get<std::string>();
    oracle.persona = persona_from_string(record.at("persona").get<std::string>());
    oracle.schema.slots = record.at("schema").at("slots").get<std::vector<std::string>>();
    oracle.schema.required = record.at("schema").at("required").get<std::vector<std::string>>();
    for (const auto& decision : record.at("decisions")) {
        std::vector<SlotObservation> observations;
        for (const auto& o : decision.at("observations")) {
            observations.push_back({o.at("slot").get<std::string>(),
                                    o.at("value").get<std::string>(),
                                    relation_from_string(o.at("relation").get<std::string>())});
        }
        oracle.observations_per_decision.push_back(std::move(observations));
    }
    return oracle;
}

void write_oracles_jsonl(const std::string& path, const std::vector<DialogueOracle>& oracles) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& oracle : oracles) out << oracle.to_json().dump() << "\n";
}

std::vector<DialogueOracle> read_oracles_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<DialogueOracle> oracles;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        oracles.push_back(DialogueOracle::from_json(json::parse(line)));
    }
    return oracles;
}

// ============================================================================
// Statistics
// ============================================================================

DatasetStats dataset_stats(const std::vector<Dialogue>& dialogues) {
    DatasetStats stats;
    stats.total = dialogues.size();
    if (dialogues.empty()) return stats;

    double decision_sum = 0.0, utterance_sum = 0.0, token_sum = 0.0;
    for (const auto& d : dialogues) {
        ++stats.by_subtype[to_string(d.subtype)];
        ++stats.by_persona[d.persona ? to_string(*d.persona) : "none"];
        decision_sum += d.decision_points();
        utterance_sum += static_cast<double>(d.turns.size());
        size_t tokens = 0;
        for (const auto& turn : d.turns) tokens += whitespace_token_count(turn.text);
        token_sum += static_cast<double>(tokens);
    }
    const auto n = static_cast<double>(dialogues.size());
    stats.mean_decision_points = decision_sum / n;
    stats.mean_utterances = utterance_sum / n;
    stats.mean_token_length = token_sum / n;
    return stats;
}

json DatasetStats::to_json() const {
    return {{"total", total},
            {"by_subtype", by_subtype},
            {"by_persona", by_persona},
            {"mean_decision_points", mean_decision_points},
            {"mean_utterances", mean_utterances},
            {"mean_token_length", mean_token_length}};
}

// ============================================================================
// Build pipeline
// ============================================================================

BuildResult build_dataset(const BuildOptions& options) {
    if (options.per_subtype < 1) throw InvalidArgumentError("per_subtype must be >= 1");
    if (options.mode == SimulatorMode::Model &&
        (options.chat_gateway == nullptr))
        throw InvalidArgumentError("model-mode build needs a chat gateway");

    std::vector<AmbiguitySubtype> subtypes =
        options.subtypes.empty() ? seed_subtypes() : options.subtypes;
    for (auto s : subtypes)
        if (!is_seed_subtype(s))
            throw InvalidArgumentError("cannot build seeds for reply subtype " + to_string(s));

    std::unique_ptr<Gateway> own_embedder;
    Gateway* embedder = options.embed_gateway;
    if (embedder == nullptr) {
        BackendConfig cfg;
        cfg.backend = BackendKind::Scripted;
        cfg.embed_dim = 64;
        cfg.seed = options.seed;
        own_embedder = std::make_unique<Gateway>(cfg);
        embedder = own_embedder.get();
    }

    BuildResult result;
    std::uint64_t dialogue_counter = 0;

    for (auto subtype : subtypes) {
        // The per-subtype count is a post-dedup target: keep generating until
        // enough representatives survive or the generation cap is reached.
        std::vector<BankSeed> pool;
        std::vector<SeedPair> seeds;
        DedupResult deduped;
        int next_index = 0;
        const int generation_cap = 4 * options.per_subtype;
        while (true) {
            const int want = options.per_subtype - static_cast<int>(deduped.retained.size());
            if (want <= 0 || next_index >= generation_cap) break;
            const int batch = std::min(want, generation_cap - next_index);
            if (options.mode == SimulatorMode::Template) {
                for (int i = 0; i < batch; ++i)
                    pool.push_back(template_bank_seed(subtype, next_index++));
            } else {
                auto report =
                    generate_seeds(subtype, batch, *options.chat_gateway, options.prompt_dir);
                next_index += batch;
                for (auto& seed : report.seeds) {
                    BankSeed generated;
                    generated.seed = std::move(seed);
                    generated.scenario.id = "generated:" + to_string(subtype) + ":" +
                                            std::to_string(pool.size());
                    generated.scenario.seed_query = generated.seed.ambiguous_query;
                    generated.scenario.clarifying_question = generated.seed.clarifying_question;
                    generated.scenario.subtype = subtype;
                    pool.push_back(std::move(generated));
                }
                if (report.seeds.empty() && report.shortfall > 0) break; // generator dried up
            }
            seeds.clear();
            for (const auto& b : pool) seeds.push_back(b.seed);
            std::vector<std::string> texts;
            for (const auto& s : seeds) texts.push_back(s.ambiguous_query);
            deduped = dedup(seeds, embedder->embed(texts), options.tau_sem);
        }

        result.dedup_dropped += static_cast<int>(seeds.size() - deduped.retained.size());

        size_t taken = 0;
        for (const auto& cluster : deduped.clusters) {
            if (taken == static_cast<size_t>(options.per_subtype)) break;
            const BankSeed& bank_seed = pool[cluster.representative];
            for (Persona persona : all_personas()) {
                ExpansionOptions expansion;
                expansion.mode = options.mode;
                expansion.gateway = options.chat_gateway;
                expansion.prompt_dir = options.prompt_dir;
                expansion.seed = options.seed + dialogue_counter * 2;
                expansion.dialogue_id = to_string(subtype) + "-" + std::to_string(taken) + "-" +
                                        to_string(persona);
                expansion.source = bank_seed.seed.source;
                Dialogue dialogue =
                    expand_to_multiturn(bank_seed.seed, persona, bank_seed.scenario, expansion);
                if (options.mode == SimulatorMode::Template)
                    result.oracles.push_back(
                        oracle_for(dialogue, bank_seed.scenario, persona, expansion.seed));
                result.dialogues.push_back(std::move(dialogue));
                ++dialogue_counter;
            }
            ++taken;
        }
    }

    result.stats = dataset_stats(result.dialogues);
    return result;
}

} // namespace clarify
