#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include <concat/backends.hpp>
#include <concat/sim_backend.hpp>

using namespace concat;

namespace {

Task numeric_task() {
    Task t;
    t.id = "t-1";
    t.question = "What is 70 + 70?";
    t.reference_answer = "140";
    t.kind = TaskKind::numeric;
    return t;
}

AgentCall call_for(const Task& task, AgentId agent, int round, std::uint64_t seed) {
    AgentCall call;
    call.task = &task;
    call.agent = agent;
    call.round = round;
    call.aggregation = false;
    call.seed = seed;
    call.request.system_prompt = "solve carefully";
    call.request.user_prompt = "The task is: " + task.question + ".";
    return call;
}

Reference ref_of(AgentId agent, const std::string& normalized, double confidence) {
    Reference r;
    r.agent = agent;
    r.answer = "The answer is " + normalized;
    r.normalized = normalized;
    r.confidence = confidence;
    return r;
}

SimPopulation population_of(SimAgentProfile profile) {
    SimPopulation pop;
    pop.agents = {profile};
    return pop;
}

}  // namespace

TEST_CASE("mean token probability") {
    CHECK(mean_token_probability({1.0, 1.0, 1.0}) == 1.0);
    CHECK(mean_token_probability({0.5, 0.7, 0.9}) == Catch::Approx(0.7).margin(1e-15));
    CHECK_THROWS_AS(mean_token_probability({}), MissingLogprobs);
}

TEST_CASE("sim generation replays byte-identically") {
    SimBackend backend(population_of({0.6, 0.9, 0.3, 0.35, 0.01}));
    Task task = numeric_task();
    AgentCall call = call_for(task, 2, 1, 7);

    GenerationResult a = backend.generate(call);
    GenerationResult b = backend.generate(call);
    CHECK(a.text == b.text);
    CHECK(a.token_probabilities == b.token_probabilities);
    CHECK(a.prompt_tokens == b.prompt_tokens);
    CHECK(a.completion_tokens == b.completion_tokens);
    CHECK(a.wall_latency == b.wall_latency);
}

TEST_CASE("perfect skill always answers correctly without references") {
    SimBackend backend(population_of({1.0, 0.9, 0.5, 0.35, 0.01}));
    Task task = numeric_task();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        GenerationResult r = backend.generate(call_for(task, 0, 0, seed));
        CHECK(try_normalize_answer(r.text, task.kind) == "140");
    }
}

TEST_CASE("zero skill with full conformity copies a confident correct reference") {
    SimBackend backend(population_of({0.0, 0.9, 1.0, 0.35, 0.01}));
    Task task = numeric_task();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        AgentCall call = call_for(task, 0, 1, seed);
        call.references = {ref_of(1, "140", 1.0)};
        GenerationResult r = backend.generate(call);
        CHECK(try_normalize_answer(r.text, task.kind) == "140");
    }
}

TEST_CASE("zero skill alone never answers correctly") {
    SimBackend backend(population_of({0.0, 0.9, 0.0, 0.35, 0.01}));
    Task task = numeric_task();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        GenerationResult r = backend.generate(call_for(task, 0, 0, seed));
        CHECK(try_normalize_answer(r.text, task.kind) != "140");
    }
}

TEST_CASE("empirical accuracy tracks skill when conformity is off") {
    const double skill = 0.65;
    const int draws = 2000;
    SimBackend backend(population_of({skill, 1.0, 0.0, 0.35, 0.01}));
    Task task = numeric_task();
    int correct = 0;
    for (int seed = 0; seed < draws; ++seed) {
        GenerationResult r =
            backend.generate(call_for(task, 0, 0, static_cast<std::uint64_t>(seed)));
        if (try_normalize_answer(r.text, task.kind) == "140") ++correct;
    }
    double rate = static_cast<double>(correct) / draws;
    double sigma = std::sqrt(skill * (1.0 - skill) / draws);
    CHECK(std::abs(rate - skill) <= 3.0 * sigma);
}

TEST_CASE("confident wrong references raise the corruption rate") {
    SimAgentProfile profile{0.8, 0.9, 0.6, 0.35, 0.01};
    SimBackend backend(population_of(profile));
    Task task = numeric_task();

    int correct_alone = 0, correct_pressured = 0;
    const int draws = 1000;
    for (int seed = 0; seed < draws; ++seed) {
        AgentCall alone = call_for(task, 0, 1, static_cast<std::uint64_t>(seed));
        if (try_normalize_answer(backend.generate(alone).text, task.kind) == "140")
            ++correct_alone;

        AgentCall pressured = call_for(task, 0, 2, static_cast<std::uint64_t>(seed));
        pressured.references = {ref_of(1, "139", 0.95), ref_of(2, "139", 0.95)};
        if (try_normalize_answer(backend.generate(pressured).text, task.kind) == "140")
            ++correct_pressured;
    }
    // Conformity toward confident wrong peers must strictly increase the
    // correct-to-wrong rate relative to answering alone.
    CHECK(correct_pressured < correct_alone);
    CHECK(correct_alone > draws / 2);
}

TEST_CASE("confidence stays in range and calibrated draws stay in band") {
    SimBackend backend(population_of({0.7, 1.0, 0.0, 0.35, 0.01}));
    Task task = numeric_task();
    for (int seed = 0; seed < 300; ++seed) {
        GenerationResult r =
            backend.generate(call_for(task, 0, 0, static_cast<std::uint64_t>(seed)));
        double conf = mean_token_probability(r.token_probabilities);
        CHECK(conf >= 0.0);
        CHECK(conf <= 1.0);
        bool correct = try_normalize_answer(r.text, task.kind) == "140";
        if (correct) {
            CHECK(conf >= 0.70);
            CHECK(conf <= 0.95);
        } else {
            CHECK(conf >= 0.35);
            CHECK(conf <= 0.65);
        }
    }
}

TEST_CASE("synthetic latency follows the profile exactly") {
    SimAgentProfile profile{0.6, 0.9, 0.3, 0.4, 0.02};
    SimBackend backend(population_of(profile));
    CHECK(backend.synthetic_latency());
    CHECK(backend.name() == "sim");
    Task task = numeric_task();
    GenerationResult r = backend.generate(call_for(task, 0, 0, 5));
    CHECK(r.wall_latency ==
          Catch::Approx(0.4 + 0.02 * r.completion_tokens).margin(1e-12));
    CHECK(r.completion_tokens > 0);
    CHECK(r.prompt_tokens > 0);
}

TEST_CASE("population profiles cycle by agent id") {
    SimPopulation pop;
    pop.agents = {{0.9, 0.9, 0.1, 0.35, 0.01}, {0.2, 0.8, 0.5, 0.35, 0.01}};
    CHECK(pop.profile_for(0).skill == 0.9);
    CHECK(pop.profile_for(1).skill == 0.2);
    CHECK(pop.profile_for(2).skill == 0.9);
    CHECK(pop.profile_for(5).skill == 0.2);
}

TEST_CASE("population json parsing and validation") {
    nlohmann::json good = {
        {"agents",
         {{{"skill", 0.8}, {"calibration", 0.9}, {"conformity", 0.2}},
          {{"skill", 0.4}}}},
        {"answer_pool_size", 3},
        {"aggregator_conformity", 0.75},
    };
    SimPopulation pop = sim_population_from_json(good);
    REQUIRE(pop.agents.size() == 2);
    CHECK(pop.agents[0].skill == 0.8);
    CHECK(pop.agents[1].skill == 0.4);
    CHECK(pop.agents[1].calibration == 0.9);  // default preserved
    CHECK(pop.answer_pool_size == 3);
    CHECK(pop.aggregator_conformity == 0.75);

    CHECK_THROWS_AS(sim_population_from_json(nlohmann::json{{"agents", nlohmann::json::array()}}),
                    SchemaError);
    CHECK_THROWS_AS(
        sim_population_from_json(nlohmann::json{{"agents", {{{"skill", 1.5}}}}}),
        SchemaError);
    CHECK_THROWS_AS(sim_population_from_json(nlohmann::json{
                        {"agents", {{{"skill", 0.5}}}}, {"answer_pool_size", 1}}),
                    SchemaError);
    CHECK_THROWS_AS(sim_population_from_json(nlohmann::json{
                        {"agents", {{{"skill", 0.5}}}}, {"aggregator_conformity", 2.0}}),
                    SchemaError);
}

TEST_CASE("aggregation calls honor a unanimous reference set") {
    SimBackend backend(population_of({0.5, 0.9, 0.5, 0.35, 0.01}));  // aggregator_conformity 1
    Task task = numeric_task();
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        AgentCall call = call_for(task, 0, 3, seed);
        call.aggregation = true;
        call.references = {ref_of(0, "133", 0.8), ref_of(1, "133", 0.7),
                           ref_of(2, "133", 0.9)};
        GenerationResult r = backend.generate(call);
        CHECK(try_normalize_answer(r.text, task.kind) == "133");
    }
}

TEST_CASE("aggregation weighs confidence, not head count") {
    SimBackend backend(population_of({0.5, 0.9, 0.5, 0.35, 0.01}));
    Task task = numeric_task();
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        AgentCall call = call_for(task, 0, 3, seed);
        call.aggregation = true;
        // Two half-hearted votes for 133 lose to one emphatic 140.
        call.references = {ref_of(0, "133", 0.3), ref_of(1, "133", 0.3),
                           ref_of(2, "140", 0.9)};
        GenerationResult r = backend.generate(call);
        CHECK(try_normalize_answer(r.text, task.kind) == "140");
    }
}
