// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Each check is self-contained and uses an independent oracle where one is
// called for (sorting-based pruning, pairwise AUC counting, call arithmetic).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <concat/concat.hpp>

namespace fs = std::filesystem;
using namespace concat;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& label) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << label
              << std::endl;
    if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int number, const std::string& label, Fn&& fn) {
    bool pass = false;
    std::string note;
    try {
        note = fn(pass);
    } catch (const std::exception& e) {
        pass = false;
        note = std::string("exception: ") + e.what();
    }
    report(number, pass, note.empty() ? label : label + " — " + note);
}

std::string shipped(const std::string& rel) { return std::string(CONCAT_SOURCE_DIR) + "/" + rel; }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// --- criterion 1-3 helpers -------------------------------------------------

// --- criterion 5 oracle ----------------------------------------------------

struct PruneOracle {
    double threshold = 0.0;
    std::vector<std::pair<AgentId, AgentId>> kept;
    std::vector<std::pair<AgentId, AgentId>> dropped;
};

PruneOracle prune_oracle(const BenefitMatrix& m, double retention, double tau_min) {
    PruneOracle out;
    std::vector<double> values;
    for (const auto& [edge, b] : m.entries) values.push_back(b);
    std::sort(values.begin(), values.end());
    double q = (1.0 - retention) * 100.0;
    long rank = static_cast<long>(std::ceil(q / 100.0 * static_cast<double>(values.size())));
    rank = std::max(1L, std::min(rank, static_cast<long>(values.size())));
    out.threshold = std::max(values[static_cast<std::size_t>(rank - 1)], tau_min);
    for (const auto& [edge, b] : m.entries) {
        if (b >= out.threshold)
            out.kept.push_back(edge);
        else
            out.dropped.push_back(edge);
    }
    std::sort(out.kept.begin(), out.kept.end());
    std::sort(out.dropped.begin(), out.dropped.end());
    return out;
}

// --- criterion 6 helpers ----------------------------------------------------

AgentState make_state(int agent, std::optional<std::string> norm, double conf) {
    AgentState st;
    st.agent = agent;
    st.answer = norm ? "The answer is " + *norm : "unsure";
    st.normalized_answer = std::move(norm);
    st.confidence = conf;
    st.round = 0;
    return st;
}

struct FixedBackend final : AgentBackend {
    GenerationResult generate(const AgentCall&) override {
        GenerationResult r;
        r.text = "The answer is B";
        r.token_probabilities = {0.8};
        r.prompt_tokens = 8;
        r.completion_tokens = 4;
        r.wall_latency = 0.1;
        return r;
    }
    std::string name() const override { return "fixed"; }
    bool synthetic_latency() const override { return true; }
};

// --- criterion 8 oracle ----------------------------------------------------

double auc_oracle(const std::vector<double>& scores, const std::vector<bool>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// --- criterion 9 scenario ---------------------------------------------------

struct ObservationMetrics {
    double non_helpful_fraction = 0.0;
    double dissent_auc = 0.0;
};

ObservationMetrics run_observation_scenario() {
    std::vector<Task> tasks =
        load_dataset(shipped("data/datasets/sim_numeric_50.jsonl"), TaskKind::numeric);

    std::ifstream in(shipped("data/profiles/observation_replication.json"), std::ios::binary);
    if (!in) throw Error("missing observation profile");
    nlohmann::json pj = nlohmann::json::parse(in);
    SimBackend backend(sim_population_from_json(pj));

    RunConfig cfg;
    cfg.n_agents = 5;
    cfg.refinement_rounds = 2;
    cfg.seed = 42;

    std::vector<ExperimentRecord> records;
    records.reserve(tasks.size());
    for (const Task& task : tasks) records.push_back(run_llm_debate(task, cfg, backend));

    long helpful_count = 0, total = 0;
    for (const TransitionEvent& ev : collect_transitions(records)) {
        total += 1;
        if (helpful(ev.label)) helpful_count += 1;
    }
    if (total == 0) throw Error("scenario produced no transitions");

    ObservationMetrics m;
    m.non_helpful_fraction =
        1.0 - static_cast<double>(helpful_count) / static_cast<double>(total);
    m.dissent_auc = dissent_auc(collect_dissent_pairs(records));
    return m;
}

// --- criterion 11 helper ----------------------------------------------------

bool run_twice_identical(const std::string& method, const fs::path& scratch) {
    ExperimentConfig cfg;
    cfg.dataset = shipped("data/datasets/sim_numeric_50.jsonl");
    cfg.kind = TaskKind::numeric;
    cfg.method = method;
    cfg.backend = "sim";
    cfg.repetitions = 1;
    cfg.task_parallelism = 4;
    cfg.run.n_agents = 5;
    cfg.run.refinement_rounds = 2;
    cfg.run.seed = 7;

    cfg.out_dir = (scratch / (method + "-a")).string();
    run_experiment(cfg);
    cfg.out_dir = (scratch / (method + "-b")).string();
    run_experiment(cfg);

    return read_file(scratch / (method + "-a") / "results.jsonl") ==
               read_file(scratch / (method + "-b") / "results.jsonl") &&
           read_file(scratch / (method + "-a") / "summary.json") ==
               read_file(scratch / (method + "-b") / "summary.json");
}

}  // namespace

int main() {
    criterion(1, "exact-utility property grid (sign, monotonicity, threshold zero)",
              [](bool& pass) {
                  auto start = std::chrono::steady_clock::now();
                  std::vector<PropResult> results = run_benefit_property_grid();
                  double elapsed = std::chrono::duration<double>(
                                       std::chrono::steady_clock::now() - start)
                                       .count();
                  pass = elapsed < 1.0;
                  std::string note;
                  for (const PropResult& r : results) {
                      if (!r.pass) {
                          pass = false;
                          note = r.name + ": " + r.detail;
                      }
                  }
                  return note.empty() ? fmt(elapsed) + "s over the 99x99 grid" : note;
              });

    criterion(2, "correction threshold identities", [](bool& pass) {
        pass = correction_threshold(0.5) == 0.5;
        if (!pass) return std::string("threshold(0.5) is not exactly 0.5");
        for (int i = 1; i <= 99; ++i) {
            double c = i / 100.0;
            if (std::abs(correction_threshold(c) + correction_threshold(1.0 - c) - 1.0) >
                1e-12) {
                pass = false;
                return "reflection identity fails at " + fmt(c);
            }
        }
        return std::string("fixed point exact, reflection within 1e-12");
    });

    criterion(3, "first-order approximation near the midpoint", [](bool& pass) {
        double worst = 0.0;
        for (int i = 1; i <= 99; ++i) {
            double c = i / 100.0;
            if (c < 0.2 - 1e-12 || c > 0.8 + 1e-12) continue;
            for (int j = 1; j <= 99; ++j) {
                double chat = j / 100.0;
                if (std::abs(chat - 0.5) > 0.05 + 1e-12) continue;
                worst = std::max(worst, std::abs(exact_euc(c, chat) - taylor_benefit(c, chat)));
            }
        }
        pass = worst <= 0.02;
        return "max gap " + fmt(worst);
    });

    criterion(4, "worked challenger benefit values", [](bool& pass) {
        double a = benefit_challenger(0.5, 0.5, 0.2);
        double b = benefit_challenger(0.9, 0.1, 0.2);
        pass = std::abs(a - 0.5) <= 1e-12 && std::abs(b - (-0.084)) <= 1e-12;
        return "b(0.5,0.5)=" + fmt(a) + ", b(0.9,0.1)=" + fmt(b);
    });

    criterion(5, "pruning matches a sort-and-filter oracle on 1000 instances", [](bool& pass) {
        std::mt19937_64 rng(51515151ull);
        auto uniform = [&](double lo, double hi) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            return lo + u * (hi - lo);
        };
        for (int trial = 0; trial < 1000; ++trial) {
            int k = 2 + static_cast<int>(rng() % 7);
            BenefitMatrix m;
            for (AgentId i = 0; i < k; ++i) {
                for (AgentId j = 0; j < k; ++j) {
                    if (i == j) continue;
                    double b = uniform(-0.5, 0.8);
                    if (trial % 3 == 0) b = std::round(b * 4.0) / 4.0;  // force ties
                    m.entries[{i, j}] = b;
                }
            }
            double retention = uniform(0.0, 1.0);
            double tau_min = (trial % 4 == 0) ? -1e9 : uniform(-0.2, 0.3);

            PruneResult got = prune_edges(m, retention, tau_min, k);
            PruneOracle want = prune_oracle(m, retention, tau_min);

            Topology sorted_kept = got.kept;
            sorted_kept.sort_edges();
            std::vector<std::pair<AgentId, AgentId>> got_dropped = got.dropped;
            std::sort(got_dropped.begin(), got_dropped.end());

            if (got.threshold != want.threshold || sorted_kept.edges != want.kept ||
                got_dropped != want.dropped) {
                pass = false;
                return "mismatch at trial " + std::to_string(trial);
            }
            for (const auto& edge : sorted_kept.edges) {
                if (m.entries.at(edge) < tau_min) {
                    pass = false;
                    return "kept edge below the floor at trial " + std::to_string(trial);
                }
            }
            if (sorted_kept.edges.size() + got_dropped.size() != m.entries.size()) {
                pass = false;
                return std::string("kept and dropped do not partition the candidates");
            }
        }
        pass = true;
        return std::string("1000/1000 instances identical");
    });

    criterion(6, "clustering and leader invariants on 1000 populations", [](bool& pass) {
        std::mt19937_64 rng(66666667ull);
        const char* pool[] = {"A", "B", "C", "D"};
        RunConfig cfg;
        for (int trial = 0; trial < 1000; ++trial) {
            int n = 2 + static_cast<int>(rng() % 7);
            std::vector<AgentState> states;
            for (int a = 0; a < n; ++a) {
                std::optional<std::string> ans;
                if (rng() % 10 != 0) ans = pool[rng() % 4];
                states.push_back(
                    make_state(a, ans, static_cast<double>(rng() % 5) / 4.0));
            }
            std::vector<ConsensusCluster> clusters =
                cluster_by_similarity(states, TaskKind::choice, cfg.code_cluster_threshold);
            LeaderSet leaders = select_leaders(clusters, states);

            std::vector<int> seen(static_cast<std::size_t>(n), 0);
            for (const ConsensusCluster& c : clusters)
                for (AgentId mbr : c.members) seen[static_cast<std::size_t>(mbr)] += 1;
            for (int a = 0; a < n; ++a) {
                if (seen[static_cast<std::size_t>(a)] != 1) {
                    pass = false;
                    return "clusters do not partition the agents at trial " +
                           std::to_string(trial);
                }
            }
            if (leaders.leaders.size() != clusters.size()) {
                pass = false;
                return std::string("leader count differs from cluster count");
            }
            for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
                AgentId lead = leaders.leaders[ci];
                double lead_conf = states[static_cast<std::size_t>(lead)].confidence;
                for (AgentId mbr : clusters[ci].members) {
                    double mc = states[static_cast<std::size_t>(mbr)].confidence;
                    if (mc > lead_conf || (mc == lead_conf && mbr < lead)) {
                        pass = false;
                        return "leader does not dominate its cluster at trial " +
                               std::to_string(trial);
                    }
                }
            }
            bool all_same = true;
            for (int a = 1; a < n; ++a)
                all_same = all_same && states[static_cast<std::size_t>(a)].normalized_answer &&
                           states[0].normalized_answer &&
                           *states[static_cast<std::size_t>(a)].normalized_answer ==
                               *states[0].normalized_answer;
            if (all_same != (clusters.size() == 1)) {
                pass = false;
                return "unanimity and single-cluster disagree at trial " +
                       std::to_string(trial);
            }
        }

        // Full consensus: empty topology and exactly one refinement call.
        std::vector<AgentState> unanimous;
        for (int a = 0; a < 5; ++a)
            unanimous.push_back(make_state(a, "B", 0.5 + 0.05 * a));
        FixedBackend backend;
        RunConfig rcfg;
        rcfg.n_agents = 5;
        Task task;
        task.id = "consensus";
        task.question = "Pick. (A) x (B) y (C) z (D) w";
        task.reference_answer = "B";
        task.kind = TaskKind::choice;
        RoundTrace trace =
            run_concat_round(unanimous, task, rcfg, backend, PromptLibrary::defaults(), 1);
        if (!(trace.clusters.size() == 1 && trace.topology.edges.empty() &&
              trace.calls_made == 1)) {
            pass = false;
            return std::string("consensus round is not a single bare refinement call");
        }
        pass = true;
        return std::string("partitions, dominance, ties, and consensus short-circuit hold");
    });

    criterion(7, "call-count law and debate budget dominance", [](bool& pass) {
        std::vector<Task> tasks =
            load_dataset(shipped("data/datasets/sim_numeric_50.jsonl"), TaskKind::numeric);
        SimPopulation pop;
        pop.agents = {
            {0.85, 0.95, 0.10, 0.35, 0.01},
            {0.70, 0.90, 0.25, 0.35, 0.01},
            {0.60, 0.85, 0.35, 0.35, 0.01},
            {0.50, 0.80, 0.45, 0.35, 0.01},
            {0.40, 0.75, 0.55, 0.35, 0.01},
        };
        for (int n = 2; n <= 5; ++n) {
            for (int rounds = 1; rounds <= 2; ++rounds) {
                for (int ti = 0; ti < 3; ++ti) {
                    SimBackend backend(pop);
                    RunConfig cfg;
                    cfg.n_agents = n;
                    cfg.refinement_rounds = rounds;
                    cfg.seed = 100 + static_cast<std::uint64_t>(ti);
                    ExperimentRecord rec = run_concat(tasks[static_cast<std::size_t>(ti)], cfg,
                                                      backend);
                    if (rec.status != "ok") {
                        pass = false;
                        return "run failed: " + rec.status;
                    }
                    int leader_sum = 0;
                    bool any_small_round = false;
                    for (const RoundTrace& rt : rec.rounds) {
                        leader_sum += static_cast<int>(rt.leaders.leaders.size());
                        if (static_cast<int>(rt.leaders.leaders.size()) < n)
                            any_small_round = true;
                    }
                    if (rec.total_calls != n + leader_sum + 1) {
                        pass = false;
                        return "call law violated at n=" + std::to_string(n) +
                               " rounds=" + std::to_string(rounds);
                    }
                    SimBackend debate_backend(pop);
                    ExperimentRecord deb =
                        run_llm_debate(tasks[static_cast<std::size_t>(ti)], cfg, debate_backend);
                    if (deb.total_calls != n + rounds * n + 1) {
                        pass = false;
                        return "debate call count off at n=" + std::to_string(n);
                    }
                    if (rec.total_calls > deb.total_calls ||
                        (any_small_round && rec.total_calls >= deb.total_calls)) {
                        pass = false;
                        return "budget dominance violated at n=" + std::to_string(n);
                    }
                }
            }
        }
        pass = true;
        return std::string("total = N + sum(K_t) + 1 on all 48 runs, never above debate");
    });

    criterion(8, "rank AUC matches pairwise counting on 500 instances", [](bool& pass) {
        std::mt19937_64 rng(88888889ull);
        const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
        for (int trial = 0; trial < 500; ++trial) {
            std::size_t n = 2 + rng() % 199;
            std::vector<double> scores(n);
            std::vector<bool> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                scores[i] = grid[rng() % 5];
                labels[i] = (rng() % 2) == 0;
            }
            labels[0] = true;
            labels[1] = false;
            double fast = roc_auc(scores, labels);
            if (std::abs(fast - auc_oracle(scores, labels)) > 1e-12) {
                pass = false;
                return "oracle mismatch at trial " + std::to_string(trial);
            }
            std::vector<bool> flipped(n);
            for (std::size_t i = 0; i < n; ++i) flipped[i] = !labels[i];
            if (std::abs(fast + roc_auc(scores, flipped) - 1.0) > 1e-12) {
                pass = false;
                return "complement identity fails at trial " + std::to_string(trial);
            }
        }
        pass = true;
        return std::string("500/500 within 1e-12, complements sum to 1");
    });

    criterion(9, "simulated collaboration: mostly non-helpful yet dissent predicts help",
              [](bool& pass) {
                  ObservationMetrics m = run_observation_scenario();
                  bool directional = m.non_helpful_fraction > 0.5 && m.dissent_auc > 0.5;
                  std::string value_note = "non_helpful=" + fmt(m.non_helpful_fraction) +
                                           ", auc=" + fmt(m.dissent_auc);
                  if (!directional) {
                      pass = false;
                      return "directional claims fail: " + value_note;
                  }

                  fs::path golden = shipped("tests/golden/observation_metrics.json");
                  if (std::getenv("CONCAT_FREEZE_GOLDENS") != nullptr) {
                      nlohmann::json j{
                          {"scenario",
                           {{"method", "llm_debate"},
                            {"dataset", "data/datasets/sim_numeric_50.jsonl"},
                            {"profile", "data/profiles/observation_replication.json"},
                            {"n_agents", 5},
                            {"refinement_rounds", 2},
                            {"seed", 42}}},
                          {"non_helpful_fraction", m.non_helpful_fraction},
                          {"dissent_auc", m.dissent_auc},
                      };
                      std::ofstream out(golden, std::ios::binary | std::ios::trunc);
                      out << j.dump(2) << "\n";
                      pass = true;
                      return "goldens frozen: " + value_note;
                  }

                  std::ifstream in(golden, std::ios::binary);
                  if (!in) {
                      pass = false;
                      return std::string(
                          "golden file missing; run once with CONCAT_FREEZE_GOLDENS=1");
                  }
                  nlohmann::json j = nlohmann::json::parse(in);
                  double want_frac = j.at("non_helpful_fraction").get<double>();
                  double want_auc = j.at("dissent_auc").get<double>();
                  pass = std::abs(m.non_helpful_fraction - want_frac) <= 1e-9 &&
                         std::abs(m.dissent_auc - want_auc) <= 1e-9;
                  if (!pass) {
                      return "drift from goldens: got " + value_note + ", want non_helpful=" +
                             fmt(want_frac) + ", auc=" + fmt(want_auc);
                  }
                  return value_note + " (matches goldens)";
              });

    criterion(10, "efficiency ratio spot checks", [](bool& pass) {
        double a = efficiency(86.02, 30.17);
        double b = efficiency(64.97, 41.73);
        pass = std::abs(a - 2.85) <= 0.005 && std::abs(b - 1.56) <= 0.005;
        return "eff(86.02,30.17)=" + fmt(a) + ", eff(64.97,41.73)=" + fmt(b);
    });

    criterion(11, "seeded experiment runs are byte-identical and fast", [](bool& pass) {
        auto start = std::chrono::steady_clock::now();
        fs::path scratch = fs::temp_directory_path() / "concat-acceptance-determinism";
        fs::remove_all(scratch);
        fs::create_directories(scratch);
        bool identical = true;
        for (const char* method : {"concat", "llm_debate", "cot"})
            identical = identical && run_twice_identical(method, scratch);
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fs::remove_all(scratch);
        pass = identical && elapsed < 60.0;
        return std::string(identical ? "identical bytes" : "outputs differ") + ", " +
               fmt(elapsed) + "s for 50 tasks x 3 methods x 2 runs";
    });

    criterion(12, "aggregation prompts match the golden files", [](bool& pass) {
        bool ok = read_file(shipped("tests/golden/aggregation_choice.txt")) ==
                      aggregation_system_prompt(TaskKind::choice) &&
                  read_file(shipped("tests/golden/aggregation_numeric.txt")) ==
                      aggregation_system_prompt(TaskKind::numeric) &&
                  read_file(shipped("tests/golden/aggregation_code.txt")) ==
                      aggregation_system_prompt(TaskKind::code);
        pass = ok;
        return std::string(ok ? "all three byte-identical" : "byte mismatch");
    });

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASS"
                                  : std::to_string(g_failures) + " CRITERIA FAILED")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
