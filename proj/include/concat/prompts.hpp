#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "concat/core.hpp"

namespace concat {

// A peer answer handed to an agent as collaboration context.
struct Reference {
    AgentId agent = 0;
    std::string answer;                            // raw text as produced
    std::optional<std::string> normalized;         // extracted decision, if any
    double confidence = 0.0;
    std::optional<std::string> feedback;           // e.g. test results for code
};

// Final-decision system prompts, one per task kind. These strings are golden
// data: tests compare them byte-for-byte against checked-in files, so any
// edit here must update tests/golden/ in the same change.
inline const std::string& aggregation_system_prompt(TaskKind kind) {
    static const std::string choice =
        "You are the top decision-maker and are good at analyzing and summarizing other "
        "people's opinions, finding errors and giving final answers.\n"
        "\n"
        "I will ask you a question. I will also give you 4 answers enumerated as A, B, C and D. "
        "Only one answer out of the offered 4 is correct. You must choose the correct answer to "
        "the question. Your response must be one of the 4 letters: A, B, C or D, corresponding "
        "to the correct answer. I will give you some other people's answers and analysis. Your "
        "reply must only contain one letter and cannot have any other characters. For example, "
        "your reply can be A.";
    static const std::string numeric =
        "You are the top decision-maker. Good at analyzing and summarizing mathematical "
        "problems, judging and summarizing other people's solutions, and giving final answers "
        "to math problems.\n"
        "\n"
        "You will be given a math problem, analysis and code from other agents. Please find the "
        "most reliable answer based on the analysis and results of other agents. Give reasons "
        "for making decisions. The last line of your output contains only the final result "
        "without any units, for example: The answer is 140";
    static const std::string code =
        "You are the top decision-maker and are good at analyzing and summarizing other "
        "people's opinions, finding errors and giving final answers. And you are an AI that "
        "only responds with only python code.\n"
        "\n"
        "You will be given a function signature and its docstring by the user. You may be given "
        "the overall code design, algorithm framework, code implementation or test problems. "
        "Write your full implementation (restate the function signature). If the prompt given "
        "to you contains code that passed internal testing, you can choose the most reliable "
        "reply. If there is no code that has passed internal testing in the prompt, you can "
        "change it yourself according to the prompt. Use a Python code block to write your "
        "response. For example:\n"
        "```python\n"
        "print('Hello world!')\n"
        "```\n"
        "Do not include anything other than Python code blocks in your response.";
    switch (kind) {
        case TaskKind::choice: return choice;
        case TaskKind::numeric: return numeric;
        case TaskKind::code: return code;
    }
    return choice;
}

// Worker-agent system prompts. Defaults are compiled in; a prompt directory
// can override them per kind (role_choice.txt / role_numeric.txt /
// role_code.txt), plus optional few-shot text prepended to user prompts.
struct PromptLibrary {
    std::string role_choice;
    std::string role_numeric;
    std::string role_code;
    std::string few_shot_choice;
    std::string few_shot_numeric;

    static PromptLibrary defaults() {
        PromptLibrary lib;
        lib.role_choice =
            "You are given a multiple-choice question with options A, B, C and D. Think through "
            "the problem step by step, explain your reasoning, and end your reply with the "
            "single letter of the correct option.";
        lib.role_numeric =
            "You are a careful mathematical problem solver. Work through the problem step by "
            "step and justify each step. The last line of your output must contain only the "
            "final numeric result in the form: The answer is 140";
        lib.role_code =
            "You are a Python programmer. Implement the requested function completely, "
            "restating its signature. Use a Python code block to write your response and do "
            "not include anything other than the code block.";
        return lib;
    }

    static PromptLibrary from_directory(const std::filesystem::path& dir) {
        PromptLibrary lib = defaults();
        auto load = [&](const char* name, std::string& slot) {
            std::ifstream in(dir / name, std::ios::binary);
            if (!in) return;
            std::ostringstream buf;
            buf << in.rdbuf();
            std::string text = buf.str();
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
            if (!text.empty()) slot = text;
        };
        load("role_choice.txt", lib.role_choice);
        load("role_numeric.txt", lib.role_numeric);
        load("role_code.txt", lib.role_code);
        load("few_shot_choice.txt", lib.few_shot_choice);
        load("few_shot_numeric.txt", lib.few_shot_numeric);
        return lib;
    }

    const std::string& role_for(TaskKind kind) const {
        switch (kind) {
            case TaskKind::choice: return role_choice;
            case TaskKind::numeric: return role_numeric;
            case TaskKind::code: return role_code;
        }
        return role_choice;
    }

    const std::string& few_shot_for(TaskKind kind) const {
        static const std::string empty;
        switch (kind) {
            case TaskKind::choice: return few_shot_choice;
            case TaskKind::numeric: return few_shot_numeric;
            case TaskKind::code: return empty;
        }
        return empty;
    }
};

// Peer answers rendered into the "{agent responses}" slot, one block per
// agent in the order given.
inline std::string render_agent_responses(const std::vector<Reference>& refs) {
    std::ostringstream out;
    bool first = true;
    for (const Reference& ref : refs) {
        if (!first) out << "\n\n";
        first = false;
        out << "Agent " << ref.agent << ": " << ref.answer;
        if (ref.feedback && !ref.feedback->empty()) out << "\nTest feedback: " << *ref.feedback;
    }
    return out.str();
}

namespace detail {

inline std::string task_prompt(const Task& task, const std::vector<Reference>& refs,
                               const std::string& few_shot) {
    std::ostringstream out;
    if (!few_shot.empty()) out << few_shot << " ";
    out << "The task is: " << task.question << ".";
    if (!refs.empty()) {
        if (task.kind == TaskKind::code)
            out << " At the same time, the outputs and feedbacks of other agents are as "
                   "follows: ";
        else
            out << " At the same time, the output of other agents is as follows: ";
        out << render_agent_responses(refs);
    }
    return out.str();
}

}  // namespace detail

// User prompt for a worker call: the bare task at init, the task plus peer
// responses during refinement.
inline std::string build_task_prompt(const Task& task, const std::vector<Reference>& refs,
                                     const PromptLibrary& lib) {
    return detail::task_prompt(task, refs, lib.few_shot_for(task.kind));
}

// User prompt for the final-decision call over all agents' answers.
inline std::string build_aggregation_user_prompt(const Task& task,
                                                 const std::vector<Reference>& refs,
                                                 const PromptLibrary& lib) {
    return detail::task_prompt(task, refs, lib.few_shot_for(task.kind));
}

}  // namespace concat
