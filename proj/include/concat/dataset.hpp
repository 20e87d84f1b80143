#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "concat/core.hpp"
#include "concat/errors.hpp"

namespace concat {

// JSONL dataset reader. Per kind, each line must carry:
//   choice:  id, question (options inlined), answer in {A,B,C,D}
//   numeric: id, question, answer
//   code:    id, prompt (doubles as the question), optional entry_point,
//            optional tests (opaque, carried through), optional
//            canonical_solution/answer as the reference
// Ids must be unique. All violations raise SchemaError naming the line.
inline std::vector<Task> load_dataset(const std::string& path, TaskKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open dataset: " + path);

    std::vector<Task> tasks;
    std::set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string where = path + " line " + std::to_string(line_no);
        if (detail::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw SchemaError(where + ": not valid JSON");
        if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");

        Task task;
        task.kind = kind;
        try {
            task.id = j.at("id").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw SchemaError(where + ": missing or invalid \"id\"");
        }
        if (!seen_ids.insert(task.id).second)
            throw SchemaError(where + ": duplicate id \"" + task.id + "\"");

        auto need_string = [&](const char* key) {
            if (!j.contains(key) || !j[key].is_string())
                throw SchemaError(where + ": missing or invalid \"" + key + "\"");
            return j[key].get<std::string>();
        };

        switch (kind) {
            case TaskKind::choice: {
                task.question = need_string("question");
                task.reference_answer = need_string("answer");
                if (task.reference_answer.size() != 1 || task.reference_answer[0] < 'A' ||
                    task.reference_answer[0] > 'D')
                    throw SchemaError(where + ": \"answer\" must be one of A, B, C, D");
                break;
            }
            case TaskKind::numeric: {
                task.question = need_string("question");
                task.reference_answer = need_string("answer");
                break;
            }
            case TaskKind::code: {
                task.question = j.contains("prompt") && j["prompt"].is_string()
                                    ? j["prompt"].get<std::string>()
                                    : need_string("question");
                if (j.contains("canonical_solution") && j["canonical_solution"].is_string())
                    task.reference_answer = j["canonical_solution"].get<std::string>();
                else if (j.contains("answer") && j["answer"].is_string())
                    task.reference_answer = j["answer"].get<std::string>();
                task.entry_point = j.value("entry_point", std::string{});
                task.tests = j.value("tests", std::string{});
                break;
            }
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

}  // namespace concat
