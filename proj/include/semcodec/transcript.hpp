// Per-session record of every stage: prompt, input, output, timestamp.
//
// JSON schema (one file per session):
//   {
//     "session_id": string,
//     "role": "encoder" | "decoder" | "reflect",
//     "backend": {"name": string, "parameters": object},
//     "preprocess": object (optional; crop/resample performed by the CLI),
//     "stages": [{"name": <stage>, "iteration": int (reflection only),
//                 "prompt": string, "input": string, "output": string,
//                 "timestamp": uint, "note": string (optional)}],
//     "warnings": [{"kind": "WordBudgetViolation", "target": int,
//                   "actual": int, "deviation": number, "tolerance": number}]
//   }
// <stage> is one of describe, word_select, word_compress, word_decompress,
// generate, reflect_describe, reflect_compare, reflect_generate,
// reflection_skipped. Image inputs/outputs are stored as "sha256:<hex>".
#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semcodec/errors.hpp"

namespace semcodec {

enum class Stage {
    describe,
    word_select,
    word_compress,
    word_decompress,
    generate,
    reflect_describe,
    reflect_compare,
    reflect_generate,
    reflection_skipped,
};

inline std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::describe: return "describe";
        case Stage::word_select: return "word_select";
        case Stage::word_compress: return "word_compress";
        case Stage::word_decompress: return "word_decompress";
        case Stage::generate: return "generate";
        case Stage::reflect_describe: return "reflect_describe";
        case Stage::reflect_compare: return "reflect_compare";
        case Stage::reflect_generate: return "reflect_generate";
        case Stage::reflection_skipped: return "reflection_skipped";
    }
    return "unknown";
}

inline Stage parse_stage(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(Stage::reflection_skipped); ++i) {
        if (to_string(static_cast<Stage>(i)) == name) return static_cast<Stage>(i);
    }
    throw InvalidArgument("unknown stage '" + std::string(name) + "'");
}

inline std::string image_token(const std::string &hash) { return "sha256:" + hash; }

struct StageRecord {
    Stage name = Stage::describe;
    int iteration = 0;  // 1-based for reflection stages, 0 otherwise
    std::string prompt;
    std::string input;
    std::string output;
    std::uint64_t timestamp = 0;
    std::string note;

    friend bool operator==(const StageRecord &, const StageRecord &) = default;
};

struct WordBudgetViolation {
    std::size_t target = 0;
    std::size_t actual = 0;
    double deviation = 0.0;
    double tolerance = 0.0;

    friend bool operator==(const WordBudgetViolation &, const WordBudgetViolation &) = default;
};

enum class TimestampMode { logical, wall };

class SessionTranscript {
public:
    SessionTranscript() = default;
    SessionTranscript(std::string session_id, std::string role, TimestampMode mode = TimestampMode::logical)
        : session_id_(std::move(session_id)), role_(std::move(role)), mode_(mode) {}

    const std::string &session_id() const noexcept { return session_id_; }
    const std::string &role() const noexcept { return role_; }
    const std::vector<StageRecord> &stages() const noexcept { return stages_; }
    const std::vector<WordBudgetViolation> &warnings() const noexcept { return warnings_; }

    /// Logical mode stamps the stage index; wall mode uses milliseconds
    /// since the epoch, clamped so timestamps never decrease.
    const StageRecord &record(StageRecord rec) {
        std::uint64_t ts = stages_.size();
        if (mode_ == TimestampMode::wall) {
            const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::system_clock::now().time_since_epoch())
                                 .count();
            ts = static_cast<std::uint64_t>(now);
            if (!stages_.empty()) ts = std::max(ts, stages_.back().timestamp);
        }
        rec.timestamp = ts;
        stages_.push_back(std::move(rec));
        return stages_.back();
    }

    void add_warning(WordBudgetViolation w) { warnings_.push_back(w); }

    void set_backend(std::string name, nlohmann::json params) {
        backend_name_ = std::move(name);
        backend_params_ = std::move(params);
    }

    void set_preprocess(nlohmann::json info) { preprocess_ = std::move(info); }
    const std::optional<nlohmann::json> &preprocess() const noexcept { return preprocess_; }

    std::vector<Stage> stage_names() const {
        std::vector<Stage> out;
        for (const auto &s : stages_) out.push_back(s.name);
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json stages = nlohmann::json::array();
        for (const auto &s : stages_) {
            nlohmann::json j = {{"name", std::string(to_string(s.name))},
                                {"prompt", s.prompt},
                                {"input", s.input},
                                {"output", s.output},
                                {"timestamp", s.timestamp}};
            if (s.iteration > 0) j["iteration"] = s.iteration;
            if (!s.note.empty()) j["note"] = s.note;
            stages.push_back(std::move(j));
        }
        nlohmann::json warnings = nlohmann::json::array();
        for (const auto &w : warnings_) {
            warnings.push_back({{"kind", "WordBudgetViolation"},
                                {"target", w.target},
                                {"actual", w.actual},
                                {"deviation", w.deviation},
                                {"tolerance", w.tolerance}});
        }
        nlohmann::json out = {{"session_id", session_id_},
                              {"role", role_},
                              {"backend", {{"name", backend_name_}, {"parameters", backend_params_}}},
                              {"stages", std::move(stages)},
                              {"warnings", std::move(warnings)}};
        if (preprocess_) out["preprocess"] = *preprocess_;
        return out;
    }

    static SessionTranscript from_json(const nlohmann::json &j) {
        SessionTranscript t(j.at("session_id").get<std::string>(), j.at("role").get<std::string>());
        if (j.contains("backend")) {
            t.backend_name_ = j["backend"].value("name", "");
            t.backend_params_ = j["backend"].value("parameters", nlohmann::json::object());
        }
        for (const auto &s : j.at("stages")) {
            StageRecord r;
            r.name = parse_stage(s.at("name").get<std::string>());
            r.iteration = s.value("iteration", 0);
            r.prompt = s.at("prompt").get<std::string>();
            r.input = s.at("input").get<std::string>();
            r.output = s.at("output").get<std::string>();
            r.timestamp = s.at("timestamp").get<std::uint64_t>();
            r.note = s.value("note", "");
            t.stages_.push_back(std::move(r));
        }
        for (const auto &w : j.value("warnings", nlohmann::json::array())) {
            t.warnings_.push_back({w.at("target").get<std::size_t>(), w.at("actual").get<std::size_t>(),
                                   w.at("deviation").get<double>(), w.at("tolerance").get<double>()});
        }
        if (j.contains("preprocess")) t.preprocess_ = j["preprocess"];
        return t;
    }

    void save(const std::filesystem::path &path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw Error("cannot write transcript " + path.string());
        out << to_json().dump(2) << '\n';
    }

private:
    std::string session_id_;
    std::string role_;
    TimestampMode mode_ = TimestampMode::logical;
    std::string backend_name_;
    nlohmann::json backend_params_ = nlohmann::json::object();
    std::optional<nlohmann::json> preprocess_;
    std::vector<StageRecord> stages_;
    std::vector<WordBudgetViolation> warnings_;
};

}  // namespace semcodec
