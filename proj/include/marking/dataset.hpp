#pragma once

// QuestionRecord storage: a JSONL file with one question per line. Raw
// markup directories are import-only.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marking/error.hpp"
#include "marking/markup.hpp"

namespace marking {

struct AnnotatedVersion {
    std::string markup;       // original response markup
    std::string gold_markup;  // omission markup over the gold answer
    ResponseAnnotation response;
    GoldAnnotation gold;
};

struct ResponseRecord {
    std::string response_id;
    std::vector<AnnotatedVersion> annotations;  // one per annotator, 1 or 2
};

struct QuestionRecord {
    std::string question_id;
    std::string question_text;
    std::string gold_answer_text;  // plain text
    std::vector<ResponseRecord> responses;
};

struct DatasetStats {
    std::size_t n_questions = 0;
    std::size_t n_responses = 0;  // unique responses, not annotator duplicates
    double responses_per_question_mean = 0.0;
    double responses_per_question_sd = 0.0;
    double grade_fraction_0 = 0.0;
    double grade_fraction_half = 0.0;
    double grade_fraction_1 = 0.0;
    double mean_gold_words = 0.0;
    double mean_response_words = 0.0;
};

namespace detail {

inline QuestionRecord record_from_json(const nlohmann::json& j, const std::string& where) {
    auto fail = [&](const std::string& msg) -> void {
        throw Error(Errc::schema_error, where + ": " + msg);
    };
    if (!j.is_object()) fail("not a JSON object");
    for (const char* key : {"question_id", "question_text", "gold_answer", "responses"})
        if (!j.contains(key)) fail(std::string("missing field '") + key + "'");

    QuestionRecord rec;
    rec.question_id = j.at("question_id").get<std::string>();
    rec.question_text = j.at("question_text").get<std::string>();
    rec.gold_answer_text = j.at("gold_answer").get<std::string>();

    std::set<std::string> seen_responses;
    for (const auto& jr : j.at("responses")) {
        ResponseRecord resp;
        resp.response_id = jr.at("response_id").get<std::string>();
        if (!seen_responses.insert(resp.response_id).second)
            fail("duplicate response_id '" + resp.response_id + "'");
        if (!jr.contains("annotations") || jr.at("annotations").empty())
            fail("response '" + resp.response_id + "' has no annotations");
        if (jr.at("annotations").size() > 2)
            fail("response '" + resp.response_id + "' has more than two annotator versions");
        for (const auto& ja : jr.at("annotations")) {
            AnnotatedVersion ver;
            ver.markup = ja.at("markup").get<std::string>();
            ver.gold_markup = ja.at("gold_markup").get<std::string>();
            double grade = ja.at("grade").get<double>();
            std::string annotator = ja.at("annotator_id").get<std::string>();
            try {
                ver.response = parse_marked_response(ver.markup, grade, annotator);
                ver.gold = parse_marked_gold(ver.gold_markup);
            } catch (const Error& e) {
                fail("response '" + resp.response_id + "': " + e.what());
            }
            if (ja.contains("feedback")) ver.response.feedback = ja.at("feedback").get<std::string>();
            resp.annotations.push_back(std::move(ver));
        }
        rec.responses.push_back(std::move(resp));
    }
    return rec;
}

inline nlohmann::json record_to_json(const QuestionRecord& rec) {
    nlohmann::json j;
    j["question_id"] = rec.question_id;
    j["question_text"] = rec.question_text;
    j["gold_answer"] = rec.gold_answer_text;
    j["responses"] = nlohmann::json::array();
    for (const auto& resp : rec.responses) {
        nlohmann::json jr;
        jr["response_id"] = resp.response_id;
        jr["annotations"] = nlohmann::json::array();
        for (const auto& ver : resp.annotations) {
            nlohmann::json ja;
            ja["annotator_id"] = ver.response.annotator_id;
            ja["markup"] = ver.markup;
            ja["grade"] = ver.response.grade;
            ja["gold_markup"] = ver.gold_markup;
            if (ver.response.feedback) ja["feedback"] = *ver.response.feedback;
            jr["annotations"].push_back(std::move(ja));
        }
        j["responses"].push_back(std::move(jr));
    }
    return j;
}

}  // namespace detail

enum class DatasetFormat { jsonl, raw_markup };

inline std::vector<QuestionRecord> load_dataset_jsonl(std::istream& in, const std::string& name = "<stream>") {
    std::vector<QuestionRecord> records;
    std::set<std::string> seen_questions;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string where = name + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::schema_error, where + ": " + e.what());
        }
        QuestionRecord rec = detail::record_from_json(j, where);
        if (!seen_questions.insert(rec.question_id).second)
            throw Error(Errc::schema_error, where + ": duplicate question_id '" + rec.question_id + "'");
        records.push_back(std::move(rec));
    }
    return records;
}

// Raw markup import format: one file per question.
//   line 1: question id
//   line 2: question text
//   line 3: gold answer plain text
//   then per annotated response, a block of four lines:
//   response_id <tab> annotator_id <tab> grade
//   response markup
//   gold-answer omission markup
//   feedback text (may be empty)
inline std::vector<QuestionRecord> load_dataset_raw(const std::filesystem::path& dir) {
    std::vector<QuestionRecord> records;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".txt") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::set<std::string> seen_questions;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
        std::string where = path.filename().string();
        QuestionRecord rec;
        std::string line;
        if (!std::getline(in, rec.question_id) || !std::getline(in, rec.question_text) ||
            !std::getline(in, rec.gold_answer_text))
            throw Error(Errc::schema_error, where + ": truncated header");
        if (!seen_questions.insert(rec.question_id).second)
            throw Error(Errc::schema_error, where + ": duplicate question_id '" + rec.question_id + "'");

        std::set<std::string> seen_responses;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto t1 = line.find('\t');
            auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
            if (t1 == std::string::npos || t2 == std::string::npos)
                throw Error(Errc::schema_error, where + ": bad response header '" + line + "'");
            std::string response_id = line.substr(0, t1);
            std::string annotator_id = line.substr(t1 + 1, t2 - t1 - 1);
            double grade = std::stod(line.substr(t2 + 1));

            AnnotatedVersion ver;
            if (!std::getline(in, ver.markup) || !std::getline(in, ver.gold_markup))
                throw Error(Errc::schema_error, where + ": truncated block for '" + response_id + "'");
            std::string feedback;
            std::getline(in, feedback);
            try {
                ver.response = parse_marked_response(ver.markup, grade, annotator_id);
                ver.gold = parse_marked_gold(ver.gold_markup);
            } catch (const Error& e) {
                throw Error(Errc::schema_error, where + ": response '" + response_id + "': " + e.what());
            }
            if (!feedback.empty()) ver.response.feedback = feedback;

            auto it = std::find_if(rec.responses.begin(), rec.responses.end(),
                                   [&](const ResponseRecord& r) { return r.response_id == response_id; });
            if (it == rec.responses.end()) {
                rec.responses.push_back(ResponseRecord{response_id, {}});
                it = rec.responses.end() - 1;
            }
            if (it->annotations.size() >= 2)
                throw Error(Errc::schema_error,
                            where + ": response '" + response_id + "' has more than two annotator versions");
            it->annotations.push_back(std::move(ver));
        }
        if (rec.responses.empty())
            throw Error(Errc::schema_error, where + ": question has no responses");
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path,
                                                DatasetFormat format = DatasetFormat::jsonl) {
    if (format == DatasetFormat::raw_markup) return load_dataset_raw(path);
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
    return load_dataset_jsonl(in, path.filename().string());
}

inline void save_dataset_jsonl(const std::vector<QuestionRecord>& records, std::ostream& out) {
    for (const auto& rec : records) out << detail::record_to_json(rec).dump() << "\n";
}

inline DatasetStats dataset_stats(const std::vector<QuestionRecord>& records) {
    DatasetStats st;
    st.n_questions = records.size();
    if (records.empty()) return st;

    std::size_t grade_count[3] = {0, 0, 0};  // 0, 0.5, 1
    std::size_t total_gradings = 0;
    std::size_t total_response_words = 0;
    std::size_t total_gold_words = 0;
    std::vector<std::size_t> per_question;

    for (const auto& rec : records) {
        per_question.push_back(rec.responses.size());
        st.n_responses += rec.responses.size();
        total_gold_words += parse_marked_gold(rec.gold_answer_text).words.size();
        for (const auto& resp : rec.responses) {
            if (!resp.annotations.empty())
                total_response_words += resp.annotations.front().response.words.size();
            for (const auto& ver : resp.annotations) {
                ++total_gradings;
                if (ver.response.grade == 0.0) ++grade_count[0];
                else if (ver.response.grade == 0.5) ++grade_count[1];
                else ++grade_count[2];
            }
        }
    }

    double mean = double(st.n_responses) / double(st.n_questions);
    double var = 0.0;
    for (auto n : per_question) var += (double(n) - mean) * (double(n) - mean);
    st.responses_per_question_mean = mean;
    st.responses_per_question_sd = std::sqrt(var / double(per_question.size()));
    if (total_gradings > 0) {
        st.grade_fraction_0 = double(grade_count[0]) / double(total_gradings);
        st.grade_fraction_half = double(grade_count[1]) / double(total_gradings);
        st.grade_fraction_1 = double(grade_count[2]) / double(total_gradings);
    }
    st.mean_gold_words = double(total_gold_words) / double(st.n_questions);
    if (st.n_responses > 0) st.mean_response_words = double(total_response_words) / double(st.n_responses);
    return st;
}

}  // namespace marking
