#pragma once

// Data plumbing between the corpus modules and training: e-SNLI CSV ->
// labeled word pairs with the chosen preprocessing, plus a JSONL
// serialization of the prepared pairs.

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marking/error.hpp"
#include "marking/esnli.hpp"
#include "marking/labels.hpp"
#include "marking/stopwords.hpp"

namespace marking {

struct PrepOptions {
    bool dip = false;
    bool rm_stopwords = false;
    bool premise_highlights = false;
    bool union_annotators = false;
    std::uint64_t seed = 42;
    LabelSetting setting = LabelSetting::generic;
};

struct PrepStats {
    std::size_t rows_dropped = 0;      // missing gold label
    std::size_t emptied_by_stopwords = 0;
};

inline std::vector<WordLabeledPair> prepare_pairs(const std::vector<NliInstance>& instances,
                                                  const PrepOptions& opt, PrepStats* stats = nullptr) {
    std::vector<WordLabeledPair> pairs;
    for (const auto& inst : instances) {
        WordLabeledPair pair = word_labels_from_highlights(inst, opt.premise_highlights);
        if (opt.rm_stopwords) {
            try {
                pair = remove_stopwords(pair, english_stopwords());
            } catch (const Error& e) {
                if (e.code() == Errc::empty_hypothesis) {
                    if (stats) ++stats->emptied_by_stopwords;
                    continue;
                }
                throw;
            }
        }
        pair.labels = remap_labels(pair.labels, opt.setting);
        pairs.push_back(std::move(pair));
    }
    if (opt.dip) pairs = dip_pair(pairs, opt.seed);
    return pairs;
}

inline std::vector<WordLabeledPair> prepare_esnli(const std::vector<std::string>& csv_paths,
                                                  const PrepOptions& opt, PrepStats* stats = nullptr) {
    std::vector<NliInstance> instances;
    for (const auto& path : csv_paths) {
        IngestResult res = ingest_esnli_file(path, opt.union_annotators);
        if (stats) stats->rows_dropped += res.dropped_rows;
        instances.insert(instances.end(), std::make_move_iterator(res.instances.begin()),
                         std::make_move_iterator(res.instances.end()));
    }
    return prepare_pairs(instances, opt, stats);
}

inline const char* nli_label_name(NliLabel l) {
    switch (l) {
        case NliLabel::entailment: return "entailment";
        case NliLabel::contradiction: return "contradiction";
        case NliLabel::neutral: return "neutral";
    }
    return "?";
}

inline NliLabel parse_nli_label(const std::string& s) {
    if (s == "entailment") return NliLabel::entailment;
    if (s == "contradiction") return NliLabel::contradiction;
    if (s == "neutral") return NliLabel::neutral;
    throw Error(Errc::invalid_label, "unknown NLI label '" + s + "'");
}

inline void save_pairs_jsonl(const std::vector<WordLabeledPair>& pairs, std::ostream& out) {
    for (const auto& pair : pairs) {
        nlohmann::json j;
        j["premise"] = pair.premise_words;
        j["hypothesis"] = pair.hypothesis_words;
        j["labels"] = nlohmann::json::array();
        for (LabelId l : pair.labels) j["labels"].push_back(int(l));
        j["source_labels"] = nlohmann::json::array();
        for (NliLabel l : pair.source_labels) j["source_labels"].push_back(nli_label_name(l));
        j["provenance"] = pair.provenance;
        out << j.dump() << "\n";
    }
}

inline std::vector<WordLabeledPair> load_pairs_jsonl(std::istream& in,
                                                     const std::string& name = "<stream>") {
    std::vector<WordLabeledPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::schema_error, name + ":" + std::to_string(lineno) + ": " + e.what());
        }
        WordLabeledPair pair;
        pair.premise_words = j.at("premise").get<std::vector<std::string>>();
        pair.hypothesis_words = j.at("hypothesis").get<std::vector<std::string>>();
        for (const auto& l : j.at("labels")) pair.labels.push_back(LabelId(l.get<int>()));
        for (const auto& l : j.at("source_labels")) pair.source_labels.push_back(parse_nli_label(l));
        if (j.contains("provenance")) pair.provenance = j.at("provenance").get<std::vector<std::string>>();
        if (pair.labels.size() != pair.premise_words.size() + 1 + pair.hypothesis_words.size())
            throw Error(Errc::schema_error,
                        name + ":" + std::to_string(lineno) + ": label count does not match words");
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

inline std::vector<WordLabeledPair> load_pairs_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    return load_pairs_jsonl(in, path);
}

}  // namespace marking
