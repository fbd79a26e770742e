#pragma once

// e-SNLI ingestion: CSV rows -> NliInstance, highlight-derived word labels,
// stopword removal, and Dual Instance Pairing (P1 P2 [sep] H1 H2).

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "marking/error.hpp"
#include "marking/labels.hpp"

namespace marking {

enum class NliLabel { entailment, contradiction, neutral };

inline LabelId label_id_of(NliLabel l) {
    switch (l) {
        case NliLabel::entailment: return kEntailment;
        case NliLabel::contradiction: return kContradiction;
        case NliLabel::neutral: return kNeutral;
    }
    return kNone;
}

struct NliInstance {
    std::string id;
    std::vector<std::string> premise;
    std::vector<std::string> hypothesis;
    NliLabel instance_label = NliLabel::neutral;
    std::set<std::size_t> premise_highlights;
    std::set<std::size_t> hypothesis_highlights;
};

// The training/inference unit: premise ++ [sep] ++ hypothesis with one
// label per position. DIP outputs are the same shape with two sources.
struct WordLabeledPair {
    std::vector<std::string> premise_words;
    std::vector<std::string> hypothesis_words;
    std::vector<LabelId> labels;  // len == premise + 1 + hypothesis, sep labeled 4
    std::vector<NliLabel> source_labels;
    std::vector<std::string> provenance;

    std::size_t separator_pos() const { return premise_words.size(); }

    std::vector<std::string> tokens() const {
        std::vector<std::string> out = premise_words;
        out.push_back("[sep]");
        out.insert(out.end(), hypothesis_words.begin(), hypothesis_words.end());
        return out;
    }
};

struct IngestResult {
    std::vector<NliInstance> instances;
    std::size_t dropped_rows = 0;  // rows without a usable gold label
};

namespace detail {

// RFC 4180 CSV: quoted fields may contain commas, doubled quotes, newlines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false, any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') { field.push_back('"'); in.get(); }
                else in_quotes = false;
            } else field.push_back(ch);
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(std::move(field));
            return true;
        } else field.push_back(ch);
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        out.push_back(s.substr(start, i - start));
    }
    return out;
}

// e-SNLI highlight fields hold comma-separated word indices, or "{}" when
// the annotator highlighted nothing.
inline std::set<std::size_t> parse_highlights(const std::string& field, std::size_t n_words,
                                              std::size_t row) {
    std::set<std::size_t> out;
    if (field.empty() || field == "{}") return out;
    std::size_t pos = 0;
    while (pos < field.size()) {
        std::size_t next = field.find(',', pos);
        std::string tok = field.substr(pos, next == std::string::npos ? next : next - pos);
        pos = next == std::string::npos ? field.size() : next + 1;
        if (tok.empty() || tok == "{}") continue;
        std::size_t idx;
        try {
            idx = static_cast<std::size_t>(std::stoul(tok));
        } catch (const std::exception&) {
            throw Error(Errc::malformed_row,
                        "row " + std::to_string(row) + ": bad highlight index '" + tok + "'");
        }
        if (idx >= n_words)
            throw Error(Errc::malformed_row, "row " + std::to_string(row) + ": highlight index " +
                                                 std::to_string(idx) + " exceeds sentence length " +
                                                 std::to_string(n_words));
        out.insert(idx);
    }
    return out;
}

inline std::string ascii_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace detail

// annotator highlights: by default only annotator 1's columns are used; with
// union_annotators all available _1/_2/_3 columns are merged.
inline IngestResult ingest_esnli(std::istream& in, bool union_annotators = false) {
    std::vector<std::string> header;
    if (!detail::read_csv_record(in, header))
        throw Error(Errc::malformed_row, "empty e-SNLI file");

    auto col = [&](const std::string& name) -> long {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : long(it - header.begin());
    };
    long c_id = col("pairID");
    long c_label = col("gold_label");
    long c_s1 = col("Sentence1");
    long c_s2 = col("Sentence2");
    if (c_label < 0 || c_s1 < 0 || c_s2 < 0)
        throw Error(Errc::malformed_row, "missing required e-SNLI columns (gold_label/Sentence1/Sentence2)");
    std::vector<long> c_h1, c_h2;
    for (int a = 1; a <= 3; ++a) {
        long h1 = col("Sentence1_Highlighted_" + std::to_string(a));
        long h2 = col("Sentence2_Highlighted_" + std::to_string(a));
        if (h1 >= 0) c_h1.push_back(h1);
        if (h2 >= 0) c_h2.push_back(h2);
        if (!union_annotators) break;
    }

    IngestResult result;
    std::vector<std::string> row;
    std::size_t rowno = 1;
    while (detail::read_csv_record(in, row)) {
        ++rowno;
        auto get = [&](long c) -> std::string {
            if (c < 0 || std::size_t(c) >= row.size())
                throw Error(Errc::malformed_row, "row " + std::to_string(rowno) + ": too few fields");
            return row[std::size_t(c)];
        };
        std::string label = get(c_label);
        NliLabel nli;
        if (label == "entailment") nli = NliLabel::entailment;
        else if (label == "contradiction") nli = NliLabel::contradiction;
        else if (label == "neutral") nli = NliLabel::neutral;
        else { ++result.dropped_rows; continue; }

        NliInstance inst;
        inst.id = c_id >= 0 ? get(c_id) : std::to_string(rowno);
        inst.instance_label = nli;
        inst.premise = detail::split_words(get(c_s1));
        inst.hypothesis = detail::split_words(get(c_s2));
        for (long c : c_h1)
            for (auto i : detail::parse_highlights(get(c), inst.premise.size(), rowno))
                inst.premise_highlights.insert(i);
        for (long c : c_h2)
            for (auto i : detail::parse_highlights(get(c), inst.hypothesis.size(), rowno))
                inst.hypothesis_highlights.insert(i);
        result.instances.push_back(std::move(inst));
    }
    return result;
}

inline IngestResult ingest_esnli_file(const std::string& path, bool union_annotators = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    return ingest_esnli(in, union_annotators);
}

// Highlighted hypothesis words get the instance label id, everything else 3,
// the separator 4. Premise highlights contribute only when asked for.
inline WordLabeledPair word_labels_from_highlights(const NliInstance& inst,
                                                   bool include_premise_highlights = false) {
    WordLabeledPair pair;
    pair.premise_words = inst.premise;
    pair.hypothesis_words = inst.hypothesis;
    pair.source_labels = {inst.instance_label};
    pair.provenance = {inst.id};
    LabelId id = label_id_of(inst.instance_label);

    pair.labels.reserve(inst.premise.size() + 1 + inst.hypothesis.size());
    for (std::size_t i = 0; i < inst.premise.size(); ++i)
        pair.labels.push_back(include_premise_highlights && inst.premise_highlights.count(i) ? id : kNone);
    pair.labels.push_back(kSeparator);
    for (std::size_t i = 0; i < inst.hypothesis.size(); ++i)
        pair.labels.push_back(inst.hypothesis_highlights.count(i) ? id : kNone);
    return pair;
}

inline WordLabeledPair remove_stopwords(const WordLabeledPair& pair,
                                        const std::unordered_set<std::string_view>& stoplist) {
    WordLabeledPair out;
    out.source_labels = pair.source_labels;
    out.provenance = pair.provenance;
    for (std::size_t i = 0; i < pair.premise_words.size(); ++i) {
        if (stoplist.count(detail::ascii_lower(pair.premise_words[i]))) continue;
        out.premise_words.push_back(pair.premise_words[i]);
        out.labels.push_back(pair.labels[i]);
    }
    out.labels.push_back(kSeparator);
    std::size_t hyp_base = pair.premise_words.size() + 1;
    for (std::size_t i = 0; i < pair.hypothesis_words.size(); ++i) {
        if (stoplist.count(detail::ascii_lower(pair.hypothesis_words[i]))) continue;
        out.hypothesis_words.push_back(pair.hypothesis_words[i]);
        out.labels.push_back(pair.labels[hyp_base + i]);
    }
    if (out.hypothesis_words.empty())
        throw Error(Errc::empty_hypothesis, "stopword removal deleted every hypothesis word");
    return out;
}

namespace detail {

inline WordLabeledPair combine_dip(const WordLabeledPair& a, const WordLabeledPair& b) {
    WordLabeledPair out;
    out.premise_words = a.premise_words;
    out.premise_words.insert(out.premise_words.end(), b.premise_words.begin(), b.premise_words.end());
    out.hypothesis_words = a.hypothesis_words;
    out.hypothesis_words.insert(out.hypothesis_words.end(), b.hypothesis_words.begin(),
                                b.hypothesis_words.end());
    out.labels.insert(out.labels.end(), a.labels.begin(), a.labels.begin() + long(a.premise_words.size()));
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.begin() + long(b.premise_words.size()));
    out.labels.push_back(kSeparator);
    out.labels.insert(out.labels.end(), a.labels.begin() + long(a.premise_words.size()) + 1, a.labels.end());
    out.labels.insert(out.labels.end(), b.labels.begin() + long(b.premise_words.size()) + 1, b.labels.end());
    out.source_labels = a.source_labels;
    out.source_labels.insert(out.source_labels.end(), b.source_labels.begin(), b.source_labels.end());
    out.provenance = a.provenance;
    out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
    return out;
}

}  // namespace detail

// Seeded shuffle, then greedy pairing of instances with different source
// labels; unpaired leftovers pass through unchanged.
inline std::vector<WordLabeledPair> dip_pair(const std::vector<WordLabeledPair>& instances,
                                             std::uint64_t seed) {
    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng() % i]);  // hand-rolled Fisher-Yates, stable across stdlibs

    std::vector<WordLabeledPair> out;
    std::vector<std::size_t> pending;
    for (std::size_t idx : order) {
        NliLabel lbl = instances[idx].source_labels.front();
        auto it = std::find_if(pending.begin(), pending.end(), [&](std::size_t p) {
            return instances[p].source_labels.front() != lbl;
        });
        if (it == pending.end()) {
            pending.push_back(idx);
        } else {
            out.push_back(detail::combine_dip(instances[*it], instances[idx]));
            pending.erase(it);
        }
    }
    for (std::size_t idx : pending) out.push_back(instances[idx]);
    return out;
}

}  // namespace marking
