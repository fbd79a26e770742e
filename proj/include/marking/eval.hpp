#pragma once

// Per-category precision/recall/F1 (0/0 defined as 0), support-weighted
// averages, and micro accuracy of predicted word labels against SME
// annotations. Both annotator versions count as separate instances; counts
// aggregate globally before any ratio is taken.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "marking/dataset.hpp"
#include "marking/error.hpp"
#include "marking/labels.hpp"
#include "marking/model.hpp"
#include "marking/stopwords.hpp"

namespace marking {

struct CategoryCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ConfusionCounts {
    std::map<LabelId, CategoryCounts> per_category;
    std::size_t evaluated_words = 0;   // positions whose gold label is a category
    std::size_t accuracy_correct = 0;  // over all non-separator positions
    std::size_t accuracy_total = 0;

    void merge(const ConfusionCounts& other) {
        for (const auto& [cat, c] : other.per_category) {
            auto& mine = per_category[cat];
            mine.tp += c.tp;
            mine.fp += c.fp;
            mine.fn += c.fn;
            mine.tn += c.tn;
        }
        evaluated_words += other.evaluated_words;
        accuracy_correct += other.accuracy_correct;
        accuracy_total += other.accuracy_total;
    }
};

// Gold labels 3 and 4 are excluded from category counts; gold-3 positions
// still count in the accuracy denominator, separators never do.
inline ConfusionCounts confusion_counts(const std::vector<LabelId>& pred,
                                        const std::vector<LabelId>& gold,
                                        const std::vector<LabelId>& categories) {
    if (pred.size() != gold.size())
        throw Error(Errc::length_mismatch, std::to_string(pred.size()) + " predictions vs " +
                                               std::to_string(gold.size()) + " gold labels");
    ConfusionCounts counts;
    for (LabelId c : categories) counts.per_category[c];  // stable category set

    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (gold[i] == kSeparator) continue;
        ++counts.accuracy_total;
        if (pred[i] == gold[i]) ++counts.accuracy_correct;
        if (gold[i] == kNone) continue;
        ++counts.evaluated_words;
        for (LabelId c : categories) {
            auto& cc = counts.per_category[c];
            if (gold[i] == c && pred[i] == c) ++cc.tp;
            else if (gold[i] == c) ++cc.fn;
            else if (pred[i] == c) ++cc.fp;
            else ++cc.tn;
        }
    }
    return counts;
}

struct CategoryMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    std::size_t support = 0;  // gold occurrences: TP + FN
};

inline CategoryMetrics precision_recall_f1(const CategoryCounts& c) {
    CategoryMetrics m;
    m.support = c.tp + c.fn;
    m.precision = (c.tp + c.fp) ? double(c.tp) / double(c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) ? double(c.tp) / double(c.tp + c.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                          : 0.0;
    return m;
}

struct MetricsBlock {
    std::map<LabelId, CategoryMetrics> per_category;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    ConfusionCounts counts;
};

inline MetricsBlock metrics_from_counts(const ConfusionCounts& counts) {
    MetricsBlock block;
    block.counts = counts;
    std::size_t total_support = 0;
    for (const auto& [cat, c] : counts.per_category) {
        CategoryMetrics m = precision_recall_f1(c);
        total_support += m.support;
        block.per_category[cat] = m;
    }
    if (total_support > 0) {
        for (const auto& [cat, m] : block.per_category) {
            double w = double(m.support) / double(total_support);
            block.weighted_precision += w * m.precision;
            block.weighted_recall += w * m.recall;
            block.weighted_f1 += w * m.f1;
        }
    }
    block.accuracy =
        counts.accuracy_total ? double(counts.accuracy_correct) / double(counts.accuracy_total) : 0.0;
    return block;
}

struct EvaluationReport {
    LabelSetting setting = LabelSetting::generic;
    bool rm_stopwords = false;
    MetricsBlock overall;
    std::map<std::string, MetricsBlock> per_annotator;
    MetricsBlock omission;      // premise-side, generic setting only
    bool has_omission = false;
};

// One evaluation instance: a (response, annotator) version with its words
// and gold labels already remapped (and stopword-filtered when asked).
struct EvalInstance {
    std::string question_id;
    std::string response_id;
    std::string annotator_id;
    std::vector<std::string> premise_words;
    std::vector<std::string> hypothesis_words;
    std::vector<LabelId> gold_hypothesis_labels;  // per hypothesis word
    std::vector<LabelId> gold_premise_labels;     // omission spans as neutral
};

using Predictor = std::function<std::vector<LabelId>(const EvalInstance&)>;          // hypothesis side
using PremisePredictor = std::function<std::vector<LabelId>(const EvalInstance&)>;   // premise side

namespace detail {

inline std::vector<LabelId> word_labels_from_spans(const SpanAnnotation& ann, LabelSetting setting) {
    std::vector<LabelId> labels(ann.words.size(), kNone);
    for (const auto& span : ann.spans) {
        LabelId l = remap_label(label_of_span_kind(span.kind), setting);
        for (std::size_t w = span.start_word; w < span.end_word; ++w) labels[w] = l;
    }
    return labels;
}

inline void filter_stopwords(std::vector<std::string>& words, std::vector<LabelId>& labels) {
    std::vector<std::string> fw;
    std::vector<LabelId> fl;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (english_stopwords().count(ascii_lower(words[i]))) continue;
        fw.push_back(words[i]);
        fl.push_back(labels[i]);
    }
    words = std::move(fw);
    labels = std::move(fl);
}

}  // namespace detail

inline std::vector<EvalInstance> build_eval_instances(const std::vector<QuestionRecord>& records,
                                                      LabelSetting setting, bool rm_stopwords) {
    std::vector<EvalInstance> instances;
    for (const auto& rec : records) {
        for (const auto& resp : rec.responses) {
            for (const auto& ver : resp.annotations) {
                EvalInstance inst;
                inst.question_id = rec.question_id;
                inst.response_id = resp.response_id;
                inst.annotator_id = ver.response.annotator_id;
                inst.premise_words = ver.gold.words;
                inst.hypothesis_words = ver.response.words;
                inst.gold_hypothesis_labels = detail::word_labels_from_spans(ver.response, setting);
                inst.gold_premise_labels = detail::word_labels_from_spans(ver.gold, setting);
                if (rm_stopwords) {
                    detail::filter_stopwords(inst.hypothesis_words, inst.gold_hypothesis_labels);
                    detail::filter_stopwords(inst.premise_words, inst.gold_premise_labels);
                }
                if (inst.hypothesis_words.empty()) continue;  // nothing left to score
                instances.push_back(std::move(inst));
            }
        }
    }
    return instances;
}

inline EvaluationReport evaluate_dataset(const Predictor& predict,
                                         const std::vector<QuestionRecord>& records,
                                         LabelSetting setting, bool rm_stopwords = false,
                                         const PremisePredictor& predict_premise = nullptr) {
    EvaluationReport report;
    report.setting = setting;
    report.rm_stopwords = rm_stopwords;
    auto categories = category_set(setting);

    ConfusionCounts overall, omission;
    std::map<std::string, ConfusionCounts> per_annotator;

    for (const auto& inst : build_eval_instances(records, setting, rm_stopwords)) {
        std::vector<LabelId> pred = predict(inst);
        if (pred.size() != inst.hypothesis_words.size())
            throw Error(Errc::missing_prediction,
                        "predictor returned " + std::to_string(pred.size()) + " labels for " +
                            std::to_string(inst.hypothesis_words.size()) + " words (response '" +
                            inst.response_id + "')");
        ConfusionCounts counts = confusion_counts(pred, inst.gold_hypothesis_labels, categories);
        overall.merge(counts);
        per_annotator[inst.annotator_id].merge(counts);

        if (setting == LabelSetting::generic && predict_premise) {
            std::vector<LabelId> ppred = predict_premise(inst);
            omission.merge(confusion_counts(ppred, inst.gold_premise_labels, {kNeutral}));
            report.has_omission = true;
        }
    }

    report.overall = metrics_from_counts(overall);
    for (const auto& [annotator, counts] : per_annotator)
        report.per_annotator[annotator] = metrics_from_counts(counts);
    if (report.has_omission) report.omission = metrics_from_counts(omission);
    return report;
}

inline EvaluationReport evaluate_dataset(const MarkingModel& model,
                                         const std::vector<QuestionRecord>& records,
                                         LabelSetting setting, bool rm_stopwords = false,
                                         bool with_omission = false) {
    auto predict_both = [&model, setting](const EvalInstance& inst) {
        WordProbs probs;
        std::vector<std::string> premise = inst.premise_words;
        while (true) {
            try {
                probs = predict_word_probs(model, premise, inst.hypothesis_words);
                break;
            } catch (const Error& e) {
                if (e.code() != Errc::too_long || premise.size() <= 1) throw;
                premise.resize(premise.size() * 3 / 4);  // truncate the premise tail
            }
        }
        return probs;
    };
    Predictor hyp = [predict_both, setting](const EvalInstance& inst) {
        WordProbs probs = predict_both(inst);
        std::vector<LabelId> out;
        for (const auto& row : probs.hypothesis) out.push_back(argmax_label(remap_probs(row, setting)));
        return out;
    };
    PremisePredictor prem;
    if (with_omission && setting == LabelSetting::generic) {
        prem = [predict_both, setting](const EvalInstance& inst) {
            WordProbs probs = predict_both(inst);
            std::vector<LabelId> out(inst.premise_words.size(), kNone);
            // the premise may have been truncated; score what was predicted
            for (std::size_t i = 0; i < probs.premise.size() && i < out.size(); ++i)
                out[i] = argmax_label(remap_probs(probs.premise[i], setting));
            return out;
        };
    }
    return evaluate_dataset(hyp, records, setting, rm_stopwords, prem);
}

}  // namespace marking
