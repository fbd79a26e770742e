#pragma once

// The marking model: encoder embeddings e_i through a D x 5 classifier head
// with a softmax, per-word probabilities via first-subword back-projection,
// cross-entropy training, and the end-to-end mark() producing labeled spans
// over the response plus omission spans over the gold answer.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marking/align.hpp"
#include "marking/encoder.hpp"
#include "marking/error.hpp"
#include "marking/esnli.hpp"
#include "marking/labels.hpp"
#include "marking/markup.hpp"
#include "marking/tensor.hpp"
#include "marking/tokenizer.hpp"

namespace marking {

inline std::string label_space_fingerprint() {
    return "entailment=0;contradiction=1;neutral=2;none=3;sep=4";
}

struct TrainConfig {
    std::string encoder = "tiny";
    std::string tokenizer = "chunk5";
    double learning_rate = 2e-5;
    double weight_decay = 0.1;
    double warmup_ratio = 0.05;
    std::string optimizer = "adam";
    int epochs = 3;
    int batch_size = 16;
    std::uint64_t seed = 42;
    LabelSetting setting = LabelSetting::generic;
    bool dip = false;
    bool rm_stopwords = false;
    std::size_t max_len = 512;
};

struct TrainLog {
    std::vector<double> step_losses;
    std::size_t skipped_too_long = 0;

    // FNV-1a over the formatted losses; equal hashes mean identical runs.
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;
        char buf[32];
        for (double loss : step_losses) {
            int n = std::snprintf(buf, sizeof buf, "%.6e", loss);
            for (int i = 0; i < n; ++i) {
                h ^= static_cast<unsigned char>(buf[i]);
                h *= 1099511628211ull;
            }
        }
        std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
        return buf;
    }
};

class MarkingModel {
public:
    MarkingModel(std::shared_ptr<Encoder> encoder, std::shared_ptr<Tokenizer> tokenizer,
                 LabelSetting setting, std::uint64_t seed)
        : encoder_(std::move(encoder)), tokenizer_(std::move(tokenizer)), setting_(setting) {
        Gaussian rng(seed ^ 0x9e3779b97f4a7c15ull);
        head_.add("w", encoder_->dim(), kNumLabels, 0.02f, rng);
        head_.add("b", 1, kNumLabels, 0.0f, rng, /*decay=*/false);
    }

    Encoder& encoder() { return *encoder_; }
    const Encoder& encoder() const { return *encoder_; }
    const Tokenizer& tokenizer() const { return *tokenizer_; }
    std::shared_ptr<Tokenizer> tokenizer_ptr() const { return tokenizer_; }
    LabelSetting setting() const { return setting_; }
    ParamStore& head() { return head_; }
    const Matrix& classifier_weights() const {
        return const_cast<ParamStore&>(head_).at("w").value;
    }

    // Probability rows (softmax over the 5 labels) per token of an aligned
    // example. Const and cache-free: safe for concurrent use.
    std::vector<std::vector<float>> token_probs(const AlignedExample& ex) const {
        Matrix logits = token_logits(ex, nullptr);
        Matrix probs = nn::softmax_rows(logits);
        std::vector<std::vector<float>> rows(std::size_t(probs.rows()));
        for (Eigen::Index r = 0; r < probs.rows(); ++r) {
            rows[std::size_t(r)].resize(kNumLabels);
            for (int j = 0; j < kNumLabels; ++j) rows[std::size_t(r)][std::size_t(j)] = probs(r, j);
        }
        return rows;
    }

    Matrix token_logits(const AlignedExample& ex, std::unique_ptr<Encoder::Cache>* cache) const {
        Matrix emb = encoder_->forward(ex.token_ids, cache);
        const Matrix& w = const_cast<ParamStore&>(head_).at("w").value;
        const Matrix& b = const_cast<ParamStore&>(head_).at("b").value;
        return (emb * w).rowwise() + b.row(0);
    }

private:
    std::shared_ptr<Encoder> encoder_;
    std::shared_ptr<Tokenizer> tokenizer_;
    LabelSetting setting_;
    ParamStore head_;

    friend TrainLog train(MarkingModel&, const std::vector<WordLabeledPair>&, const TrainConfig&);
};

inline MarkingModel build_classifier(const std::string& encoder_name, LabelSetting setting,
                                     std::uint64_t seed = 42,
                                     const std::string& tokenizer_name = "chunk5") {
    auto encoder = make_encoder(encoder_name, seed);
    auto tokenizer = make_tokenizer(tokenizer_name, encoder->vocab_size());
    return MarkingModel(std::move(encoder), std::move(tokenizer), setting, seed);
}

// Cross-entropy training over unmasked token positions. The corpus must
// already be remapped to the config's label setting. Overlong examples are
// dropped, not truncated.
inline TrainLog train(MarkingModel& model, const std::vector<WordLabeledPair>& corpus,
                      const TrainConfig& cfg) {
    if (corpus.empty()) throw Error(Errc::empty_corpus, "no training examples");
    TrainLog log;
    if (cfg.epochs == 0) return log;

    std::size_t max_len = std::min(cfg.max_len, model.encoder().max_len());
    std::vector<AlignedExample> examples;
    for (const auto& pair : corpus) {
        try {
            examples.push_back(project_to_tokens(pair, model.tokenizer(), max_len));
        } catch (const Error& e) {
            if (e.code() == Errc::too_long) ++log.skipped_too_long;
            else throw;
        }
    }
    if (examples.empty()) throw Error(Errc::empty_corpus, "every training example exceeded the length limit");

    const std::size_t n = examples.size();
    const std::size_t batch = std::size_t(std::max(1, cfg.batch_size));
    const std::size_t steps_per_epoch = (n + batch - 1) / batch;
    const auto total_steps = std::int64_t(steps_per_epoch) * cfg.epochs;

    AdamConfig adam_cfg;
    adam_cfg.weight_decay = float(cfg.weight_decay);
    AdamOptimizer opt(adam_cfg);
    ParamStore* enc_params = model.encoder().params();
    std::mt19937_64 shuffle_rng(cfg.seed);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng() % i]);
        for (std::size_t begin = 0; begin < n; begin += batch, ++step) {
            std::size_t end = std::min(begin + batch, n);
            model.head_.zero_grad();
            if (enc_params) enc_params->zero_grad();

            double batch_loss = 0.0;
            for (std::size_t bi = begin; bi < end; ++bi) {
                const AlignedExample& ex = examples[order[bi]];
                std::unique_ptr<Encoder::Cache> cache;
                Matrix emb = model.encoder().forward(ex.token_ids, &cache);
                Matrix logits = (emb * model.head_.at("w").value).rowwise() +
                                model.head_.at("b").value.row(0);
                Matrix probs = nn::softmax_rows(logits);

                std::size_t n_unmasked = 0;
                for (std::size_t t = 0; t < ex.loss_mask.size(); ++t)
                    if (!ex.loss_mask[t]) ++n_unmasked;
                if (n_unmasked == 0) continue;

                double loss = 0.0;
                Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
                float inv = 1.0f / (float(n_unmasked) * float(end - begin));
                for (Eigen::Index t = 0; t < logits.rows(); ++t) {
                    if (ex.loss_mask[std::size_t(t)]) continue;
                    int target = ex.token_labels[std::size_t(t)];
                    loss -= std::log(std::max(1e-12, double(probs(t, target))));
                    dlogits.row(t) = probs.row(t) * inv;
                    dlogits(t, target) -= inv;
                }
                batch_loss += loss / (double(n_unmasked) * double(end - begin));

                Matrix d_emb = dlogits * model.head_.at("w").value.transpose();
                model.head_.at("w").grad += emb.transpose() * dlogits;
                model.head_.at("b").grad.row(0).array() += dlogits.array().colwise().sum();
                model.encoder().backward(*cache, d_emb);
            }
            if (!std::isfinite(batch_loss))
                throw Error(Errc::non_finite_loss,
                            "loss diverged at step " + std::to_string(step));
            float lr = scheduled_lr(float(cfg.learning_rate), step, total_steps, float(cfg.warmup_ratio));
            opt.step({&model.head_, enc_params}, lr);
            log.step_losses.push_back(batch_loss);
        }
    }
    return log;
}

struct WordProbs {
    std::vector<std::vector<float>> premise;     // one row per premise word
    std::vector<float> separator;
    std::vector<std::vector<float>> hypothesis;  // one row per hypothesis word
};

inline WordProbs predict_word_probs(const MarkingModel& model,
                                    const std::vector<std::string>& premise_words,
                                    const std::vector<std::string>& hypothesis_words,
                                    std::size_t max_len = 512) {
    WordLabeledPair pair;
    pair.premise_words = premise_words;
    pair.hypothesis_words = hypothesis_words;
    pair.labels.assign(premise_words.size() + 1 + hypothesis_words.size(), kNone);
    pair.labels[pair.separator_pos()] = kSeparator;

    AlignedExample ex = project_to_tokens(pair, model.tokenizer(),
                                          std::min(max_len, model.encoder().max_len()));
    auto rows = backproject_to_words(model.token_probs(ex), ex);

    WordProbs out;
    out.premise.assign(rows.begin(), rows.begin() + long(premise_words.size()));
    out.separator = rows[premise_words.size()];
    out.hypothesis.assign(rows.begin() + long(premise_words.size()) + 1, rows.end());
    return out;
}

// Sum probability mass of labels that merge under the setting.
inline std::vector<float> remap_probs(const std::vector<float>& row, LabelSetting setting) {
    std::vector<float> out(row.size(), 0.0f);
    for (int l = 0; l < int(row.size()); ++l)
        out[std::size_t(remap_label(LabelId(l), setting))] += row[std::size_t(l)];
    return out;
}

inline LabelId argmax_label(const std::vector<float>& row) {
    // ties break toward the lowest label id
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = j;
    return LabelId(best);
}

struct MarkingResult {
    LabelSetting setting = LabelSetting::generic;
    std::vector<LabelId> hypothesis_labels;
    std::vector<std::vector<float>> hypothesis_probs;
    std::vector<LabelId> premise_labels;
    std::vector<MarkedSpan> hypothesis_spans;  // correct/incorrect/irrelevant
    std::vector<MarkedSpan> omission_spans;    // over the premise, generic setting only
};

namespace detail {

struct Segmented {
    std::vector<std::string> words;
    std::vector<std::size_t> starts;
};

inline Segmented segment_text(const std::string& text) {
    SpanAnnotation ann;
    ann.plain_text = text;
    segment_words(ann);
    return Segmented{std::move(ann.words), std::move(ann.word_starts)};
}

inline SpanKind kind_of_label(LabelId l, bool premise_side) {
    switch (l) {
        case kEntailment: return SpanKind::correct;
        case kContradiction: return SpanKind::incorrect;
        default: return premise_side ? SpanKind::omission : SpanKind::irrelevant;
    }
}

// Maximal runs of identical non-3 labels become spans.
inline std::vector<MarkedSpan> spans_from_labels(const std::vector<LabelId>& labels,
                                                 const Segmented& seg, bool premise_side,
                                                 bool neutral_only = false) {
    std::vector<MarkedSpan> spans;
    std::size_t i = 0;
    while (i < labels.size()) {
        LabelId l = labels[i];
        bool eligible = neutral_only ? (l == kNeutral) : (l != kNone && l != kSeparator);
        if (!eligible) { ++i; continue; }
        std::size_t j = i;
        while (j < labels.size() && labels[j] == l) ++j;
        MarkedSpan span;
        span.kind = kind_of_label(l, premise_side);
        span.start_word = i;
        span.end_word = j;
        span.start_char = seg.starts[i];
        span.end_char = seg.starts[j - 1] + seg.words[j - 1].size();
        spans.push_back(span);
        i = j;
    }
    return spans;
}

}  // namespace detail

inline MarkingResult mark(const MarkingModel& model, const std::string& gold_answer,
                          const std::string& student_response, LabelSetting setting,
                          std::vector<std::string>* warnings = nullptr) {
    auto premise = detail::segment_text(gold_answer);
    auto hypothesis = detail::segment_text(student_response);
    if (premise.words.empty() || hypothesis.words.empty())
        throw Error(Errc::empty_input, "gold answer and student response must both be non-empty");

    // Overlong evaluation inputs are truncated from the premise tail.
    std::vector<std::string> premise_words = premise.words;
    WordProbs probs;
    while (true) {
        try {
            probs = predict_word_probs(model, premise_words, hypothesis.words);
            break;
        } catch (const Error& e) {
            if (e.code() != Errc::too_long || premise_words.size() <= 1) throw;
            premise_words.pop_back();
            if (warnings && premise_words.size() + 1 == premise.words.size())
                warnings->push_back("input too long; truncating gold answer tail");
        }
    }

    MarkingResult result;
    result.setting = setting;
    for (const auto& row : probs.hypothesis) {
        auto remapped = remap_probs(row, setting);
        result.hypothesis_probs.push_back(remapped);
        result.hypothesis_labels.push_back(argmax_label(remapped));
    }
    for (const auto& row : probs.premise)
        result.premise_labels.push_back(argmax_label(remap_probs(row, setting)));

    result.hypothesis_spans = detail::spans_from_labels(result.hypothesis_labels, hypothesis, false);
    if (setting == LabelSetting::generic)
        result.omission_spans =
            detail::spans_from_labels(result.premise_labels, premise, true, /*neutral_only=*/true);
    return result;
}

// Checkpoint: config + label-space fingerprint + every tensor, as msgpack.
inline void save_checkpoint(const MarkingModel& model, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["encoder"] = model.encoder().name();
    j["tokenizer"] = model.tokenizer().name();
    j["setting"] = label_setting_name(model.setting());
    j["fingerprint"] = label_space_fingerprint();

    auto dump_store = [](const ParamStore& store) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& t : store.tensors()) {
            nlohmann::json jt;
            jt["rows"] = t.value.rows();
            jt["cols"] = t.value.cols();
            std::vector<float> data(std::size_t(t.value.size()));
            for (Eigen::Index r = 0; r < t.value.rows(); ++r)
                for (Eigen::Index c = 0; c < t.value.cols(); ++c)
                    data[std::size_t(r * t.value.cols() + c)] = t.value(r, c);
            jt["data"] = std::move(data);
            out[t.name] = std::move(jt);
        }
        return out;
    };
    j["head"] = dump_store(const_cast<MarkingModel&>(model).head());
    ParamStore* enc = const_cast<MarkingModel&>(model).encoder().params();
    j["encoder_params"] = enc ? dump_store(*enc) : nlohmann::json::object();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    auto bytes = nlohmann::json::to_msgpack(j);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

inline MarkingModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::from_msgpack(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::checkpoint_mismatch, std::string("unreadable checkpoint: ") + e.what());
    }
    if (j.value("fingerprint", "") != label_space_fingerprint())
        throw Error(Errc::checkpoint_mismatch, "label-space fingerprint does not match this build");

    MarkingModel model = build_classifier(j.at("encoder").get<std::string>(),
                                          parse_label_setting(j.at("setting").get<std::string>()), 0,
                                          j.at("tokenizer").get<std::string>());
    auto load_store = [&](ParamStore& store, const nlohmann::json& src) {
        for (auto& t : store.tensors()) {
            if (!src.contains(t.name))
                throw Error(Errc::checkpoint_mismatch, "checkpoint is missing tensor '" + t.name + "'");
            const auto& jt = src.at(t.name);
            if (jt.at("rows").get<Eigen::Index>() != t.value.rows() ||
                jt.at("cols").get<Eigen::Index>() != t.value.cols())
                throw Error(Errc::checkpoint_mismatch, "tensor '" + t.name + "' has the wrong shape");
            const auto& data = jt.at("data");
            for (Eigen::Index r = 0; r < t.value.rows(); ++r)
                for (Eigen::Index c = 0; c < t.value.cols(); ++c)
                    t.value(r, c) = data[std::size_t(r * t.value.cols() + c)].get<float>();
        }
    };
    load_store(model.head(), j.at("head"));
    if (ParamStore* enc = model.encoder().params()) load_store(*enc, j.at("encoder_params"));
    return model;
}

}  // namespace marking
