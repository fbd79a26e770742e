// Acceptance suite: one pass/fail line per criterion. Exit 0 only if all pass.

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marking/marking.hpp"

using namespace marking;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion-%d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!ok) ++g_failures;
}

void run(int criterion, const std::function<std::string()>& body) {
    try {
        report(criterion, true, body());
    } catch (const std::exception& e) {
        report(criterion, false, e.what());
    }
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

const std::string kFixture = std::string(MARKING_DATA_DIR) + "/biomarking_fixture.jsonl";

// ---------------------------------------------------------------- criterion 1

const char* kFiberCells[] = {
    "Fiber promotes <regular bowel movement by adding bulk>, and it <regulates the blood glucose "
    "consumption rate>. It <removes excess cholesterol from the body>. It binds to the cholesterol "
    "in the small intestine, then attaches to the cholesterol and prevents the cholesterol "
    "particles from entering the bloodstream Fiber-rich diets also have {a protective role in "
    "reducing the occurrence of colon cancer}",
    "Fiber can't be digested because it actually [absorbs water so its important to push waste "
    "out of the body]",
};
const char* kFiberGoldCells[] = {
    "{Fiber is a type of carbohydrate that cannot be digested by the enzymes in the human body}. "
    "Despite this, it is an important part of our diet because it can help to bulk up our stools, "
    "slow down the absorption of sugar and cholesterol, and promote the growth of beneficial "
    "bacteria in our gut.",
    "Fiber is a type of carbohydrate that cannot be digested by the enzymes in human body. "
    "Despite this, it is an important part of our diet because {it can help to bulk up our "
    "stools, slow down the absorption of sugar and cholesterol, and promote the growth of "
    "beneficial bacteria in our gut}.",
};

std::string fuzz_markup(std::mt19937_64& rng, bool gold) {
    std::size_t n_words = 1 + rng() % 30;
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n_words; ++i) {
        std::string w;
        std::size_t len = 1 + rng() % 8;
        for (std::size_t k = 0; k < len; ++k) w.push_back(char('a' + rng() % 26));
        words.push_back(w);
    }
    const char* opens = gold ? "{" : "<[{";
    const char* closes = gold ? "}" : ">]}";
    std::string out;
    std::size_t i = 0;
    while (i < n_words) {
        if (rng() % 3 == 0) {
            std::size_t kind = rng() % (gold ? 1 : 3);
            std::size_t span_len = 1 + rng() % std::min<std::size_t>(5, n_words - i);
            out.push_back(opens[kind]);
            for (std::size_t k = 0; k < span_len; ++k) {
                out += words[i++];
                if (k + 1 < span_len) out.push_back(' ');
            }
            out.push_back(closes[kind]);
        } else {
            out += words[i++];
        }
        if (i < n_words) out.push_back(' ');
    }
    return out;
}

std::string criterion1() {
    for (const char* cell : kFiberCells) {
        auto ann = parse_marked_response(cell, 0.5, "sme");
        require(render_marked(ann, RenderStyle::markup) == cell, "fiber response round-trip broke");
    }
    for (const char* cell : kFiberGoldCells) {
        auto ann = parse_marked_gold(cell);
        require(render_marked(ann, RenderStyle::markup) == cell, "fiber gold round-trip broke");
    }
    std::mt19937_64 rng(1001);
    for (int iter = 0; iter < 1000; ++iter) {
        bool gold = iter % 4 == 0;
        std::string markup = fuzz_markup(rng, gold);
        SpanAnnotation ann = gold ? SpanAnnotation(parse_marked_gold(markup))
                                  : SpanAnnotation(parse_marked_response(markup, 0.0, "s"));
        require(render_marked(ann, RenderStyle::markup) == markup,
                "fuzz round-trip broke on: " + markup);
    }
    return "markup parse->render identity on the bundled fiber cells and 1000 fuzz cases (exact)";
}

// ---------------------------------------------------------------- criterion 2

std::string criterion2() {
    auto records = load_dataset(kFixture);
    auto st = dataset_stats(records);
    require(st.n_questions == 2, "expected 2 questions, got " + std::to_string(st.n_questions));
    require(st.n_responses == 5, "expected 5 responses, got " + std::to_string(st.n_responses));
    require(st.responses_per_question_mean == 2.5, "mean responses per question drifted");
    auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
    require(close(st.grade_fraction_0, 0.4) && close(st.grade_fraction_half, 0.3) &&
                close(st.grade_fraction_1, 0.3),
            "grade distribution drifted from 0.4/0.3/0.3");
    for (const auto& rec : records)
        for (const auto& resp : rec.responses)
            for (const auto& ver : resp.annotations) {
                require(render_marked(ver.response, RenderStyle::markup) == ver.markup,
                        "fixture response markup failed round-trip validation");
                require(render_marked(ver.gold, RenderStyle::markup) == ver.gold_markup,
                        "fixture gold markup failed round-trip validation");
            }
    return "published data unreachable here; bundled 2-question fixture validates exactly "
           "(2 questions, 5 responses, grades 40/30/30)";
}

// ---------------------------------------------------------------- criterion 3

std::string criterion3() {
    std::mt19937_64 rng(3003);
    for (int iter = 0; iter < 10000; ++iter) {
        LabelSetting setting = LabelSetting(iter % 3);
        auto categories = category_set(setting);
        std::size_t n = 1 + rng() % 60;
        std::vector<LabelId> pred, gold;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(remap_label(LabelId(rng() % 4), setting));
            gold.push_back(remap_label(LabelId(rng() % 5), setting));
        }
        auto block = metrics_from_counts(confusion_counts(pred, gold, categories));

        // independent brute-force recount
        std::size_t acc_num = 0, acc_den = 0;
        std::map<LabelId, CategoryCounts> naive;
        for (LabelId c : categories) naive[c];
        for (std::size_t i = 0; i < n; ++i) {
            if (gold[i] == kSeparator) continue;
            ++acc_den;
            if (pred[i] == gold[i]) ++acc_num;
            if (gold[i] == kNone) continue;
            for (LabelId c : categories) {
                if (gold[i] == c && pred[i] == c) ++naive[c].tp;
                else if (gold[i] == c) ++naive[c].fn;
                else if (pred[i] == c) ++naive[c].fp;
                else ++naive[c].tn;
            }
        }
        double w_p = 0, w_r = 0, w_f = 0;
        std::size_t total_support = 0;
        for (auto& [c, cc] : naive) total_support += cc.tp + cc.fn;
        for (auto& [c, cc] : naive) {
            std::size_t support = cc.tp + cc.fn;
            double p = (cc.tp + cc.fp) ? double(cc.tp) / double(cc.tp + cc.fp) : 0.0;
            double r = support ? double(cc.tp) / double(support) : 0.0;
            double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
            if (total_support) {
                double w = double(support) / double(total_support);
                w_p += w * p;
                w_r += w * r;
                w_f += w * f;
            }
            const auto& m = block.per_category.at(c);
            require(m.precision == p && m.recall == r && m.f1 == f && m.support == support,
                    "per-category metrics diverged from brute force at iter " + std::to_string(iter));
        }
        double acc = acc_den ? double(acc_num) / double(acc_den) : 0.0;
        require(block.weighted_precision == w_p && block.weighted_recall == w_r &&
                    block.weighted_f1 == w_f && block.accuracy == acc,
                "aggregate metrics diverged from brute force at iter " + std::to_string(iter));
    }
    return "P/R/F1/accuracy equal an independent brute-force recount on 10000 random "
           "sequences x 3 settings (exact)";
}

// ---------------------------------------------------------------- criterion 4

WordLabeledPair random_word_pair(std::mt19937_64& rng, int tag) {
    WordLabeledPair p;
    NliLabel label = NliLabel(rng() % 3);
    std::size_t np = 1 + rng() % 5, nh = 1 + rng() % 5;
    auto word = [&](const char* side, std::size_t k) {
        return std::string(side) + std::to_string(tag) + "_" + std::to_string(k);
    };
    for (std::size_t k = 0; k < np; ++k) {
        p.premise_words.push_back(word("p", k));
        p.labels.push_back(kNone);
    }
    p.labels.push_back(kSeparator);
    for (std::size_t k = 0; k < nh; ++k) {
        p.hypothesis_words.push_back(word("h", k));
        p.labels.push_back(rng() % 2 ? label_id_of(label) : kNone);
    }
    p.source_labels = {label};
    p.provenance = {"fuzz" + std::to_string(tag)};
    return p;
}

std::string criterion4() {
    std::mt19937_64 rng(4004);

    // remap idempotence + category-set closure
    for (int iter = 0; iter < 1000; ++iter) {
        LabelSetting s = LabelSetting(iter % 3);
        auto categories = category_set(s);
        std::set<LabelId> allowed(categories.begin(), categories.end());
        allowed.insert(kNone);
        allowed.insert(kSeparator);
        std::vector<LabelId> labels;
        for (int i = 0; i < 16; ++i) labels.push_back(LabelId(rng() % 5));
        auto once = remap_labels(labels, s);
        require(remap_labels(once, s) == once, "remap is not idempotent");
        for (LabelId l : once) require(allowed.count(l) == 1, "remap escaped its category set");
    }

    // DIP: word conservation, single separator, determinism
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<WordLabeledPair> inputs;
        std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i)
            inputs.push_back(random_word_pair(rng, iter * 100 + int(i)));
        std::uint64_t seed = rng();
        auto out = dip_pair(inputs, seed);

        std::multiset<std::string> before, after;
        for (const auto& p : inputs) {
            before.insert(p.premise_words.begin(), p.premise_words.end());
            before.insert(p.hypothesis_words.begin(), p.hypothesis_words.end());
        }
        for (const auto& p : out) {
            after.insert(p.premise_words.begin(), p.premise_words.end());
            after.insert(p.hypothesis_words.begin(), p.hypothesis_words.end());
            require(std::count(p.labels.begin(), p.labels.end(), kSeparator) == 1,
                    "DIP output does not have exactly one separator");
            require(p.labels[p.separator_pos()] == kSeparator, "DIP separator misplaced");
        }
        require(before == after, "DIP lost or invented words");

        auto again = dip_pair(inputs, seed);
        require(again.size() == out.size(), "DIP output size not deterministic");
        for (std::size_t i = 0; i < out.size(); ++i)
            require(again[i].premise_words == out[i].premise_words &&
                        again[i].hypothesis_words == out[i].hypothesis_words &&
                        again[i].labels == out[i].labels,
                    "DIP not deterministic under a fixed seed");
    }

    // alignment round-trip across three distinct segmentations
    std::vector<std::shared_ptr<Tokenizer>> tokenizers = {
        make_tokenizer("word"), make_tokenizer("suffix"), make_tokenizer("chunk3")};
    for (int iter = 0; iter < 1000; ++iter) {
        auto pair = random_word_pair(rng, 900000 + iter);
        for (const auto& tok : tokenizers) {
            auto ex = project_to_tokens(pair, *tok);
            std::vector<LabelId> unmasked;
            for (std::size_t t = 0; t < ex.token_ids.size(); ++t)
                if (!ex.loss_mask[t]) unmasked.push_back(ex.token_labels[t]);
            require(unmasked == pair.labels,
                    "alignment round-trip broke under tokenizer " + tok->name());
        }
    }
    return "remap/DIP/alignment property suites: 1000 cases each, zero failures";
}

// ------------------------------------------------- synthetic e-SNLI corpus

// The real e-SNLI corpus is not downloadable in this environment, so desk-
// scale training uses a generated corpus in the published CSV schema. Each
// label owns a small lexicon; highlighted hypothesis words come from the
// instance label's lexicon, and entailment highlights are also copied into
// the premise so a copy-detection feature is learnable.
std::string synthetic_esnli_csv(std::size_t n_rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto lex = [](const char* prefix, int k) { return std::string(prefix) + std::to_string(k); };
    std::ostringstream out;
    out << "pairID,gold_label,Sentence1,Sentence2,Sentence2_Highlighted_1\n";
    const char* names[] = {"entailment", "contradiction", "neutral"};
    const char* prefixes[] = {"ent", "con", "neu"};
    for (std::size_t row = 0; row < n_rows; ++row) {
        int label = int(rng() % 3);
        std::vector<std::string> premise, hypothesis;
        std::size_t np = 5 + rng() % 4;
        for (std::size_t i = 0; i < np; ++i) premise.push_back(lex("fill", int(rng() % 200)));

        std::size_t n_marked = 1 + rng() % 3, n_plain = 2 + rng() % 3;
        std::vector<std::size_t> highlights;
        for (std::size_t i = 0; i < n_marked + n_plain; ++i) {
            if (i < n_marked) {
                std::string w = lex(prefixes[label], int(rng() % 40));
                if (label == 0) premise[rng() % premise.size()] = w;  // copy signal
                highlights.push_back(hypothesis.size());
                hypothesis.push_back(w);
            } else {
                hypothesis.push_back(lex("fill", int(rng() % 200)));
            }
        }
        auto join = [](const std::vector<std::string>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
            return s;
        };
        std::string hl;
        for (std::size_t i = 0; i < highlights.size(); ++i)
            hl += (i ? "," : "") + std::to_string(highlights[i]);
        if (hl.empty()) hl = "{}";
        out << "syn" << row << "," << names[label] << "," << join(premise) << ","
            << join(hypothesis) << ",\"" << hl << "\"\n";
    }
    return out.str();
}

std::vector<WordLabeledPair> synthetic_pairs(std::size_t n_rows, std::uint64_t seed,
                                             LabelSetting setting) {
    std::istringstream csv(synthetic_esnli_csv(n_rows, seed));
    auto ingested = ingest_esnli(csv);
    PrepOptions opt;
    opt.setting = setting;
    return prepare_pairs(ingested.instances, opt);
}

MarkingModel desk_model(LabelSetting setting, const std::vector<WordLabeledPair>& corpus,
                        TrainLog* log_out = nullptr) {
    MarkingModel model = build_classifier("tiny", setting, 42, "word");
    TrainConfig cfg;
    cfg.encoder = "tiny";
    cfg.tokenizer = "word";
    cfg.learning_rate = 2e-3;
    cfg.epochs = 1;
    cfg.batch_size = 16;
    cfg.seed = 42;
    cfg.setting = setting;
    TrainLog log = train(model, corpus, cfg);
    if (log_out) *log_out = log;
    return model;
}

double hypothesis_accuracy(const MarkingModel& model, const std::vector<WordLabeledPair>& held_out,
                           LabelSetting setting) {
    std::size_t correct = 0, total = 0;
    for (const auto& pair : held_out) {
        auto probs = predict_word_probs(model, pair.premise_words, pair.hypothesis_words);
        std::size_t hyp_base = pair.separator_pos() + 1;
        for (std::size_t i = 0; i < pair.hypothesis_words.size(); ++i) {
            LabelId pred = argmax_label(remap_probs(probs.hypothesis[i], setting));
            ++total;
            if (pred == pair.labels[hyp_base + i]) ++correct;
        }
    }
    return total ? double(correct) / double(total) : 0.0;
}

// ---------------------------------------------------------------- criterion 5

std::string criterion5() {
    auto train_pairs = synthetic_pairs(5000, 51, LabelSetting::generic);
    auto held_out = synthetic_pairs(500, 52, LabelSetting::generic);

    auto model = desk_model(LabelSetting::generic, train_pairs);
    double acc = hypothesis_accuracy(model, held_out, LabelSetting::generic);

    std::size_t none_words = 0, total_words = 0;
    for (const auto& pair : held_out) {
        std::size_t hyp_base = pair.separator_pos() + 1;
        for (std::size_t i = 0; i < pair.hypothesis_words.size(); ++i) {
            ++total_words;
            if (pair.labels[hyp_base + i] == kNone) ++none_words;
        }
    }
    double baseline = double(none_words) / double(total_words);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "held-out word accuracy %.3f > all-label-3 baseline %.3f after 1 epoch on a "
                  "5000-instance sample",
                  acc, baseline);
    require(acc > baseline, std::string("model did not beat the majority baseline: ") + buf);

    // tiny-overfit smoke test
    std::vector<WordLabeledPair> tiny(train_pairs.begin(), train_pairs.begin() + 8);
    MarkingModel small = build_classifier("tiny", LabelSetting::generic, 1, "word");
    TrainConfig cfg;
    cfg.tokenizer = "word";
    cfg.learning_rate = 3e-3;
    cfg.epochs = 150;
    cfg.batch_size = 8;
    cfg.seed = 7;
    auto log = train(small, tiny, cfg);
    require(!log.step_losses.empty() && log.step_losses.back() < 0.05,
            "tiny-overfit loss " + std::to_string(log.step_losses.back()) + " >= 0.05");

    return std::string(buf) + "; tiny-overfit final loss " +
           std::to_string(log.step_losses.back()) + " < 0.05";
}

// ---------------------------------------------------------------- criterion 6

std::string criterion6() {
    auto records = load_dataset(kFixture);

    auto generic_corpus = synthetic_pairs(5000, 51, LabelSetting::generic);
    auto err_corpus = synthetic_pairs(5000, 51, LabelSetting::error_focused);

    auto generic_model = desk_model(LabelSetting::generic, generic_corpus);
    auto err_model = desk_model(LabelSetting::error_focused, err_corpus);

    auto generic_report = evaluate_dataset(generic_model, records, LabelSetting::generic);
    auto err_report = evaluate_dataset(err_model, records, LabelSetting::error_focused);

    double f1_generic = generic_report.overall.weighted_f1;
    double f1_err = err_report.overall.weighted_f1;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "directional check: error-focused F1 %.3f > generic F1 %.3f on the fixture "
                  "(ordering only; published numbers need full-scale runs)",
                  f1_err, f1_generic);
    require(f1_err > f1_generic, std::string("ordering violated: ") + buf);
    return buf;
}

// ---------------------------------------------------------------- criterion 7

std::string criterion7() {
    auto corpus = synthetic_pairs(400, 71, LabelSetting::generic);
    auto records = load_dataset(kFixture);

    auto run_once = [&](std::string* hash, std::ostringstream* metrics) {
        MarkingModel model = build_classifier("tiny", LabelSetting::generic, 42, "word");
        TrainConfig cfg;
        cfg.tokenizer = "word";
        cfg.learning_rate = 2e-3;
        cfg.epochs = 2;
        cfg.batch_size = 16;
        cfg.seed = 42;
        auto log = train(model, corpus, cfg);
        *hash = log.hash();
        auto report = evaluate_dataset(model, records, LabelSetting::generic);
        (*metrics) << std::setprecision(17) << report.overall.weighted_precision << "|"
                   << report.overall.weighted_recall << "|" << report.overall.weighted_f1 << "|"
                   << report.overall.accuracy;
        for (const auto& [a, block] : report.per_annotator)
            (*metrics) << "|" << a << ":" << block.weighted_f1 << ":" << block.accuracy;
    };

    std::string hash_a, hash_b;
    std::ostringstream metrics_a, metrics_b;
    run_once(&hash_a, &metrics_a);
    run_once(&hash_b, &metrics_b);
    require(hash_a == hash_b, "training-log hashes differ: " + hash_a + " vs " + hash_b);
    require(metrics_a.str() == metrics_b.str(), "evaluation reports differ between identical runs");
    return "two identical train+eval runs: log hash " + hash_a + " and evaluation reports match "
           "bit for bit";
}

}  // namespace

int main() {
    run(1, criterion1);
    run(2, criterion2);
    run(3, criterion3);
    run(4, criterion4);
    run(5, criterion5);
    run(6, criterion6);
    run(7, criterion7);
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 7 criteria passed\n");
    return 0;
}
