#pragma once

// Human-readable marking reports (ansi / standalone html) and the
// config-driven experiment grid that mirrors the result-table layout
// (Precision, Recall, F1, Accuracy per encoder x setting x preprocessing).

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marking/dataset.hpp"
#include "marking/eval.hpp"
#include "marking/model.hpp"
#include "marking/pipeline.hpp"

namespace marking {

enum class ReportFormat { ansi, html };

inline std::string render_marking_report(const MarkingResult& result, const std::string& gold,
                                         const std::string& response, ReportFormat format) {
    SpanAnnotation hyp;
    hyp.plain_text = response;
    detail::segment_words(hyp);
    hyp.spans = result.hypothesis_spans;

    SpanAnnotation prem;
    prem.plain_text = gold;
    detail::segment_words(prem);
    prem.spans = result.omission_spans;

    if (format == ReportFormat::ansi) {
        std::ostringstream out;
        out << "Gold answer:\n  " << render_marked(prem, RenderStyle::ansi) << "\n";
        out << "Student response:\n  " << render_marked(hyp, RenderStyle::ansi) << "\n";
        out << "Setting: " << label_setting_name(result.setting) << "\n";
        return out.str();
    }

    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n"
        << "<title>Marking report</title>\n"
        << "<style>body{font-family:sans-serif;max-width:50em;margin:2em auto;}"
        << "h2{font-size:1em;} .legend span{margin-right:1em;}</style>\n</head><body>\n"
        << "<h1>Marking report</h1>\n"
        << "<p class=\"legend\"><span style=\"color:#1a7f37\">correct</span>"
        << "<span style=\"color:#cf222e\">incorrect</span>"
        << "<span style=\"color:#bf8700\">irrelevant</span>"
        << "<span style=\"color:#0969da\">omission</span></p>\n"
        << "<h2>Gold answer</h2>\n<p>" << render_marked(prem, RenderStyle::html) << "</p>\n"
        << "<h2>Student response</h2>\n<p>" << render_marked(hyp, RenderStyle::html) << "</p>\n"
        << "<p>Setting: " << label_setting_name(result.setting) << "</p>\n"
        << "</body></html>\n";
    return out.str();
}

struct ExperimentSpec {
    std::string encoder = "tiny";
    LabelSetting setting = LabelSetting::generic;
    bool dip = false;
    bool rm_stopwords = false;
    std::uint64_t seed = 42;
    std::vector<std::string> esnli_paths;
    std::string eval_path;  // BioMarking JSONL
    std::string out_dir = "runs";
    TrainConfig train;  // epochs / lr / batch knobs; encoder+setting come from above

    std::string key() const {
        std::ostringstream k;
        k << encoder << "|" << label_setting_name(setting) << "|dip=" << dip
          << "|stop=" << rm_stopwords << "|seed=" << seed;
        return k.str();
    }
};

struct ExperimentResult {
    ExperimentSpec spec;
    bool ok = false;
    bool duplicate = false;
    std::string error;
    EvaluationReport report;
    std::string report_file;
    std::string train_log_hash;
};

namespace detail {

inline std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

inline nlohmann::json environment_fingerprint() {
    nlohmann::json env;
#if defined(__VERSION__)
    env["compiler"] = __VERSION__;
#endif
    env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                   "." + std::to_string(EIGEN_MINOR_VERSION);
    env["label_space"] = label_space_fingerprint();
    return env;
}

inline nlohmann::json metrics_to_json(const MetricsBlock& block) {
    nlohmann::json j;
    j["precision"] = block.weighted_precision;
    j["recall"] = block.weighted_recall;
    j["f1"] = block.weighted_f1;
    j["accuracy"] = block.accuracy;
    j["per_category"] = nlohmann::json::object();
    for (const auto& [cat, m] : block.per_category) {
        nlohmann::json jc;
        jc["precision"] = m.precision;
        jc["recall"] = m.recall;
        jc["f1"] = m.f1;
        jc["support"] = m.support;
        j["per_category"][std::to_string(int(cat))] = jc;
    }
    return j;
}

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["encoder"] = spec.encoder;
    j["setting"] = label_setting_name(spec.setting);
    j["dip"] = spec.dip;
    j["rm_stopwords"] = spec.rm_stopwords;
    j["seed"] = spec.seed;
    j["esnli_paths"] = spec.esnli_paths;
    j["eval_path"] = spec.eval_path;
    j["epochs"] = spec.train.epochs;
    j["learning_rate"] = spec.train.learning_rate;
    j["batch_size"] = spec.train.batch_size;
    return j;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream& log) {
    ExperimentResult result;
    result.spec = spec;
    std::string started = detail::iso_timestamp();

    PrepOptions prep;
    prep.dip = spec.dip;
    prep.rm_stopwords = spec.rm_stopwords;
    prep.seed = spec.seed;
    prep.setting = spec.setting;
    auto pairs = prepare_esnli(spec.esnli_paths, prep);
    log << "[" << spec.key() << "] " << pairs.size() << " training pairs\n";

    TrainConfig cfg = spec.train;
    cfg.encoder = spec.encoder;
    cfg.seed = spec.seed;
    cfg.setting = spec.setting;
    cfg.dip = spec.dip;
    cfg.rm_stopwords = spec.rm_stopwords;

    MarkingModel model = build_classifier(cfg.encoder, cfg.setting, cfg.seed, cfg.tokenizer);
    TrainLog train_log = train(model, pairs, cfg);
    result.train_log_hash = train_log.hash();
    log << "[" << spec.key() << "] trained, " << train_log.step_losses.size()
        << " steps, log hash " << result.train_log_hash << "\n";

    auto records = load_dataset(spec.eval_path);
    result.report = evaluate_dataset(model, records, spec.setting, spec.rm_stopwords);

    std::filesystem::create_directories(spec.out_dir);
    nlohmann::json j;
    j["spec"] = detail::spec_to_json(spec);
    j["metrics"] = detail::metrics_to_json(result.report.overall);
    j["train_log_hash"] = result.train_log_hash;
    j["environment"] = detail::environment_fingerprint();
    j["started"] = started;
    j["finished"] = detail::iso_timestamp();

    std::string safe_key = spec.key();
    for (char& c : safe_key)
        if (c == '|' || c == '=') c = '_';
    result.report_file = (std::filesystem::path(spec.out_dir) / (safe_key + ".json")).string();
    std::ofstream out(result.report_file);
    out << j.dump(2) << "\n";
    result.ok = true;
    return result;
}

// Runs every spec, deduplicating repeats and isolating per-spec failures.
inline std::vector<ExperimentResult> run_experiment_grid(const std::vector<ExperimentSpec>& specs,
                                                         std::ostream& log) {
    std::vector<ExperimentResult> results;
    std::set<std::string> seen;
    for (const auto& spec : specs) {
        if (!seen.insert(spec.key()).second) {
            log << "warning: duplicate spec " << spec.key() << " skipped\n";
            ExperimentResult dup;
            dup.spec = spec;
            dup.duplicate = true;
            results.push_back(std::move(dup));
            continue;
        }
        try {
            results.push_back(run_experiment(spec, log));
        } catch (const std::exception& e) {
            ExperimentResult failed;
            failed.spec = spec;
            failed.error = e.what();
            log << "error: spec " << spec.key() << " failed: " << e.what() << "\n";
            results.push_back(std::move(failed));
        }
    }
    return results;
}

// Collated table mirroring the published results layout.
inline std::string collate_grid_table(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    out << std::left << std::setw(16) << "Model" << std::setw(12) << "Setting" << std::setw(10)
        << "Stopwords" << std::setw(7) << "Pairs" << std::right << std::setw(11) << "Precision"
        << std::setw(9) << "Recall" << std::setw(8) << "F1" << std::setw(10) << "Accuracy" << "\n";
    for (const auto& r : results) {
        if (r.duplicate) continue;
        out << std::left << std::setw(16) << r.spec.encoder << std::setw(12)
            << label_setting_name(r.spec.setting) << std::setw(10) << (r.spec.rm_stopwords ? "Yes" : "No")
            << std::setw(7) << (r.spec.dip ? "Yes" : "No");
        if (r.ok) {
            out << std::right << std::fixed << std::setprecision(3) << std::setw(11)
                << r.report.overall.weighted_precision << std::setw(9) << r.report.overall.weighted_recall
                << std::setw(8) << r.report.overall.weighted_f1 << std::setw(10)
                << r.report.overall.accuracy;
        } else {
            out << "  FAILED: " << r.error;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace marking
