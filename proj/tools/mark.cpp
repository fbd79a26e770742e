// The `mark` command line: dataset validation/statistics/import, e-SNLI
// preparation, training, evaluation, inference, and the experiment grid.
// Exit codes: 0 success, 2 validation error, 3 training failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marking/marking.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitTraining = 3;

int exit_code_for(const marking::Error& e) {
    switch (e.code()) {
        case marking::Errc::non_finite_loss:
        case marking::Errc::empty_corpus:
            return kExitTraining;
        default:
            return kExitValidation;
    }
}

// flat key=value config files; '#' starts a comment
std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw marking::Error(marking::Errc::io_error, "cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            auto end = s.find_last_not_of(" \t\r");
            s.erase(end == std::string::npos ? 0 : end + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

marking::TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv) {
    marking::TrainConfig cfg;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto v = get("config_version"); v && *v != "1")
        throw marking::Error(marking::Errc::schema_error, "unsupported config_version " + *v);
    if (auto v = get("encoder")) cfg.encoder = *v;
    if (auto v = get("tokenizer")) cfg.tokenizer = *v;
    if (auto v = get("learning_rate")) cfg.learning_rate = std::stod(*v);
    if (auto v = get("weight_decay")) cfg.weight_decay = std::stod(*v);
    if (auto v = get("warmup_ratio")) cfg.warmup_ratio = std::stod(*v);
    if (auto v = get("optimizer")) cfg.optimizer = *v;
    if (auto v = get("epochs")) cfg.epochs = std::stoi(*v);
    if (auto v = get("batch_size")) cfg.batch_size = std::stoi(*v);
    if (auto v = get("seed")) cfg.seed = std::stoull(*v);
    if (auto v = get("setting")) cfg.setting = marking::parse_label_setting(*v);
    if (auto v = get("dip")) cfg.dip = (*v == "1" || *v == "true" || *v == "yes");
    if (auto v = get("rm_stopwords")) cfg.rm_stopwords = (*v == "1" || *v == "true" || *v == "yes");
    if (auto v = get("max_len")) cfg.max_len = std::stoul(*v);
    return cfg;
}

void print_stats(const marking::DatasetStats& st) {
    std::cout << "questions:                " << st.n_questions << "\n"
              << "responses:                " << st.n_responses << "\n"
              << "responses/question mean:  " << st.responses_per_question_mean << "\n"
              << "responses/question sd:    " << st.responses_per_question_sd << "\n"
              << "grade 0 fraction:         " << st.grade_fraction_0 << "\n"
              << "grade 0.5 fraction:       " << st.grade_fraction_half << "\n"
              << "grade 1 fraction:         " << st.grade_fraction_1 << "\n"
              << "mean gold-answer words:   " << st.mean_gold_words << "\n"
              << "mean response words:      " << st.mean_response_words << "\n";
}

void print_report(const marking::EvaluationReport& report) {
    auto line = [](const std::string& name, const marking::MetricsBlock& b) {
        std::printf("%-12s  P %.3f  R %.3f  F1 %.3f  Acc %.3f\n", name.c_str(),
                    b.weighted_precision, b.weighted_recall, b.weighted_f1, b.accuracy);
    };
    std::printf("%-12s  %-7s  %-7s  %-7s  %s\n", "", "Precision", "Recall", "F1", "Accuracy");
    line("overall", report.overall);
    for (const auto& [annotator, block] : report.per_annotator) line("  " + annotator, block);
    for (const auto& [cat, m] : report.overall.per_category)
        std::printf("  label %d     P %.3f  R %.3f  F1 %.3f  support %zu\n", int(cat), m.precision,
                    m.recall, m.f1, m.support);
    if (report.has_omission) line("omission", report.omission);
}

nlohmann::json report_to_json(const marking::EvaluationReport& report) {
    nlohmann::json j;
    j["setting"] = marking::label_setting_name(report.setting);
    j["rm_stopwords"] = report.rm_stopwords;
    j["overall"] = marking::detail::metrics_to_json(report.overall);
    j["per_annotator"] = nlohmann::json::object();
    for (const auto& [annotator, block] : report.per_annotator)
        j["per_annotator"][annotator] = marking::detail::metrics_to_json(block);
    if (report.has_omission) j["omission"] = marking::detail::metrics_to_json(report.omission);
    return j;
}

std::vector<marking::ExperimentSpec> full_scale_grid(const nlohmann::json& base,
                                                     const marking::ExperimentSpec& proto) {
    (void)base;
    std::vector<marking::ExperimentSpec> specs;
    using marking::LabelSetting;
    const LabelSetting settings[] = {LabelSetting::generic, LabelSetting::contradiction_focused,
                                     LabelSetting::error_focused};
    // preprocessing sweep on the large model
    for (LabelSetting s : settings) {
        for (bool stop : {true, false}) {
            for (bool dip : {true, false}) {
                marking::ExperimentSpec spec = proto;
                spec.encoder = "roberta-large";
                spec.setting = s;
                spec.rm_stopwords = stop;
                spec.dip = dip;
                spec.train.epochs = 3;
                specs.push_back(spec);
            }
        }
    }
    // model sweep with the best preprocessing
    for (const char* enc : {"roberta-base", "bert-large", "bert-base"}) {
        for (LabelSetting s : settings) {
            marking::ExperimentSpec spec = proto;
            spec.encoder = enc;
            spec.setting = s;
            spec.rm_stopwords = true;
            spec.dip = true;
            spec.train.epochs = 3;
            specs.push_back(spec);
        }
    }
    return specs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Token-level marking of student responses against gold answers"};
    app.require_subcommand(1);

    // ---- data ----
    auto* data = app.add_subcommand("data", "dataset utilities");
    data->require_subcommand(1);

    std::string data_path, raw_dir, import_out;
    auto* validate = data->add_subcommand("validate", "validate a JSONL dataset");
    validate->add_option("path", data_path)->required();
    auto* stats = data->add_subcommand("stats", "print dataset statistics");
    stats->add_option("path", data_path)->required();
    auto* import = data->add_subcommand("import", "import raw markup files");
    import->add_option("--raw", raw_dir, "directory of raw markup .txt files")->required();
    import->add_option("--out", import_out, "output JSONL path")->required();

    // ---- prep ----
    auto* prep = app.add_subcommand("prep", "prepare training data");
    auto* prep_esnli = prep->add_subcommand("esnli", "convert e-SNLI CSVs to labeled word pairs");
    std::vector<std::string> prep_in;
    std::string prep_out, prep_setting = "generic";
    marking::PrepOptions prep_opt;
    prep_esnli->add_option("--in", prep_in, "e-SNLI CSV file(s)")->required();
    prep_esnli->add_option("--out", prep_out, "output JSONL path")->required();
    prep_esnli->add_flag("--dip", prep_opt.dip, "apply Dual Instance Pairing");
    prep_esnli->add_flag("--rm-stopwords", prep_opt.rm_stopwords, "remove stopwords");
    prep_esnli->add_flag("--premise-highlights", prep_opt.premise_highlights,
                         "label highlighted premise words too");
    prep_esnli->add_flag("--union-annotators", prep_opt.union_annotators,
                         "merge all annotators' highlights");
    prep_esnli->add_option("--seed", prep_opt.seed, "shuffle seed for pairing");
    prep_esnli->add_option("--setting", prep_setting, "label setting (generic|con-focus|err-focus)");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a marking model");
    std::string train_config_path, train_pairs, train_ckpt = "model.ckpt";
    std::vector<std::string> train_esnli;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train_cmd->add_option("--config", train_config_path, "flat key=value config file")->required();
    train_cmd->add_option("--pairs", train_pairs, "prepared pairs JSONL (overrides config)");
    train_cmd->add_option("--esnli", train_esnli, "raw e-SNLI CSV(s) (overrides config)");
    train_cmd->add_option("--out", train_ckpt, "checkpoint output path");
    train_cmd->add_option("--seed", train_seed, "override the config seed")
        ->each([&](const std::string&) { train_seed_set = true; });

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a marking dataset");
    std::string eval_ckpt, eval_data, eval_setting = "generic", eval_out;
    bool eval_stop = false, eval_omission = false;
    eval_cmd->add_option("--model", eval_ckpt)->required();
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--setting", eval_setting);
    eval_cmd->add_flag("--rm-stopwords", eval_stop);
    eval_cmd->add_flag("--omission", eval_omission, "also score premise-side omissions");
    eval_cmd->add_option("--out", eval_out, "machine-readable report file");

    // ---- infer ----
    auto* infer = app.add_subcommand("infer", "mark one response against one gold answer");
    std::string infer_ckpt, infer_gold, infer_response, infer_setting = "generic",
                infer_format = "ansi";
    infer->add_option("--model", infer_ckpt)->required();
    infer->add_option("--gold", infer_gold, "file with the gold answer")->required();
    infer->add_option("--response", infer_response, "file with the student response")->required();
    infer->add_option("--setting", infer_setting);
    infer->add_option("--format", infer_format, "ansi|html");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "run an experiment grid and collate results");
    std::string grid_config;
    bool full_scale = false;
    report_cmd->add_option("--config", grid_config, "grid config JSON")->required();
    report_cmd->add_flag("--full-scale", full_scale,
                         "run the full published grid (large encoders, 3 epochs)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            auto records = marking::load_dataset(data_path);
            std::size_t responses = 0;
            for (const auto& r : records) responses += r.responses.size();
            std::cout << "OK: " << records.size() << " questions, " << responses << " responses\n";
            return kExitOk;
        }
        if (*stats) {
            print_stats(marking::dataset_stats(marking::load_dataset(data_path)));
            return kExitOk;
        }
        if (*import) {
            auto records = marking::load_dataset(raw_dir, marking::DatasetFormat::raw_markup);
            std::ofstream out(import_out);
            if (!out) throw marking::Error(marking::Errc::io_error, "cannot write " + import_out);
            marking::save_dataset_jsonl(records, out);
            std::cout << "imported " << records.size() << " questions to " << import_out << "\n";
            return kExitOk;
        }
        if (*prep_esnli) {
            prep_opt.setting = marking::parse_label_setting(prep_setting);
            marking::PrepStats pstats;
            auto pairs = marking::prepare_esnli(prep_in, prep_opt, &pstats);
            std::ofstream out(prep_out);
            if (!out) throw marking::Error(marking::Errc::io_error, "cannot write " + prep_out);
            marking::save_pairs_jsonl(pairs, out);
            std::cout << "wrote " << pairs.size() << " pairs (" << pstats.rows_dropped
                      << " rows dropped, " << pstats.emptied_by_stopwords
                      << " emptied by stopword removal)\n";
            return kExitOk;
        }
        if (*train_cmd) {
            auto kv = read_kv_config(train_config_path);
            marking::TrainConfig cfg = train_config_from_kv(kv);
            if (train_seed_set) cfg.seed = train_seed;

            std::vector<marking::WordLabeledPair> pairs;
            if (!train_pairs.empty() || kv.count("pairs")) {
                pairs = marking::load_pairs_jsonl_file(!train_pairs.empty() ? train_pairs
                                                                            : kv.at("pairs"));
                // pairs files are stored pre-remap when produced with
                // --setting generic; remap defensively (idempotent).
                for (auto& p : pairs) p.labels = marking::remap_labels(p.labels, cfg.setting);
            } else {
                std::vector<std::string> csvs = train_esnli;
                if (csvs.empty() && kv.count("esnli")) {
                    std::stringstream ss(kv.at("esnli"));
                    std::string item;
                    while (std::getline(ss, item, ',')) csvs.push_back(item);
                }
                if (csvs.empty())
                    throw marking::Error(marking::Errc::schema_error,
                                         "config must provide 'pairs' or 'esnli' inputs");
                marking::PrepOptions opt;
                opt.dip = cfg.dip;
                opt.rm_stopwords = cfg.rm_stopwords;
                opt.seed = cfg.seed;
                opt.setting = cfg.setting;
                pairs = marking::prepare_esnli(csvs, opt);
            }

            marking::MarkingModel model =
                marking::build_classifier(cfg.encoder, cfg.setting, cfg.seed, cfg.tokenizer);
            marking::TrainLog log = marking::train(model, pairs, cfg);
            marking::save_checkpoint(model, train_ckpt);
            std::cout << "trained on " << pairs.size() << " pairs, " << log.step_losses.size()
                      << " steps";
            if (!log.step_losses.empty()) std::cout << ", final loss " << log.step_losses.back();
            std::cout << "\ntraining-log hash: " << log.hash() << "\ncheckpoint: " << train_ckpt
                      << " (seed " << cfg.seed << ")\n";
            return kExitOk;
        }
        if (*eval_cmd) {
            marking::MarkingModel model = marking::load_checkpoint(eval_ckpt);
            auto records = marking::load_dataset(eval_data);
            auto setting = marking::parse_label_setting(eval_setting);
            auto report = marking::evaluate_dataset(model, records, setting, eval_stop, eval_omission);
            print_report(report);
            if (!eval_out.empty()) {
                std::ofstream out(eval_out);
                out << report_to_json(report).dump(2) << "\n";
                std::cout << "report written to " << eval_out << "\n";
            }
            return kExitOk;
        }
        if (*infer) {
            auto slurp = [](const std::string& path) {
                std::ifstream in(path);
                if (!in) throw marking::Error(marking::Errc::io_error, "cannot open " + path);
                std::stringstream ss;
                ss << in.rdbuf();
                std::string s = ss.str();
                while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
                return s;
            };
            marking::MarkingModel model = marking::load_checkpoint(infer_ckpt);
            std::string gold = slurp(infer_gold), response = slurp(infer_response);
            auto setting = marking::parse_label_setting(infer_setting);
            auto result = marking::mark(model, gold, response, setting);
            auto format = infer_format == "html" ? marking::ReportFormat::html
                                                 : marking::ReportFormat::ansi;
            std::cout << marking::render_marking_report(result, gold, response, format);
            return kExitOk;
        }
        if (*report_cmd) {
            std::ifstream in(grid_config);
            if (!in)
                throw marking::Error(marking::Errc::io_error, "cannot open " + grid_config);
            nlohmann::json j = nlohmann::json::parse(in);

            marking::ExperimentSpec proto;
            proto.esnli_paths = j.at("esnli").get<std::vector<std::string>>();
            proto.eval_path = j.at("eval").get<std::string>();
            proto.out_dir = j.value("out_dir", "runs");
            proto.seed = j.value("seed", std::uint64_t(42));
            if (j.contains("train")) {
                const auto& t = j.at("train");
                proto.train.epochs = t.value("epochs", proto.train.epochs);
                proto.train.learning_rate = t.value("learning_rate", proto.train.learning_rate);
                proto.train.batch_size = t.value("batch_size", proto.train.batch_size);
                proto.train.tokenizer = t.value("tokenizer", proto.train.tokenizer);
            }

            std::vector<marking::ExperimentSpec> specs;
            if (full_scale) {
                specs = full_scale_grid(j, proto);
            } else {
                for (const auto& js : j.at("specs")) {
                    marking::ExperimentSpec spec = proto;
                    spec.encoder = js.value("encoder", "tiny");
                    spec.setting = marking::parse_label_setting(js.value("setting", "generic"));
                    spec.dip = js.value("dip", false);
                    spec.rm_stopwords = js.value("rm_stopwords", false);
                    spec.seed = js.value("seed", proto.seed);
                    specs.push_back(spec);
                }
            }
            auto results = marking::run_experiment_grid(specs, std::cerr);
            std::cout << marking::collate_grid_table(results);
            for (const auto& r : results)
                if (!r.ok && !r.duplicate) return kExitTraining;
            return kExitOk;
        }
    } catch (const marking::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
