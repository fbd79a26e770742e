// End-to-end smoke test of the `mark` binary: every subcommand once, plus
// exit-code and determinism checks. Prints one line per step.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
fs::path g_dir;

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    static int counter = 0;
    fs::path out_file = g_dir / ("out" + std::to_string(counter++) + ".txt");
    std::string cmd = std::string(MARK_BINARY) + " " + args + " >" +
                      shell_quote(out_file.string()) + " 2>&1";
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

void check(bool ok, const std::string& what, const std::string& detail = "") {
    std::printf("%s %s\n", ok ? "ok  " : "FAIL", what.c_str());
    if (!ok) {
        if (!detail.empty()) std::printf("     %s\n", detail.c_str());
        ++g_failures;
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string extract_hash(const std::string& output) {
    auto pos = output.find("training-log hash: ");
    if (pos == std::string::npos) return "";
    auto start = pos + std::string("training-log hash: ").size();
    auto end = output.find('\n', start);
    return output.substr(start, end - start);
}

}  // namespace

int main() {
    g_dir = fs::temp_directory_path() / "marking_cli_smoke";
    fs::remove_all(g_dir);
    fs::create_directories(g_dir);

    const std::string fixture = std::string(MARKING_DATA_DIR) + "/biomarking_fixture.jsonl";
    const std::string esnli = std::string(MARKING_DATA_DIR) + "/esnli_sample.csv";

    // data validate / stats
    auto v = run("data validate " + shell_quote(fixture));
    check(v.exit_code == 0 && v.output.find("OK: 2 questions, 5 responses") != std::string::npos,
          "data validate accepts the fixture", v.output);

    write_file(g_dir / "bad.jsonl", "{\"question_id\": \"q\"}\n");
    auto bad = run("data validate " + shell_quote((g_dir / "bad.jsonl").string()));
    check(bad.exit_code == 2, "data validate rejects a malformed file with exit 2",
          "exit=" + std::to_string(bad.exit_code));

    auto st = run("data stats " + shell_quote(fixture));
    check(st.exit_code == 0 && st.output.find("questions:") != std::string::npos &&
              st.output.find("grade 0 fraction:") != std::string::npos,
          "data stats prints the summary", st.output);

    // data import from raw markup
    fs::create_directories(g_dir / "raw");
    write_file(g_dir / "raw" / "q1.txt",
               "rawq1\n"
               "What is fiber?\n"
               "Fiber is a carbohydrate.\n"
               "r1\tsme1\t0.5\n"
               "<Fiber is good> for digestion\n"
               "Fiber is {a carbohydrate}.\n"
               "\n");
    auto imp = run("data import --raw " + shell_quote((g_dir / "raw").string()) + " --out " +
                   shell_quote((g_dir / "imported.jsonl").string()));
    check(imp.exit_code == 0 && fs::exists(g_dir / "imported.jsonl"),
          "data import converts raw markup to JSONL", imp.output);
    auto rev = run("data validate " + shell_quote((g_dir / "imported.jsonl").string()));
    check(rev.exit_code == 0, "imported JSONL validates", rev.output);

    // prep
    auto prep = run("prep esnli --in " + shell_quote(esnli) + " --out " +
                    shell_quote((g_dir / "pairs.jsonl").string()) + " --dip --seed 7");
    check(prep.exit_code == 0 && prep.output.find("1 rows dropped") != std::string::npos,
          "prep esnli writes pairs and reports the dropped row", prep.output);

    // train (twice, determinism at the CLI level)
    write_file(g_dir / "train.cfg",
               "config_version = 1\n"
               "encoder = tiny\n"
               "tokenizer = word\n"
               "learning_rate = 0.002  # desk-scale\n"
               "epochs = 2\n"
               "batch_size = 4\n"
               "seed = 42\n"
               "setting = generic\n");
    std::string train_args = "train --config " + shell_quote((g_dir / "train.cfg").string()) +
                             " --pairs " + shell_quote((g_dir / "pairs.jsonl").string());
    auto t1 = run(train_args + " --out " + shell_quote((g_dir / "m1.ckpt").string()));
    auto t2 = run(train_args + " --out " + shell_quote((g_dir / "m2.ckpt").string()));
    check(t1.exit_code == 0 && fs::exists(g_dir / "m1.ckpt"), "train writes a checkpoint",
          t1.output);
    std::string h1 = extract_hash(t1.output), h2 = extract_hash(t2.output);
    check(!h1.empty() && h1 == h2, "identical config+seed reproduces the training-log hash",
          h1 + " vs " + h2);

    auto t3 = run(train_args + " --seed 43 --out " + shell_quote((g_dir / "m3.ckpt").string()));
    check(t3.exit_code == 0 && extract_hash(t3.output) != h1,
          "a different seed changes the training-log hash", t3.output);

    // empty corpus fails with exit 3
    write_file(g_dir / "empty.jsonl", "");
    auto te = run("train --config " + shell_quote((g_dir / "train.cfg").string()) + " --pairs " +
                  shell_quote((g_dir / "empty.jsonl").string()) + " --out " +
                  shell_quote((g_dir / "none.ckpt").string()));
    check(te.exit_code == 3, "training on an empty corpus exits 3",
          "exit=" + std::to_string(te.exit_code));

    // eval
    auto ev = run("eval --model " + shell_quote((g_dir / "m1.ckpt").string()) + " --data " +
                  shell_quote(fixture) + " --setting err-focus --out " +
                  shell_quote((g_dir / "report.json").string()));
    check(ev.exit_code == 0 && ev.output.find("overall") != std::string::npos &&
              fs::exists(g_dir / "report.json"),
          "eval prints the metrics table and writes the report file", ev.output);

    auto evo = run("eval --model " + shell_quote((g_dir / "m1.ckpt").string()) + " --data " +
                   shell_quote(fixture) + " --setting generic --omission");
    check(evo.exit_code == 0 && evo.output.find("omission") != std::string::npos,
          "eval --omission adds the omission block under generic", evo.output);

    // infer
    write_file(g_dir / "gold.txt", "Fiber is a carbohydrate that aids digestion\n");
    write_file(g_dir / "resp.txt", "Fiber helps you digest food\n");
    auto inf = run("infer --model " + shell_quote((g_dir / "m1.ckpt").string()) + " --gold " +
                   shell_quote((g_dir / "gold.txt").string()) + " --response " +
                   shell_quote((g_dir / "resp.txt").string()) + " --format html");
    check(inf.exit_code == 0 && inf.output.find("<!DOCTYPE html>") != std::string::npos,
          "infer renders an html marking report", inf.output);

    auto infa = run("infer --model " + shell_quote((g_dir / "m1.ckpt").string()) + " --gold " +
                    shell_quote((g_dir / "gold.txt").string()) + " --response " +
                    shell_quote((g_dir / "resp.txt").string()) + " --setting err-focus");
    check(infa.exit_code == 0 && infa.output.find("Student response:") != std::string::npos,
          "infer renders an ansi marking report", infa.output);

    // report grid
    write_file(g_dir / "grid.json",
               std::string("{\n") + "  \"esnli\": [\"" + esnli + "\"],\n" + "  \"eval\": \"" +
                   fixture + "\",\n" + "  \"out_dir\": \"" + (g_dir / "runs").string() + "\",\n" +
                   "  \"train\": {\"epochs\": 1, \"learning_rate\": 0.002, \"batch_size\": 4, "
                   "\"tokenizer\": \"word\"},\n" +
                   "  \"specs\": [{\"encoder\": \"tiny\", \"setting\": \"generic\"},\n" +
                   "             {\"encoder\": \"tiny\", \"setting\": \"err-focus\", \"dip\": true}]\n" +
                   "}\n");
    auto grid = run("report --config " + shell_quote((g_dir / "grid.json").string()));
    check(grid.exit_code == 0 && grid.output.find("Model") != std::string::npos &&
              grid.output.find("err-focus") != std::string::npos,
          "report runs the grid and collates the table", grid.output);
    check(fs::exists(g_dir / "runs") && !fs::is_empty(g_dir / "runs"),
          "report writes per-run JSON files");

    if (g_failures == 0) fs::remove_all(g_dir);
    if (g_failures) {
        std::printf("%d step(s) failed (artifacts kept in %s)\n", g_failures, g_dir.c_str());
        return 1;
    }
    std::printf("all cli smoke steps passed\n");
    return 0;
}
