#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gradsample/config.hpp"
#include "gradsample/csv.hpp"
#include "gradsample/experiments.hpp"
#include "gradsample/rng.hpp"
#include "gradsample/stats.hpp"

using namespace gradsample;

namespace {

std::string tmp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// File content with the named columns replaced by X. Comment lines pass
// through untouched; the header line defines column positions.
std::string mask_columns(const std::string& text,
                         const std::vector<std::string>& names) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    std::vector<std::size_t> targets;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') {
            out << line << "\n";
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!have_header) {
            have_header = true;
            for (std::size_t i = 0; i < cells.size(); ++i)
                for (const auto& n : names)
                    if (cells[i] == n) targets.push_back(i);
            out << line << "\n";
            continue;
        }
        for (std::size_t t : targets)
            if (t < cells.size()) cells[t] = "X";
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << "\n";
    }
    return out.str();
}

} // namespace

TEST_CASE("config parsing") {
    const std::string text =
        "top = 1\n"
        "[train]\n"
        "batch_size = 32   # trailing comment\n"
        "# full comment line\n"
        "learning_rate = 3e-2\n"
        "batch_size = 16\n"
        "[experiment]\n"
        "methods = uniform, is ,as\n"
        "seeds = 1,2,3\n"
        "flag = true\n";
    const KeyValueConfig cfg = KeyValueConfig::parse_text(text, "inline");
    CHECK(cfg.get_u64("top", 0) == 1);
    CHECK(cfg.get_u64("train.batch_size", 0) == 16);  // later assignment wins
    CHECK(cfg.get_double("train.learning_rate", 0.0) == 3e-2);
    const auto methods = cfg.get_list("experiment.methods");
    REQUIRE(methods.size() == 3);
    CHECK(methods[0] == "uniform");
    CHECK(methods[1] == "is");
    CHECK(methods[2] == "as");
    const auto seeds = cfg.get_u64_list("experiment.seeds");
    REQUIRE(seeds.size() == 3);
    CHECK(seeds[2] == 3);
    CHECK(cfg.get_bool("experiment.flag", false));
    CHECK(cfg.get_bool("experiment.missing", true));
    CHECK_FALSE(cfg.has("train.missing"));
    CHECK(cfg.get_string("train.missing", "dflt") == "dflt");
    CHECK_THROWS_AS(cfg.get_string("train.missing"), ParseError);
    CHECK_THROWS_AS(cfg.get_double("experiment.flag", 0.0), ParseError);

    CHECK_THROWS_AS(KeyValueConfig::parse_text("[broken\n", "x"), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse_text("no equals here\n", "x"), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse_text("= empty\n", "x"), ParseError);
    try {
        KeyValueConfig::parse_text("ok = 1\nbroken line\n", "myfile");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("myfile:2") != std::string::npos);
    }
}

TEST_CASE("doubles survive the csv format round trip") {
    Rng rng(25);
    for (int i = 0; i < 200; ++i) {
        double v;
        switch (i % 4) {
        case 0: v = rng.uniform_in(-1.0, 1.0); break;
        case 1: v = rng.uniform_in(-1e300, 1e300); break;
        case 2: v = rng.uniform_in(0.0, 1e-300); break;
        default: v = static_cast<double>(rng.next_u64()) * 1e-3; break;
        }
        const std::string s = format_f64(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_f64(0.1) == "0.10000000000000001");
    CHECK(format_f64(1.0) == "1");
}

TEST_CASE("correlation statistics") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y = {2.0, 4.0, 6.0, 8.0};
    CHECK(pearson(x, y).value == Catch::Approx(1.0).epsilon(1e-15));
    const std::vector<double> yn = {8.0, 6.0, 4.0, 2.0};
    CHECK(pearson(x, yn).value == Catch::Approx(-1.0).epsilon(1e-15));

    // Monotone but nonlinear: spearman sees a perfect rank ordering.
    const std::vector<double> ym = {1.0, 10.0, 100.0, 1000.0};
    CHECK(spearman(x, ym).value == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(pearson(x, ym).value < 1.0);

    const std::vector<double> c = {5.0, 5.0, 5.0, 5.0};
    const Correlation pc = pearson(x, c);
    CHECK(pc.degenerate);
    CHECK(pc.value == 0.0);

    const auto ranks = average_ranks(std::vector<double>{1.0, 1.0, 2.0});
    REQUIRE(ranks.size() == 3);
    CHECK(ranks[0] == 1.5);
    CHECK(ranks[1] == 1.5);
    CHECK(ranks[2] == 3.0);

    // Independent dense-rank reference on random data with ties.
    Rng rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> a(40), b(40);
        for (auto& v : a) v = std::floor(rng.uniform_in(0.0, 8.0));
        for (auto& v : b) v = rng.uniform_in(0.0, 1.0);
        const auto ra = average_ranks(a);
        for (std::size_t i = 0; i < a.size(); ++i) {
            // rank = (#strictly smaller) + (1 + #equal) / 2
            double smaller = 0.0, equal = 0.0;
            for (double v : a) {
                if (v < a[i]) ++smaller;
                if (v == a[i]) ++equal;
            }
            CHECK(ra[i] == Catch::Approx(smaller + 0.5 * (equal + 1.0)).epsilon(1e-12));
        }
        const Correlation s = spearman(a, b);
        CHECK(s.value >= -1.0);
        CHECK(s.value <= 1.0);
    }

    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(mean(std::vector<double>{1.0, 2.0, 6.0}) == 3.0);
    CHECK_THROWS_AS(pearson(std::vector<double>{1.0}, std::vector<double>{1.0}),
                    ContractViolation);
}

TEST_CASE("csv writer echoes the config") {
    const std::string dir = tmp_dir("gs_csv_test");
    const std::string path = dir + "/out.csv";
    KeyValueConfig cfg = KeyValueConfig::parse_text("[a]\nx = 1\n", "inline");
    CsvWriter w(path, cfg, "col1,col2");
    w.row("1,2");
    w.close();
    const std::string text = slurp(path);
    CHECK(text.find("# config\n") == 0);
    CHECK(text.find("# a.x=1\n") != std::string::npos);
    CHECK(text.find("# end config\ncol1,col2\n1,2\n") != std::string::npos);
}

TEST_CASE("method names resolve to sampling settings") {
    CHECK(method_from_name("uniform").mode == SamplingMode::uniform);
    CHECK(method_from_name("is").mode == SamplingMode::importance_sampling);
    CHECK(method_from_name("as").mode == SamplingMode::adaptive_sampling);
    CHECK(method_from_name("is").kind == ImportanceKind::loss_gradient_analytic);
    CHECK(method_from_name("loss_value_is").kind == ImportanceKind::loss_value);
    CHECK_THROWS_AS(method_from_name("magic"), ParseError);

    const KeyValueConfig cfg = KeyValueConfig::parse_text(
        "[train]\nmode = as\nimportance = loss_value\nbatch_size = 8\n", "inline");
    const TrainConfig tc = train_config_from(cfg);
    CHECK(tc.mode == SamplingMode::adaptive_sampling);
    CHECK(tc.importance_kind == ImportanceKind::loss_value);
    CHECK(tc.batch_size == 8);
    CHECK_THROWS_AS(
        train_config_from(KeyValueConfig::parse_text("[train]\nmode = bogus\n", "x")),
        ParseError);
}

TEST_CASE("compare harness produces reproducible files") {
    const std::string dir_a = tmp_dir("gs_cmp_a");
    const std::string dir_b = tmp_dir("gs_cmp_b");
    const std::string text =
        "[dataset]\n"
        "name = blobs\n"
        "blob_classes = 3\n"
        "blob_per_class = 30\n"
        "blob_test_per_class = 10\n"
        "blob_sigma = 0.8\n"
        "blob_seed = 5\n"
        "[model]\n"
        "layer_dims = 2,16,3\n"
        "activation = relu\n"
        "loss = cross_entropy\n"
        "[train]\n"
        "batch_size = 10\n"
        "learning_rate = 0.01\n"
        "epochs = 3\n"
        "optimizer = adam\n"
        "[experiment]\n"
        "methods = uniform,is,as\n"
        "seeds = 1,2\n"
        "error_threshold = 0.5\n";
    const KeyValueConfig cfg = KeyValueConfig::parse_text(text, "inline");

    const auto outcomes_a = run_compare(cfg, dir_a);
    CHECK(outcomes_a.size() == 6);
    for (const auto& oc : outcomes_a) {
        CHECK_FALSE(oc.history.aborted);
        CHECK(std::isfinite(oc.final_test_loss));
    }

    const std::vector<std::string> expect = {
        "summary.csv",          "summary_methods.csv", "uniform_seed1_steps.csv",
        "uniform_seed1_epochs.csv", "is_seed2_steps.csv",  "as_seed1_epochs.csv"};
    for (const auto& f : expect)
        CHECK(std::filesystem::exists(dir_a + "/" + f));

    run_compare(cfg, dir_b);
    const std::vector<std::string> timing_cols = {"cum_seconds", "time_to_threshold",
                                                  "mean_time_to_threshold"};
    for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
        const std::string name = entry.path().filename().string();
        const std::string a = mask_columns(slurp(dir_a + "/" + name), timing_cols);
        const std::string b = mask_columns(slurp(dir_b + "/" + name), timing_cols);
        INFO(name);
        CHECK(a == b);
    }
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("correlate harness ranks gradient-based importance above loss value") {
    const std::string dir = tmp_dir("gs_corr_test");
    const std::string text =
        "[dataset]\n"
        "name = blobs\n"
        "blob_classes = 3\n"
        "blob_per_class = 60\n"
        "blob_sigma = 0.8\n"
        "[model]\n"
        "layer_dims = 2,16,3\n"
        "[train]\n"
        "batch_size = 10\n"
        "learning_rate = 0.01\n"
        "[experiment]\n"
        "seeds = 1\n"
        "[correlate]\n"
        "samples = 120\n"
        "epochs = 2\n";
    const KeyValueConfig cfg = KeyValueConfig::parse_text(text, "inline");
    const auto rows = run_correlate(cfg, dir);
    REQUIRE(rows.size() == 3);
    double analytic = 0.0, value = 0.0;
    for (const auto& r : rows) {
        CHECK(r.samples == 120);
        CHECK_FALSE(r.spearman.degenerate);
        if (r.kind == "loss_gradient") analytic = r.spearman.value;
        if (r.kind == "loss_value") value = r.spearman.value;
    }
    CHECK(analytic > 0.5);
    CHECK(std::filesystem::exists(dir + "/correlation.csv"));
    (void)value;
    std::filesystem::remove_all(dir);
}

TEST_CASE("snapshot harness writes per-epoch memory dumps") {
    const std::string dir = tmp_dir("gs_snap_test");
    const std::string text =
        "[dataset]\n"
        "name = blobs\n"
        "blob_per_class = 20\n"
        "blob_test_per_class = 5\n"
        "[model]\n"
        "layer_dims = 2,8,3\n"
        "[train]\n"
        "batch_size = 10\n"
        "learning_rate = 0.01\n"
        "epochs = 4\n"
        "mode = is\n"
        "[experiment]\n"
        "seeds = 3\n"
        "[snapshots]\n"
        "epochs = 1,4\n";
    const KeyValueConfig cfg = KeyValueConfig::parse_text(text, "inline");
    run_snapshots(cfg, dir);
    for (const std::string f : {"snapshot_seed3_epoch1.csv", "snapshot_seed3_epoch4.csv"}) {
        REQUIRE(std::filesystem::exists(dir + "/" + f));
        const std::string body = slurp(dir + "/" + f);
        CHECK(body.find("index,x,y,q\n") != std::string::npos);
        // 60 data rows: one per training sample.
        std::size_t rows = 0;
        std::istringstream in(body);
        std::string line;
        bool past_header = false;
        while (std::getline(in, line)) {
            if (line == "index,x,y,q") {
                past_header = true;
                continue;
            }
            if (past_header && !line.empty() && line.front() != '#') ++rows;
        }
        CHECK(rows == 60);
    }
    std::filesystem::remove_all(dir);
}
