#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "tactile/cli/commands.hpp"
#include "tactile/cli/config.hpp"
#include "tactile/cli/plot.hpp"
#include "tactile/error.hpp"
#include "tactile/ingest.hpp"

using namespace tactile;
using namespace tactile::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("tactile-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny(std::uint64_t seed = 5) {
  auto c = preset("wavelength-sweep", seed);
  c.name = "tiny";
  c.surfaces.wavelengths_mm = {0.3, 0.6};
  c.surfaces.amplitudes_um = {25.0};
  c.scan.velocities_mm_s = {25.0};
  c.scan.repetitions = 5;
  c.scan.duration_s = 1.2;
  c.classify.repeats = 2;
  return c;
}

std::string slurp(const fs::path& p) { return read_file(p); }

std::map<std::string, std::string> files_under(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Pre-contact baseline followed by a simulated pass wrapped in an encoder ramp.
std::string synthetic_log(const ExperimentConfig& c, std::size_t run_index) {
  const auto runs = enumerate_runs(c);
  const auto field = simulate_run(c, runs.at(run_index)).field;
  std::vector<ingest::LogRecord> recs;
  for (int i = 0; i < 100; ++i) recs.push_back({i * 1e-3, 0.0, 0.0, field.bx[0], field.by[0], field.bz[0] - 400});
  for (auto r : ingest::wrap_field(field, 0.0, runs[run_index].velocity_mm_s)) {
    r.t_s += 0.1;
    recs.push_back(r);
  }
  std::ostringstream out;
  ingest::write_log(recs, out);
  return out.str();
}

}  // namespace

TEST_CASE("presets mirror the survey grids") {
  const auto survey = preset("initial-survey");
  CHECK(survey.surfaces.wavelengths_mm == std::vector<double>{0.06, 0.24, 0.30, 0.60, 5.98});
  CHECK(survey.surfaces.amplitudes_um == std::vector<double>{10, 25, 50, 100});
  const auto sweep = preset("wavelength-sweep");
  CHECK(sweep.surfaces.wavelengths_mm ==
        std::vector<double>{0.27, 0.33, 0.36, 0.39, 0.42, 0.45, 0.48, 0.51, 0.54, 0.57});
  CHECK(sweep.surfaces.amplitudes_um == std::vector<double>{10, 25, 50});
  CHECK(sweep.classify.label == LabelBy::Wavelength);
  const auto amp = preset("amplitude-sweep");
  CHECK(amp.surfaces.wavelengths_mm == std::vector<double>{0.24, 0.30, 0.60});
  CHECK(amp.surfaces.amplitudes_um == std::vector<double>{15, 20, 30, 35, 40, 45});
  CHECK(amp.classify.label == LabelBy::Amplitude);
  CHECK_THROWS_AS(preset("nope"), Error);
}

TEST_CASE("wavelength-sweep preset enumerates the full grid") {
  const auto c = preset("wavelength-sweep");
  const auto runs = enumerate_runs(c);
  CHECK(runs.size() == 10 * 3 * 3 * c.designs.size() * 3);
  std::set<std::pair<std::size_t, std::string>> ids;
  for (const auto& r : runs) ids.insert({r.design, r.run_id});
  CHECK(ids.size() == runs.size());
  // Every design scans the same seeded surfaces.
  const std::size_t per_design = runs.size() / c.designs.size();
  for (std::size_t i = 0; i < per_design; ++i) {
    CHECK(runs[i].seed == runs[i + per_design].seed);
    CHECK(runs[i].run_id == runs[i + per_design].run_id);
  }
  CHECK(run_surface(c, runs[0]).heights() == run_surface(c, runs[per_design]).heights());
  CHECK(run_surface(c, runs[0]).heights() != run_surface(c, runs[1]).heights());
}

TEST_CASE("config json round trip keeps the hash") {
  const auto c = preset("amplitude-sweep", 77);
  const auto back = parse_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(preset("amplitude-sweep", 78)) != config_hash(c));
  auto other = c;
  other.classify.k = 3;
  CHECK(simulation_hash(other) == simulation_hash(c));
  CHECK(config_hash(other) != config_hash(c));
}

TEST_CASE("config errors name the offending key") {
  auto expect = [](const std::string& text, const std::string& where) {
    try {
      parse_config(text);
      FAIL("accepted: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Config);
      CHECK(std::string(e.what()).find(where) != std::string::npos);
      CHECK(exit_code_for(e) == kExitConfig);
    }
  };
  expect(R"({"name": "x"})", "/seed");
  expect(R"({"seed": 1, "colour": 3})", "/colour");
  expect(R"({"seed": 1, "scan": {"velocities_mm_s": [25, 50, "fast"]}})", "/scan/velocities_mm_s/2");
  expect(R"({"seed": 1, "scan": {"velocities_mm_s": [25, -1]}})", "/scan/velocities_mm_s/1");
  expect(R"({"seed": 1, "designs": [{"id": "a", "tip": {"kind": "round"}}]})", "/designs/0/tip/kind");
  expect(R"({"seed": 1, "designs": [{"id": "a"}, {"id": "a"}]})", "/designs/1/id");
  expect(R"({"seed": 1, "classify": {"plan": "huge"}})", "/classify/plan");
  expect(R"({"seed": 1, "surfaces": {"resolution_per_mm": 20}})", "/surfaces/resolution_per_mm");
  expect("{not json", "JSON");
}

TEST_CASE("classify plan presets set the model count") {
  const auto c = parse_config(R"({"seed": 3, "classify": {"plan": "velocity-split"}})");
  CHECK(c.classify.folds * c.classify.repeats == 300);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(Error(ErrorCode::Config, "x")) == kExitConfig);
  CHECK(exit_code_for(Error(ErrorCode::MalformedInput, "x")) == kExitData);
  CHECK(exit_code_for(Error(ErrorCode::ClassTooSmall, "x")) == kExitData);
  CHECK(exit_code_for(Error(ErrorCode::Diverged, "x")) == kExitInternal);
  CHECK(exit_code_for(std::runtime_error("x")) == kExitInternal);
}

TEST_CASE("empty scan grid is a no-op with a warning") {
  TempDir dir;
  auto c = tiny();
  c.scan.velocities_mm_s.clear();
  const auto r = cmd_simulate(c, {dir.path, 1, false, nullptr});
  CHECK(r.exit_code == kExitOk);
  CHECK(r.processed == 0);
  CHECK(r.warnings.size() == 1);
  CHECK_FALSE(fs::exists(dir.path / "sim"));
}

TEST_CASE("simulate, features and classify on a small grid") {
  TempDir dir;
  const auto c = tiny();
  const CommandOptions opts{dir.path, 2, false, nullptr};
  const auto sim = cmd_simulate(c, opts);
  CHECK(sim.exit_code == kExitOk);
  CHECK(sim.processed == 20);
  const auto first = files_under(dir.path);

  SUBCASE("rerun without force recomputes nothing") {
    const auto again = cmd_simulate(c, opts);
    CHECK(again.processed == 0);
    CHECK(again.skipped == 20);
    CHECK(files_under(dir.path) == first);
    const auto forced = cmd_simulate(c, {dir.path, 1, true, nullptr});
    CHECK(forced.processed == 20);
    CHECK(files_under(dir.path) == first);
  }

  SUBCASE("field files carry provenance") {
    const auto csv = load_field_file(dir.path / "sim/flat/l0.3_a25_v25_px_r0.field.csv");
    const auto meta = comment_fields(csv.comments);
    CHECK(meta.at("schema") == kFieldSchema);
    CHECK(meta.at("config_hash") == config_hash(c));
    CHECK(meta.at("design") == "flat");
    CHECK(meta.at("wavelength_mm") == "0.3");
    CHECK(meta.at("provenance") == "simulated");
    CHECK(meta.count("seed") == 1);
  }

  SUBCASE("feature tables are split by design") {
    const auto f = cmd_features(c, opts);
    CHECK(f.exit_code == kExitOk);
    CHECK(f.processed == 20);
    for (const char* design : {"flat", "flat-ridged"}) {
      std::istringstream in(slurp(dir.path / "features" / (std::string(design) + ".features.csv")));
      const auto t = features::read_table(in);
      CHECK(t.rows.size() == 10);
      CHECK(t.class_names == std::vector<std::string>{"0.3", "0.6"});
      for (const auto& r : t.rows) CHECK(r.meta.design == design);
    }
    CHECK_FALSE(fs::exists(dir.path / "features/errors.txt"));

    const auto cl = cmd_classify(c, opts);
    CHECK(cl.exit_code == kExitOk);
    std::istringstream acc(slurp(dir.path / "reports/accuracy.csv"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(acc, line)) {
      if (!line.empty() && line[0] != '#') ++rows;
    }
    // header + designs x (one velocity + pooled) x modes x folds x repeats
    CHECK(rows == 1 + 2 * 2 * 2 * 5 * 2);
    const auto stats = slurp(dir.path / "reports/stats.csv");
    CHECK(stats.find(",anova,") != std::string::npos);
    CHECK(stats.find(",tukey,flat,flat-ridged,") != std::string::npos);

    const auto reports = files_under(dir.path / "reports");
    TempDir other;
    fs::copy(dir.path / "features", other.path / "features", fs::copy_options::recursive);
    cmd_classify(c, {other.path, 4, false, nullptr});
    CHECK(files_under(other.path / "reports") == reports);

    fs::remove(dir.path / "reports/accuracy_fold-safe.svg");
    CHECK(cmd_report(c, opts).exit_code == kExitOk);
    CHECK(files_under(dir.path / "reports") == reports);
  }

  SUBCASE("a corrupted field file is reported and skipped") {
    write_text(dir.path / "sim/flat/l0.6_a25_v25_px_r3.field.csv", "#schema=tactile-field/1\nt_s,bx_lsb\n0,1\n");
    const auto f = cmd_features(c, opts);
    CHECK(f.exit_code == kExitOk);
    CHECK(f.failed == 1);
    CHECK(f.processed == 19);
    CHECK(slurp(dir.path / "features/errors.txt").find("l0.6_a25_v25_px_r3.field.csv") != std::string::npos);
  }

  SUBCASE("changed simulation settings invalidate old outputs") {
    auto changed = c;
    changed.scan.preload_depth_um = 40.0;
    const auto f = cmd_features(changed, opts);
    CHECK(f.exit_code == kExitData);
    CHECK(f.failed == 20);
  }
}

TEST_CASE("every output file carries the config hash and a schema") {
  TempDir dir;
  auto c = tiny();
  c.surfaces.wavelengths_mm = {0.3, 0.45};
  c.scan.repetitions = 6;
  const CommandOptions opts{dir.path, 1, false, nullptr};
  cmd_simulate(c, opts);
  write_text(dir.path / "sim/flat/l0.3_a25_v25_px_r0.field.csv", "garbage\n");
  cmd_features(c, opts);
  cmd_classify(c, opts);
  const std::string hash = config_hash(c);
  for (const auto& [name, text] : files_under(dir.path)) {
    if (name == "sim/flat/l0.3_a25_v25_px_r0.field.csv") continue;
    const auto head = text.substr(0, 400);
    INFO(name);
    CHECK(head.find(hash) != std::string::npos);
    CHECK((head.find("schema=") != std::string::npos || head.find("#layout=") != std::string::npos));
  }
}

TEST_CASE("one simulated run gives one feature row") {
  TempDir dir;
  auto c = tiny();
  c.designs.resize(1);
  c.surfaces.wavelengths_mm = {0.45};
  c.scan.repetitions = 1;
  const CommandOptions opts{dir.path, 1, false, nullptr};
  cmd_simulate(c, opts);
  CHECK(cmd_features(c, opts).processed == 1);
  std::istringstream in(slurp(dir.path / "features/flat.features.csv"));
  const auto t = features::read_table(in);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].features.values.size() == 66);
  CHECK(t.rows[0].meta.run_id == "l0.45_a25_v25_px_r0");

  SUBCASE("a single-class table cannot be classified") {
    try {
      cmd_classify(c, opts);
      FAIL("single-class table accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ClassTooSmall);
      CHECK(std::string(e.what()).find("at least 2") != std::string::npos);
      CHECK(exit_code_for(e) == kExitData);
    }
  }
}

TEST_CASE("velocity-split plan gives 300 models per design and velocity") {
  TempDir dir;
  auto c = tiny();
  c.classify.folds = 5;
  c.classify.repeats = 60;
  c.classify.normalize = {features::NormalizeMode::FoldSafe};
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (const auto& d : c.designs) {
    features::LabeledDataset t;
    t.class_names = {"pla", "aluminium", "foam"};
    for (double v : {25.0, 50.0}) {
      for (int label = 0; label < 3; ++label) {
        for (int rep = 0; rep < 5; ++rep) {
          features::Row r;
          for (double& x : r.features.values) x = nd(gen) + label;
          r.label = label;
          r.meta = {"r" + std::to_string(rep), d.id, v, "+x", rep, 0};
          t.rows.push_back(r);
        }
      }
    }
    std::ostringstream out;
    features::write_table(t, out);
    write_text(dir.path / "features" / (d.id + ".features.csv"), out.str());
  }
  CHECK(cmd_classify(c, {dir.path, 1, false, nullptr}).exit_code == kExitOk);
  std::istringstream acc(slurp(dir.path / "reports/accuracy.csv"));
  std::map<std::string, int> models;
  std::string line;
  while (std::getline(acc, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("design,", 0) == 0) continue;
    ++models[line.substr(0, line.find(",fold-safe"))];
  }
  CHECK(models == std::map<std::string, int>{{"flat,25", 300}, {"flat,50", 300}, {"flat,all", 300},
                                              {"flat-ridged,25", 300}, {"flat-ridged,50", 300},
                                              {"flat-ridged,all", 300}});
  const auto per_class = slurp(dir.path / "reports/per_class.csv");
  CHECK(per_class.find("flat,all,fold-safe,aluminium,") != std::string::npos);
}

TEST_CASE("ingest a manifest of synthetic logs") {
  TempDir dir;
  auto c = tiny();
  c.designs.resize(1);
  const auto runs = enumerate_runs(c);
  for (int i = 0; i < 3; ++i) write_text(dir.path / "logs" / ("s" + std::to_string(i) + ".csv"), synthetic_log(c, i));
  std::string manifest = "velocities = 25\n";
  for (int i = 0; i < 3; ++i) {
    manifest += "[session]\npath = logs/s" + std::to_string(i) +
                ".csv\ndesign = flat\nmaterial = m" + std::to_string(i % 2) + "\nvelocity_mm_s = 25\npasses = 1\n";
  }
  write_text(dir.path / "manifest.txt", manifest);
  const CommandOptions opts{dir.path / "out", 1, false, nullptr};

  SUBCASE("three logs give three pass sets") {
    const auto r = cmd_ingest(c, dir.path / "manifest.txt", opts);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.processed == 3);
    CHECK(r.failed == 0);
    const auto index = slurp(dir.path / "out/ingest/passes.csv");
    for (int i = 0; i < 3; ++i) {
      CHECK(fs::exists(dir.path / "out/ingest/flat" / ("s" + std::to_string(i) + "_s" + std::to_string(i) + "_p0.field.csv")));
    }
    CHECK(index.find(config_hash(c)) != std::string::npos);

    // Ingested passes join the simulated runs in the feature table, labelled by material.
    cmd_simulate(c, opts);
    const auto f = cmd_features(c, opts);
    CHECK(f.processed == runs.size() + 3);
    std::istringstream in(slurp(dir.path / "out/features/flat.features.csv"));
    const auto t = features::read_table(in);
    CHECK(t.class_names == std::vector<std::string>{"0.3", "0.6", "m0", "m1"});
  }

  SUBCASE("an unreadable log is skipped with a warning") {
    fs::remove(dir.path / "logs/s1.csv");
    const auto r = cmd_ingest(c, dir.path / "manifest.txt", opts);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.processed == 2);
    CHECK(r.failed == 1);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings.back().find("s1.csv") != std::string::npos);
  }

  SUBCASE("all logs failing is a data error") {
    for (int i = 0; i < 3; ++i) fs::remove(dir.path / "logs" / ("s" + std::to_string(i) + ".csv"));
    CHECK(cmd_ingest(c, dir.path / "manifest.txt", opts).exit_code == kExitData);
  }

  SUBCASE("an empty manifest is a no-op") {
    write_text(dir.path / "empty.txt", "# nothing yet\n");
    const auto r = cmd_ingest(c, dir.path / "empty.txt", opts);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.processed == 0);
    CHECK_FALSE(fs::exists(dir.path / "out/ingest"));
  }
}

TEST_CASE("box plot statistics") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
  const auto b = box_stats(v);
  CHECK(b.median == doctest::Approx(5.5));
  CHECK(b.q1 == doctest::Approx(3.25));
  CHECK(b.q3 == doctest::Approx(7.75));
  CHECK(b.whisker_hi == 9.0);
  CHECK(b.outliers == std::vector<double>{100});
  const auto svg = box_plot_svg("t <1>", "y", {{"a", v}, {"b", {2, 2, 2}}});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("t &lt;1&gt;") != std::string::npos);
  CHECK_THROWS_AS(box_stats(std::vector<double>{}), Error);
}
