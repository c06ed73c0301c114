#include "tactile/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "tactile/cli/plot.hpp"
#include "tactile/error.hpp"
#include "tactile/ingest.hpp"
#include "tactile/learn.hpp"
#include "tactile/parallel.hpp"
#include "tactile/random.hpp"

namespace tactile::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPassIndexHeader =
    "pass_id,design,material,velocity_mm_s,measured_velocity_mm_s,direction,repetition,trial,begin,end,samples,"
    "velocity_flag,path";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void say(const CommandOptions& opts, const std::string& line) {
  if (opts.log) *opts.log << line << '\n';
}

void warn(const CommandOptions& opts, CommandResult& r, const std::string& line) {
  r.warnings.push_back(line);
  say(opts, "warning: " + line);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedInput, "bad number '" + s + "' for " + what);
  }
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedInput, "bad integer '" + s + "' for " + what);
  }
  return v;
}

std::vector<std::string> header_comments(const ExperimentConfig& config) {
  return {"config_hash=" + config_hash(config), "experiment=" + config.name};
}

fs::path field_path(const fs::path& out, const std::string& design, const std::string& run_id) {
  return out / "sim" / design / (run_id + ".field.csv");
}

/// Leading `#` lines of a file, without reading the body.
std::vector<std::string> leading_comments(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') out.push_back(line.substr(1));
  return out;
}

std::string velocity_key(double v) { return format_number(v); }

struct PassIndexRow {
  std::string pass_id, design, material, direction;
  double velocity = 0.0;
  int repetition = 0, trial = 0;
  fs::path path;
};

std::vector<PassIndexRow> read_pass_index(const fs::path& out) {
  const fs::path index = out / "ingest" / "passes.csv";
  std::vector<PassIndexRow> rows;
  if (!fs::exists(index)) return rows;
  std::istringstream in(read_file(index));
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kPassIndexHeader) throw Error(ErrorCode::SchemaMismatch, index.string() + " has an unexpected header");
      header = true;
      continue;
    }
    const auto c = split_csv(line);
    if (c.size() != 13) throw Error(ErrorCode::MalformedInput, index.string() + ": wrong column count");
    PassIndexRow r;
    r.pass_id = c[0];
    r.design = c[1];
    r.material = c[2];
    r.velocity = to_double(c[3], "velocity");
    r.direction = c[5];
    r.repetition = to_int(c[6], "repetition");
    r.trial = to_int(c[7], "trial");
    r.path = out / c[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

struct AccuracyRow {
  std::string design, velocity, mode;
  std::size_t repeat = 0, fold = 0;
  double accuracy = 0.0;
};

void render_plots(const fs::path& reports, const std::vector<AccuracyRow>& rows, const std::string& cfg_hash) {
  std::vector<std::string> modes;
  for (const auto& r : rows) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  for (const auto& mode : modes) {
    std::vector<BoxSeries> series;
    for (const auto& r : rows) {
      if (r.mode != mode) continue;
      const std::string label = r.design + " @ " + r.velocity + (r.velocity == "all" ? "" : " mm/s");
      if (series.empty() || series.back().label != label) series.push_back({label, {}});
      series.back().values.push_back(r.accuracy * 100.0);
    }
    const std::string header =
        std::string("<!-- schema=") + kReportSchema + " config_hash=" + cfg_hash + " -->\n";
    write_file_atomic(reports / ("accuracy_" + mode + ".svg"),
                      header + box_plot_svg("k-NN accuracy per model (" + mode + " normalization)", "accuracy (%)", series));
  }
}

std::vector<AccuracyRow> read_accuracy_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<AccuracyRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "design,velocity_mm_s,normalize,repeat,fold,accuracy") {
        throw Error(ErrorCode::SchemaMismatch, path.string() + " has an unexpected header");
      }
      header = true;
      continue;
    }
    const auto c = split_csv(line);
    if (c.size() != 6) throw Error(ErrorCode::MalformedInput, path.string() + ": wrong column count");
    rows.push_back({c[0], c[1], c[2], static_cast<std::size_t>(to_int(c[3], "repeat")),
                    static_cast<std::size_t>(to_int(c[4], "fold")), to_double(c[5], "accuracy")});
  }
  return rows;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->code()) {
      case ErrorCode::Config:
      case ErrorCode::InvalidSpec: return kExitConfig;
      case ErrorCode::MalformedInput:
      case ErrorCode::SchemaMismatch:
      case ErrorCode::ClassTooSmall:
      case ErrorCode::Io:
      case ErrorCode::NoContact:
      case ErrorCode::TooShort:
      case ErrorCode::Degenerate:
      case ErrorCode::NonMonotonicTime:
      case ErrorCode::DimensionMismatch: return kExitData;
      default: return kExitInternal;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
  return kExitInternal;
}

std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tag = hex64(rng::derive(std::hash<std::thread::id>{}(std::this_thread::get_id()), counter++));
  fs::path tmp = path;
  tmp += ".tmp-" + tag;
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> comment_fields(const std::vector<std::string>& comments) {
  std::map<std::string, std::string> out;
  for (const auto& c : comments) {
    const auto eq = c.find('=');
    if (eq != std::string::npos) out[c.substr(0, eq)] = c.substr(eq + 1);
  }
  return out;
}

magnetics::FieldCsv load_field_file(const fs::path& path) {
  std::istringstream in(read_file(path));
  auto csv = magnetics::read_field_csv(in);
  const auto meta = comment_fields(csv.comments);
  const auto it = meta.find("schema");
  if (it == meta.end() || it->second != kFieldSchema) {
    throw Error(ErrorCode::SchemaMismatch, path.string() + " is not a " + kFieldSchema + " file");
  }
  return csv;
}

std::string class_name(LabelBy label, double wavelength_mm, double amplitude_um) {
  switch (label) {
    case LabelBy::Wavelength: return format_number(wavelength_mm);
    case LabelBy::Amplitude: return format_number(amplitude_um);
    case LabelBy::Surface: return "l" + format_number(wavelength_mm) + "_a" + format_number(amplitude_um);
  }
  return {};
}

std::vector<RunSpec> enumerate_runs(const ExperimentConfig& c) {
  std::vector<RunSpec> runs;
  for (std::size_t d = 0; d < c.designs.size(); ++d) {
    for (double lam : c.surfaces.wavelengths_mm) {
      for (double amp : c.surfaces.amplitudes_um) {
        for (double v : c.scan.velocities_mm_s) {
          for (auto dir : c.scan.directions) {
            for (int rep = 0; rep < c.scan.repetitions; ++rep) {
              RunSpec r;
              r.design = d;
              r.wavelength_mm = lam;
              r.amplitude_um = amp;
              r.velocity_mm_s = v;
              r.direction = dir;
              r.repetition = rep;
              r.run_id = "l" + format_number(lam) + "_a" + format_number(amp) + "_v" + format_number(v) + "_" +
                         (dir == mechanics::Direction::Positive ? "px" : "nx") + "_r" + std::to_string(rep);
              r.seed = rng::derive(c.seed, rng::fnv1a(r.run_id));
              runs.push_back(std::move(r));
            }
          }
        }
      }
    }
  }
  return runs;
}

surface::SurfaceProfile run_surface(const ExperimentConfig& c, const RunSpec& run) {
  mechanics::ScanConfig sc;
  sc.velocity_mm_s = run.velocity_mm_s;
  sc.duration_s = c.scan.duration_s;
  double length = 0.0;
  for (const auto& d : c.designs) length = std::max(length, mechanics::required_length_mm(d.tip, sc));

  std::mt19937_64 gen(run.seed);
  const double phase = 2.0 * std::numbers::pi * rng::uniform01(gen);
  const std::uint64_t micro_seed = gen();
  auto profile = surface::generate_surface(surface::Sinusoid{run.wavelength_mm, run.amplitude_um, phase}, length,
                                           c.surfaces.resolution_per_mm);
  if (c.surfaces.micro_rms_um > 0.0) {
    const auto micro = surface::generate_surface(
        surface::Stochastic{micro_seed, c.surfaces.micro_correlation_mm, c.surfaces.micro_rms_um}, length,
        c.surfaces.resolution_per_mm);
    profile = surface::superpose(profile, micro);
  }
  return profile;
}

SimulatedRun simulate_run(const ExperimentConfig& c, const RunSpec& run) {
  const auto& design = c.designs.at(run.design);
  mechanics::ScanConfig sc;
  sc.velocity_mm_s = run.velocity_mm_s;
  sc.direction = run.direction;
  sc.preload_depth_um = c.scan.preload_depth_um;
  sc.duration_s = c.scan.duration_s;
  sc.sim_rate_hz = c.scan.sim_rate_hz;
  sc.output_rate_hz = c.scan.output_rate_hz;
  const auto surf = run_surface(c, run);
  SimulatedRun out;
  out.trajectory = mechanics::simulate_scan(design.tip, design.stack, surf, sc, design.magnet.edge_mm);
  out.field = magnetics::trajectory_to_field(out.trajectory, design.magnet, design.layout);
  return out;
}

std::string simulation_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.name.clear();
  c.pipeline = {};
  c.classify = {};
  c.manifest.reset();
  return config_hash(c);
}

CommandResult cmd_simulate(const ExperimentConfig& config, const CommandOptions& opts) {
  CommandResult result;
  const auto runs = enumerate_runs(config);
  if (runs.empty()) {
    warn(opts, result, "scan grid is empty; nothing to simulate");
    return result;
  }
  const std::string sim_hash = simulation_hash(config);
  const std::string cfg_hash = config_hash(config);
  enum class Outcome { Done, Skipped, Failed };
  std::vector<Outcome> outcome(runs.size(), Outcome::Failed);
  std::vector<std::string> errors(runs.size());

  parallel_for(runs.size(), opts.jobs, [&](std::size_t i) {
    const auto& run = runs[i];
    const auto& design = config.designs[run.design];
    const fs::path field_file = field_path(opts.out, design.id, run.run_id);
    if (!opts.force && fs::exists(field_file)) {
      const auto meta = comment_fields(leading_comments(field_file));
      const auto it = meta.find("sim_hash");
      if (it != meta.end() && it->second == sim_hash) {
        outcome[i] = Outcome::Skipped;
        return;
      }
    }
    try {
      const auto sim = simulate_run(config, run);
      std::vector<std::string> comments{
          std::string("schema=") + kFieldSchema,
          "config_hash=" + cfg_hash,
          "sim_hash=" + sim_hash,
          "run_id=" + run.run_id,
          "design=" + design.id,
          "wavelength_mm=" + format_number(run.wavelength_mm),
          "amplitude_um=" + format_number(run.amplitude_um),
          "velocity_mm_s=" + format_number(run.velocity_mm_s),
          "direction=" + mechanics::to_string(run.direction),
          "repetition=" + std::to_string(run.repetition),
          "trial=0",
          "seed=" + std::to_string(run.seed),
          "provenance=" + magnetics::to_string(sim.field.meta),
          std::string("saturated=") + (sim.field.saturated ? "true" : "false"),
      };
      std::ostringstream traj;
      for (const auto& c : comments) traj << '#' << c << '\n';
      mechanics::write_csv(sim.trajectory, traj);
      std::ostringstream field;
      magnetics::write_csv(sim.field, field, comments);
      fs::path traj_file = field_file;
      traj_file.replace_filename(run.run_id + ".traj.csv");
      write_file_atomic(traj_file, traj.str());
      // Field file last: its presence marks the run complete.
      write_file_atomic(field_file, field.str());
      outcome[i] = Outcome::Done;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < runs.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::Done: ++result.processed; break;
      case Outcome::Skipped: ++result.skipped; break;
      case Outcome::Failed:
        ++result.failed;
        warn(opts, result, config.designs[runs[i].design].id + "/" + runs[i].run_id + ": " + errors[i]);
        break;
    }
  }
  say(opts, "simulate: " + std::to_string(result.processed) + " simulated, " + std::to_string(result.skipped) +
                " up to date, " + std::to_string(result.failed) + " failed");
  if (result.failed > 0) result.exit_code = kExitData;
  return result;
}

CommandResult cmd_features(const ExperimentConfig& config, const CommandOptions& opts) {
  CommandResult result;
  struct Item {
    std::string design;
    fs::path path;
    features::RowMeta meta;
    std::string class_name;
    bool simulated = true;
  };
  std::vector<Item> items;
  std::vector<std::string> class_order;
  auto add_class = [&](const std::string& name) {
    if (std::find(class_order.begin(), class_order.end(), name) == class_order.end()) class_order.push_back(name);
  };
  for (const auto& run : enumerate_runs(config)) {
    Item it;
    it.design = config.designs[run.design].id;
    it.path = field_path(opts.out, it.design, run.run_id);
    it.meta = {run.run_id, it.design, run.velocity_mm_s, mechanics::to_string(run.direction), run.repetition, 0};
    it.class_name = class_name(config.classify.label, run.wavelength_mm, run.amplitude_um);
    add_class(it.class_name);
    items.push_back(std::move(it));
  }
  std::vector<std::string> materials;
  for (const auto& p : read_pass_index(opts.out)) {
    Item it;
    it.design = p.design;
    it.path = p.path;
    it.meta = {p.pass_id, p.design, p.velocity, p.direction, p.repetition, p.trial};
    it.class_name = p.material;
    it.simulated = false;
    materials.push_back(p.material);
    items.push_back(std::move(it));
  }
  std::sort(materials.begin(), materials.end());
  for (const auto& m : materials) add_class(m);

  if (items.empty()) {
    warn(opts, result, "no simulated runs or ingested passes to process");
    return result;
  }

  const std::string sim_hash = simulation_hash(config);
  std::vector<std::optional<features::FeatureVector>> vectors(items.size());
  std::vector<std::string> errors(items.size());
  parallel_for(items.size(), opts.jobs, [&](std::size_t i) {
    try {
      const auto csv = load_field_file(items[i].path);
      if (items[i].simulated) {
        const auto meta = comment_fields(csv.comments);
        const auto it = meta.find("sim_hash");
        if (it == meta.end() || it->second != sim_hash) {
          throw Error(ErrorCode::SchemaMismatch, "simulated with a different configuration; rerun simulate");
        }
      }
      vectors[i] = features::extract(csv.series, config.pipeline);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<std::string> designs;
  for (const auto& d : config.designs) designs.push_back(d.id);
  std::set<std::string> extra;
  for (const auto& it : items) {
    if (std::find(designs.begin(), designs.end(), it.design) == designs.end()) extra.insert(it.design);
  }
  designs.insert(designs.end(), extra.begin(), extra.end());

  std::string error_report = std::string("#schema=") + kReportSchema + "\n#config_hash=" + config_hash(config) + "\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!vectors[i]) {
      ++result.failed;
      error_report += items[i].path.string() + ": " + errors[i] + "\n";
      warn(opts, result, items[i].path.string() + ": " + errors[i]);
    }
  }
  const fs::path dir = opts.out / "features";
  fs::create_directories(dir);
  if (result.failed > 0) {
    write_file_atomic(dir / "errors.txt", error_report);
  } else {
    fs::remove(dir / "errors.txt");
  }

  for (const auto& design : designs) {
    features::LabeledDataset data;
    data.class_names = class_order;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].design != design || !vectors[i]) continue;
      features::Row row;
      row.features = *vectors[i];
      row.meta = items[i].meta;
      row.label = static_cast<int>(std::find(class_order.begin(), class_order.end(), items[i].class_name) -
                                   class_order.begin());
      data.rows.push_back(std::move(row));
    }
    if (data.rows.empty()) continue;
    result.processed += data.rows.size();
    std::ostringstream out;
    auto comments = header_comments(config);
    comments.push_back("design=" + design);
    comments.push_back("label=" + to_string(config.classify.label));
    features::write_table(data, out, comments);
    write_file_atomic(dir / (design + ".features.csv"), out.str());
    say(opts, "features: " + design + ": " + std::to_string(data.rows.size()) + " rows");
  }
  if (result.processed == 0) result.exit_code = kExitData;
  return result;
}

CommandResult cmd_classify(const ExperimentConfig& config, const CommandOptions& opts) {
  CommandResult result;
  const fs::path dir = opts.out / "features";
  std::vector<std::string> designs;
  for (const auto& d : config.designs) {
    if (fs::exists(dir / (d.id + ".features.csv"))) designs.push_back(d.id);
  }
  if (fs::exists(dir)) {
    std::set<std::string> extra;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      const std::string suffix = ".features.csv";
      if (name.size() > suffix.size() && name.ends_with(suffix)) {
        const auto id = name.substr(0, name.size() - suffix.size());
        if (std::find(designs.begin(), designs.end(), id) == designs.end()) extra.insert(id);
      }
    }
    designs.insert(designs.end(), extra.begin(), extra.end());
  }
  if (designs.empty()) throw Error(ErrorCode::Io, "no feature tables under " + dir.string() + "; run features first");

  std::vector<features::LabeledDataset> tables;
  for (const auto& id : designs) {
    std::istringstream in(read_file(dir / (id + ".features.csv")));
    auto t = features::read_table(in);
    std::set<int> labels;
    for (const auto& r : t.rows) labels.insert(r.label);
    if (labels.size() < 2) {
      throw Error(ErrorCode::ClassTooSmall,
                  "feature table for design '" + id + "' has " + std::to_string(labels.size()) +
                      " class(es); classification needs at least 2");
    }
    tables.push_back(std::move(t));
  }

  std::vector<double> velocities = config.classify.velocities_mm_s;
  if (velocities.empty()) {
    std::set<double> seen;
    for (const auto& t : tables) {
      for (const auto& r : t.rows) seen.insert(r.meta.velocity_mm_s);
    }
    velocities.assign(seen.begin(), seen.end());
  }
  std::vector<std::string> subsets;
  for (double v : velocities) subsets.push_back(velocity_key(v));
  subsets.push_back("all");

  learn::CvPlan plan{config.classify.folds, config.classify.repeats, rng::derive(config.seed, rng::fnv1a("cv"))};
  const learn::KnnConfig knn{config.classify.k};

  std::ostringstream acc_csv, summary_csv, class_csv, stats_csv;
  const auto comments = header_comments(config);
  for (auto* s : {&acc_csv, &summary_csv, &class_csv, &stats_csv}) {
    *s << "#schema=" << kReportSchema << '\n';
    for (const auto& c : comments) *s << '#' << c << '\n';
  }
  acc_csv << "design,velocity_mm_s,normalize,repeat,fold,accuracy\n";
  summary_csv << "design,velocity_mm_s,normalize,models,mean,std\n";
  class_csv << "design,velocity_mm_s,normalize,class,correct,total,accuracy\n";
  stats_csv << "velocity_mm_s,normalize,test,group_a,group_b,statistic,df1,df2,p,q_crit,mean_diff,significant\n";
  std::vector<AccuracyRow> plot_rows;

  for (const auto mode : config.classify.normalize) {
    const std::string mode_name = features::to_string(mode);
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      const bool pooled = subsets[s] == "all";
      std::vector<std::vector<double>> groups;
      std::vector<std::string> group_names;
      for (std::size_t d = 0; d < tables.size(); ++d) {
        features::LabeledDataset subset;
        subset.class_names = tables[d].class_names;
        for (const auto& r : tables[d].rows) {
          if (pooled || r.meta.velocity_mm_s == velocities[s]) subset.rows.push_back(r);
        }
        if (subset.rows.empty()) continue;
        learn::AccuracyDistribution dist;
        try {
          dist = learn::evaluate(subset, plan, knn, mode, opts.jobs);
        } catch (const Error& e) {
          if (pooled || e.code() != ErrorCode::ClassTooSmall) throw;
          warn(opts, result, designs[d] + " @ " + subsets[s] + " mm/s skipped: " + e.what());
          continue;
        }
        ++result.processed;
        for (const auto& m : dist.models) {
          acc_csv << designs[d] << ',' << subsets[s] << ',' << mode_name << ',' << m.repeat << ',' << m.fold << ','
                  << format_number(m.accuracy) << '\n';
          plot_rows.push_back({designs[d], subsets[s], mode_name, m.repeat, m.fold, m.accuracy});
        }
        summary_csv << designs[d] << ',' << subsets[s] << ',' << mode_name << ',' << dist.models.size() << ','
                    << format_number(dist.mean) << ',' << format_number(dist.std) << '\n';
        for (std::size_t c = 0; c < dist.class_total.size(); ++c) {
          if (dist.class_total[c] == 0) continue;
          class_csv << designs[d] << ',' << subsets[s] << ',' << mode_name << ',' << subset.class_names[c] << ','
                    << dist.class_correct[c] << ',' << dist.class_total[c] << ','
                    << format_number(static_cast<double>(dist.class_correct[c]) /
                                     static_cast<double>(dist.class_total[c]))
                    << '\n';
        }
        say(opts, "classify: " + designs[d] + " @ " + subsets[s] + " (" + mode_name + "): " +
                      format_number(std::round(dist.mean * 1000.0) / 10.0) + "% over " +
                      std::to_string(dist.models.size()) + " models");
        groups.push_back(dist.accuracies());
        group_names.push_back(designs[d]);
      }
      if (groups.size() < 2) continue;
      const auto anova = learn::anova_oneway(groups);
      stats_csv << subsets[s] << ',' << mode_name << ",anova,,," << format_number(anova.f) << ','
                << anova.df_between << ',' << anova.df_within << ',' << format_number(anova.p) << ",,,"
                << (anova.p < config.classify.alpha ? "true" : "false") << '\n';
      for (const auto& p : learn::tukey_hsd(groups, config.classify.alpha)) {
        stats_csv << subsets[s] << ',' << mode_name << ",tukey," << group_names[p.i] << ',' << group_names[p.j] << ','
                  << format_number(p.q) << ',' << groups.size() << ',' << anova.df_within << ','
                  << format_number(p.p) << ',' << format_number(p.q_crit) << ',' << format_number(p.mean_diff) << ','
                  << (p.significant ? "true" : "false") << '\n';
      }
    }
  }

  const fs::path reports = opts.out / "reports";
  write_file_atomic(reports / "accuracy.csv", acc_csv.str());
  write_file_atomic(reports / "summary.csv", summary_csv.str());
  write_file_atomic(reports / "per_class.csv", class_csv.str());
  write_file_atomic(reports / "stats.csv", stats_csv.str());
  render_plots(reports, plot_rows, config_hash(config));
  return result;
}

CommandResult cmd_ingest(const ExperimentConfig& config, const fs::path& manifest_path, const CommandOptions& opts) {
  CommandResult result;
  const auto manifest = ingest::parse_manifest(read_file(manifest_path), manifest_path.parent_path());
  if (manifest.sessions.empty()) {
    warn(opts, result, "manifest lists no sessions; nothing to ingest");
    return result;
  }
  struct SessionOutput {
    std::vector<std::string> index_rows;
    std::vector<std::pair<fs::path, std::string>> files;
    std::vector<std::string> flags;
    std::string error;
  };
  std::vector<SessionOutput> outputs(manifest.sessions.size());
  const std::string cfg_hash = config_hash(config);

  parallel_for(manifest.sessions.size(), opts.jobs, [&](std::size_t i) {
    const auto& session = manifest.sessions[i];
    auto& out = outputs[i];
    try {
      const auto log = ingest::parse_log(read_file(session.path));
      for (const auto& d : log.diagnostics) {
        out.flags.push_back(session.path.string() + ":" + std::to_string(d.line) + ": " + d.message);
      }
      std::vector<double> bz;
      for (const auto& r : log.records) bz.push_back(r.bz);
      const auto contact = ingest::detect_contact(bz);
      if (!contact) throw Error(ErrorCode::NoContact, "contact threshold never reached");
      const auto records = std::span(log.records).subspan(*contact);
      const auto seg = ingest::segment_passes(records, session.meta);
      for (const auto& f : seg.flags) out.flags.push_back(session.path.string() + ": " + f);

      const std::string stem = "s" + std::to_string(i) + "_" + session.path.stem().string();
      for (std::size_t k = 0; k < seg.passes.size(); ++k) {
        const auto& pass = seg.passes[k];
        const std::string pass_id = stem + "_p" + std::to_string(k);
        const fs::path rel = fs::path("ingest") / session.meta.design / (pass_id + ".field.csv");
        const std::vector<std::string> comments{
            std::string("schema=") + kFieldSchema,
            "config_hash=" + cfg_hash,
            "run_id=" + pass_id,
            "design=" + session.meta.design,
            "material=" + session.meta.material,
            "velocity_mm_s=" + format_number(session.meta.velocity_mm_s),
            "measured_velocity_mm_s=" + format_number(pass.measured_velocity_mm_s),
            "direction=" + mechanics::to_string(pass.direction),
            "repetition=" + std::to_string(session.meta.repetition),
            "trial=" + std::to_string(session.meta.trial),
            "provenance=" + magnetics::to_string(pass.field.meta),
            "source=" + session.path.string(),
        };
        std::ostringstream csv;
        magnetics::write_csv(pass.field, csv, comments);
        out.files.emplace_back(opts.out / rel, csv.str());
        out.index_rows.push_back(pass_id + ',' + session.meta.design + ',' + session.meta.material + ',' +
                                 format_number(session.meta.velocity_mm_s) + ',' +
                                 format_number(pass.measured_velocity_mm_s) + ',' + mechanics::to_string(pass.direction) +
                                 ',' + std::to_string(session.meta.repetition) + ',' +
                                 std::to_string(session.meta.trial) + ',' + std::to_string(*contact + pass.begin) + ',' +
                                 std::to_string(*contact + pass.end) + ',' + std::to_string(pass.field.size()) + ',' +
                                 (pass.velocity_flag ? "true" : "false") + ',' + rel.generic_string());
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  std::ostringstream index;
  index << "#schema=" << kReportSchema << '\n';
  for (const auto& c : header_comments(config)) index << '#' << c << '\n';
  index << kPassIndexHeader << '\n';
  std::size_t passes = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto& o = outputs[i];
    for (const auto& f : o.flags) warn(opts, result, f);
    if (!o.error.empty()) {
      ++result.failed;
      warn(opts, result, manifest.sessions[i].path.string() + ": " + o.error);
      continue;
    }
    ++result.processed;
    for (const auto& [path, text] : o.files) write_file_atomic(path, text);
    for (const auto& row : o.index_rows) index << row << '\n';
    passes += o.index_rows.size();
  }
  write_file_atomic(opts.out / "ingest" / "passes.csv", index.str());
  say(opts, "ingest: " + std::to_string(result.processed) + " of " + std::to_string(outputs.size()) +
                " sessions, " + std::to_string(passes) + " passes");
  if (result.processed == 0) result.exit_code = kExitData;
  return result;
}

CommandResult cmd_report(const ExperimentConfig& config, const CommandOptions& opts) {
  CommandResult result;
  const fs::path reports = opts.out / "reports";
  const auto rows = read_accuracy_csv(reports / "accuracy.csv");
  render_plots(reports, rows, config_hash(config));
  result.processed = rows.size();
  say(opts, "report: plots written under " + reports.string());
  return result;
}

}  // namespace tactile::cli
