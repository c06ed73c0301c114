#include "tactile/cli/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tactile/error.hpp"
#include "tactile/learn.hpp"
#include "tactile/random.hpp"

namespace tactile::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Config, (path.empty() ? "/" : path) + ": " + what);
}

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      fail(path + "/" + k, "unknown key");
    }
  }
}

template <class T>
void read_number(const json& obj, const std::string& path, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  const std::string p = path + "/" + key;
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(p, "expected a number");
    dst = v.get<T>();
  } else {
    if (!v.is_number_integer()) fail(p, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) {
        dst = v.get<T>();
      } else {
        if (v.get<long long>() < 0) fail(p, "must be non-negative");
        dst = static_cast<T>(v.get<long long>());
      }
    } else {
      dst = v.get<T>();
    }
  }
}

void read_string(const json& obj, const std::string& path, const char* key, std::string& dst) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_string()) fail(path + "/" + key, "expected a string");
  dst = obj.at(key).get<std::string>();
}

std::vector<double> read_numbers(const json& obj, const std::string& path, const char* key,
                                 std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  const std::string p = path + "/" + key;
  if (!v.is_array()) fail(p, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(p + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

template <class F>
auto translate(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(path, e.what());
  }
}

mechanics::TipGeometry parse_tip(const json& j, const std::string& path) {
  allow_keys(j, path,
             {"kind", "contact_width_mm", "ridge_depth_um", "ridge_width_um", "ridge_wavelength_um",
              "ridge_top_fraction", "sphere_radius_mm"});
  std::string kind = "flat";
  read_string(j, path, "kind", kind);
  auto tip = translate(path + "/kind", [&] {
    switch (mechanics::tip_kind_from_string(kind)) {
      case mechanics::TipKind::Flat: return mechanics::TipGeometry::flat();
      case mechanics::TipKind::FlatRidged: return mechanics::TipGeometry::flat_ridged();
      case mechanics::TipKind::SphericalRidged: return mechanics::TipGeometry::spherical_ridged();
    }
    return mechanics::TipGeometry::flat();
  });
  read_number(j, path, "contact_width_mm", tip.contact_width_mm);
  read_number(j, path, "ridge_depth_um", tip.ridge_depth_um);
  read_number(j, path, "ridge_width_um", tip.ridge_width_um);
  read_number(j, path, "ridge_wavelength_um", tip.ridge_wavelength_um);
  read_number(j, path, "ridge_top_fraction", tip.ridge_top_fraction);
  read_number(j, path, "sphere_radius_mm", tip.sphere_radius_mm);
  translate(path, [&] { mechanics::validate(tip); });
  return tip;
}

DesignConfig parse_design(const json& j, const std::string& path) {
  allow_keys(j, path, {"id", "tip", "stack", "magnet", "layout"});
  DesignConfig d;
  read_string(j, path, "id", d.id);
  if (d.id.empty()) fail(path + "/id", "design id is required");
  if (d.id.find_first_of("/\\,#= ") != std::string::npos) fail(path + "/id", "id may not contain / \\ , # = or spaces");
  if (j.contains("tip")) d.tip = parse_tip(j.at("tip"), path + "/tip");
  if (j.contains("stack")) {
    const auto& s = j.at("stack");
    const std::string p = path + "/stack";
    allow_keys(s, p, {"epidermis_thickness_mm", "dermis_thickness_mm", "epidermis_modulus_psi", "dermis_modulus_psi"});
    read_number(s, p, "epidermis_thickness_mm", d.stack.epidermis_thickness_mm);
    read_number(s, p, "dermis_thickness_mm", d.stack.dermis_thickness_mm);
    read_number(s, p, "epidermis_modulus_psi", d.stack.epidermis_modulus_psi);
    read_number(s, p, "dermis_modulus_psi", d.stack.dermis_modulus_psi);
    translate(p, [&] { mechanics::validate(d.stack); });
  }
  if (j.contains("magnet")) {
    const auto& m = j.at("magnet");
    const std::string p = path + "/magnet";
    allow_keys(m, p, {"edge_mm", "remanence_t", "axis"});
    read_number(m, p, "edge_mm", d.magnet.edge_mm);
    read_number(m, p, "remanence_t", d.magnet.remanence_t);
    if (m.contains("axis")) {
      const auto a = read_numbers(m, p, "axis", {});
      if (a.size() != 3) fail(p + "/axis", "expected 3 components");
      d.magnet.axis = {a[0], a[1], a[2]};
    }
    translate(p, [&] { magnetics::validate(d.magnet); });
  }
  if (j.contains("layout")) {
    const auto& l = j.at("layout");
    const std::string p = path + "/layout";
    allow_keys(l, p, {"position_mm", "conversion_ut_per_lsb", "resolution_bits"});
    if (l.contains("position_mm")) {
      const auto a = read_numbers(l, p, "position_mm", {});
      if (a.size() != 3) fail(p + "/position_mm", "expected 3 components");
      d.layout.position_mm = {a[0], a[1], a[2]};
    }
    read_number(l, p, "conversion_ut_per_lsb", d.layout.conversion_ut_per_lsb);
    read_number(l, p, "resolution_bits", d.layout.resolution_bits);
  }
  translate(path + "/layout", [&] { magnetics::validate(d.layout, d.magnet); });
  return d;
}

json tip_json(const mechanics::TipGeometry& t) {
  return {{"kind", mechanics::to_string(t.kind)},
          {"contact_width_mm", t.contact_width_mm},
          {"ridge_depth_um", t.ridge_depth_um},
          {"ridge_width_um", t.ridge_width_um},
          {"ridge_wavelength_um", t.ridge_wavelength_um},
          {"ridge_top_fraction", t.ridge_top_fraction},
          {"sphere_radius_mm", t.sphere_radius_mm}};
}

LabelBy label_from_string(const std::string& s, const std::string& path) {
  if (s == "wavelength") return LabelBy::Wavelength;
  if (s == "amplitude") return LabelBy::Amplitude;
  if (s == "surface") return LabelBy::Surface;
  fail(path, "label must be wavelength, amplitude or surface");
}

}  // namespace

std::string to_string(LabelBy l) {
  switch (l) {
    case LabelBy::Wavelength: return "wavelength";
    case LabelBy::Amplitude: return "amplitude";
    case LabelBy::Surface: return "surface";
  }
  return "?";
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(root, "", {"name", "seed", "designs", "surfaces", "scan", "pipeline", "classify", "ingest"});
  ExperimentConfig c;
  read_string(root, "", "name", c.name);
  if (!root.contains("seed")) fail("/seed", "seed is mandatory");
  read_number(root, "", "seed", c.seed);

  if (root.contains("designs")) {
    const auto& d = root.at("designs");
    if (!d.is_array()) fail("/designs", "expected an array");
    for (std::size_t i = 0; i < d.size(); ++i) c.designs.push_back(parse_design(d[i], "/designs/" + std::to_string(i)));
  }

  if (root.contains("surfaces")) {
    const auto& s = root.at("surfaces");
    allow_keys(s, "/surfaces",
               {"wavelengths_mm", "amplitudes_um", "micro_rms_um", "micro_correlation_mm", "resolution_per_mm"});
    c.surfaces.wavelengths_mm = read_numbers(s, "/surfaces", "wavelengths_mm", {});
    c.surfaces.amplitudes_um = read_numbers(s, "/surfaces", "amplitudes_um", {});
    read_number(s, "/surfaces", "micro_rms_um", c.surfaces.micro_rms_um);
    read_number(s, "/surfaces", "micro_correlation_mm", c.surfaces.micro_correlation_mm);
    read_number(s, "/surfaces", "resolution_per_mm", c.surfaces.resolution_per_mm);
  }

  if (root.contains("scan")) {
    const auto& s = root.at("scan");
    allow_keys(s, "/scan",
               {"velocities_mm_s", "directions", "repetitions", "preload_depth_um", "duration_s", "sim_rate_hz",
                "output_rate_hz"});
    c.scan.velocities_mm_s = read_numbers(s, "/scan", "velocities_mm_s", {});
    if (s.contains("directions")) {
      const auto& d = s.at("directions");
      if (!d.is_array()) fail("/scan/directions", "expected an array");
      c.scan.directions.clear();
      for (std::size_t i = 0; i < d.size(); ++i) {
        const std::string p = "/scan/directions/" + std::to_string(i);
        if (!d[i].is_string()) fail(p, "expected \"+x\" or \"-x\"");
        c.scan.directions.push_back(translate(p, [&] { return mechanics::direction_from_string(d[i].get<std::string>()); }));
      }
    }
    read_number(s, "/scan", "repetitions", c.scan.repetitions);
    read_number(s, "/scan", "preload_depth_um", c.scan.preload_depth_um);
    read_number(s, "/scan", "duration_s", c.scan.duration_s);
    read_number(s, "/scan", "sim_rate_hz", c.scan.sim_rate_hz);
    read_number(s, "/scan", "output_rate_hz", c.scan.output_rate_hz);
  }

  if (root.contains("pipeline")) {
    const auto& s = root.at("pipeline");
    allow_keys(s, "/pipeline", {"resample_rate_hz", "target_rate_hz", "highpass_hz", "min_prominence", "max_peaks"});
    read_number(s, "/pipeline", "resample_rate_hz", c.pipeline.resample_rate_hz);
    read_number(s, "/pipeline", "target_rate_hz", c.pipeline.target_rate_hz);
    read_number(s, "/pipeline", "highpass_hz", c.pipeline.highpass_hz);
    read_number(s, "/pipeline", "min_prominence", c.pipeline.min_prominence);
    read_number(s, "/pipeline", "max_peaks", c.pipeline.max_peaks);
    translate("/pipeline", [&] { features::validate(c.pipeline); });
  }

  if (root.contains("classify")) {
    const auto& s = root.at("classify");
    allow_keys(s, "/classify", {"label", "plan", "folds", "repeats", "k", "normalize", "alpha", "velocities_mm_s"});
    if (s.contains("label")) {
      std::string l;
      read_string(s, "/classify", "label", l);
      c.classify.label = label_from_string(l, "/classify/label");
    }
    if (s.contains("plan")) {
      std::string name;
      read_string(s, "/classify", "plan", name);
      const auto plan = translate("/classify/plan", [&] { return learn::plan_preset(name); });
      c.classify.folds = plan.folds;
      c.classify.repeats = plan.repeats;
    }
    read_number(s, "/classify", "folds", c.classify.folds);
    read_number(s, "/classify", "repeats", c.classify.repeats);
    read_number(s, "/classify", "k", c.classify.k);
    read_number(s, "/classify", "alpha", c.classify.alpha);
    c.classify.velocities_mm_s = read_numbers(s, "/classify", "velocities_mm_s", {});
    if (s.contains("normalize")) {
      const auto& n = s.at("normalize");
      if (!n.is_array() || n.empty()) fail("/classify/normalize", "expected a non-empty array");
      c.classify.normalize.clear();
      for (std::size_t i = 0; i < n.size(); ++i) {
        const std::string p = "/classify/normalize/" + std::to_string(i);
        if (!n[i].is_string()) fail(p, "expected \"fold-safe\" or \"global\"");
        c.classify.normalize.push_back(translate(p, [&] { return features::normalize_mode_from_string(n[i].get<std::string>()); }));
      }
    }
  }

  if (root.contains("ingest")) {
    const auto& s = root.at("ingest");
    allow_keys(s, "/ingest", {"manifest"});
    std::string m;
    read_string(s, "/ingest", "manifest", m);
    if (!m.empty()) {
      std::filesystem::path p(m);
      c.manifest = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Config, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate(const ExperimentConfig& c) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.designs.size(); ++i) {
    if (!ids.insert(c.designs[i].id).second) fail("/designs/" + std::to_string(i) + "/id", "duplicate design id");
  }
  auto positive = [](const std::vector<double>& v, const std::string& p) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) fail(p + "/" + std::to_string(i), "must be positive");
    }
  };
  positive(c.surfaces.wavelengths_mm, "/surfaces/wavelengths_mm");
  positive(c.surfaces.amplitudes_um, "/surfaces/amplitudes_um");
  positive(c.scan.velocities_mm_s, "/scan/velocities_mm_s");
  positive(c.classify.velocities_mm_s, "/classify/velocities_mm_s");
  if (c.surfaces.micro_rms_um < 0.0) fail("/surfaces/micro_rms_um", "must be non-negative");
  if (c.surfaces.micro_rms_um > 0.0 && !(c.surfaces.micro_correlation_mm > 0.0)) {
    fail("/surfaces/micro_correlation_mm", "must be positive");
  }
  if (c.surfaces.resolution_per_mm < surface::kMinResolutionPerMm) {
    fail("/surfaces/resolution_per_mm", "must be at least " + std::to_string(int(surface::kMinResolutionPerMm)));
  }
  if (c.scan.repetitions < 0) fail("/scan/repetitions", "must be non-negative");
  mechanics::ScanConfig sc;
  sc.preload_depth_um = c.scan.preload_depth_um;
  sc.duration_s = c.scan.duration_s;
  sc.sim_rate_hz = c.scan.sim_rate_hz;
  sc.output_rate_hz = c.scan.output_rate_hz;
  translate("/scan", [&] { mechanics::validate(sc); });
  translate("/pipeline", [&] { features::validate(c.pipeline); });
  if (c.classify.folds < 2) fail("/classify/folds", "must be at least 2");
  if (c.classify.repeats < 1) fail("/classify/repeats", "must be at least 1");
  if (c.classify.k < 1) fail("/classify/k", "must be at least 1");
  if (!(c.classify.alpha > 0.0 && c.classify.alpha < 1.0)) fail("/classify/alpha", "must lie in (0, 1)");
}

std::string to_json(const ExperimentConfig& c) {
  json root;
  root["name"] = c.name;
  root["seed"] = c.seed;
  root["designs"] = json::array();
  for (const auto& d : c.designs) {
    root["designs"].push_back(
        {{"id", d.id},
         {"tip", tip_json(d.tip)},
         {"stack",
          {{"epidermis_thickness_mm", d.stack.epidermis_thickness_mm},
           {"dermis_thickness_mm", d.stack.dermis_thickness_mm},
           {"epidermis_modulus_psi", d.stack.epidermis_modulus_psi},
           {"dermis_modulus_psi", d.stack.dermis_modulus_psi}}},
         {"magnet", {{"edge_mm", d.magnet.edge_mm}, {"remanence_t", d.magnet.remanence_t}, {"axis", d.magnet.axis}}},
         {"layout",
          {{"position_mm", d.layout.position_mm},
           {"conversion_ut_per_lsb", d.layout.conversion_ut_per_lsb},
           {"resolution_bits", d.layout.resolution_bits}}}});
  }
  root["surfaces"] = {{"wavelengths_mm", c.surfaces.wavelengths_mm},
                      {"amplitudes_um", c.surfaces.amplitudes_um},
                      {"micro_rms_um", c.surfaces.micro_rms_um},
                      {"micro_correlation_mm", c.surfaces.micro_correlation_mm},
                      {"resolution_per_mm", c.surfaces.resolution_per_mm}};
  std::vector<std::string> dirs;
  for (auto d : c.scan.directions) dirs.push_back(mechanics::to_string(d));
  root["scan"] = {{"velocities_mm_s", c.scan.velocities_mm_s},
                  {"directions", dirs},
                  {"repetitions", c.scan.repetitions},
                  {"preload_depth_um", c.scan.preload_depth_um},
                  {"duration_s", c.scan.duration_s},
                  {"sim_rate_hz", c.scan.sim_rate_hz},
                  {"output_rate_hz", c.scan.output_rate_hz}};
  root["pipeline"] = {{"resample_rate_hz", c.pipeline.resample_rate_hz},
                      {"target_rate_hz", c.pipeline.target_rate_hz},
                      {"highpass_hz", c.pipeline.highpass_hz},
                      {"min_prominence", c.pipeline.min_prominence},
                      {"max_peaks", c.pipeline.max_peaks}};
  std::vector<std::string> modes;
  for (auto m : c.classify.normalize) modes.push_back(features::to_string(m));
  root["classify"] = {{"label", to_string(c.classify.label)}, {"folds", c.classify.folds},
                      {"repeats", c.classify.repeats},         {"k", c.classify.k},
                      {"normalize", modes},                    {"alpha", c.classify.alpha},
                      {"velocities_mm_s", c.classify.velocities_mm_s}};
  if (c.manifest) root["ingest"] = {{"manifest", c.manifest->generic_string()}};
  return root.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng::fnv1a(to_json(config))));
  return buf;
}

std::vector<std::string> preset_names() { return {"initial-survey", "wavelength-sweep", "amplitude-sweep"}; }

ExperimentConfig preset(const std::string& name, std::uint64_t seed) {
  ExperimentConfig c;
  c.name = name;
  c.seed = seed;
  DesignConfig flat;
  flat.id = "flat";
  flat.tip = mechanics::TipGeometry::flat();
  DesignConfig ridged;
  ridged.id = "flat-ridged";
  ridged.tip = mechanics::TipGeometry::flat_ridged();
  c.designs = {flat, ridged};
  c.scan.velocities_mm_s = {25.0, 50.0, 100.0};
  if (name == "initial-survey") {
    c.surfaces.wavelengths_mm = {0.06, 0.24, 0.30, 0.60, 5.98};
    c.surfaces.amplitudes_um = {10.0, 25.0, 50.0, 100.0};
    c.classify.label = LabelBy::Surface;
  } else if (name == "wavelength-sweep") {
    c.surfaces.wavelengths_mm = {0.27, 0.33, 0.36, 0.39, 0.42, 0.45, 0.48, 0.51, 0.54, 0.57};
    c.surfaces.amplitudes_um = {10.0, 25.0, 50.0};
    c.classify.label = LabelBy::Wavelength;
  } else if (name == "amplitude-sweep") {
    c.surfaces.wavelengths_mm = {0.24, 0.30, 0.60};
    c.surfaces.amplitudes_um = {15.0, 20.0, 30.0, 35.0, 40.0, 45.0};
    c.classify.label = LabelBy::Amplitude;
  } else {
    throw Error(ErrorCode::Config, "unknown preset '" + name + "'");
  }
  return c;
}

}  // namespace tactile::cli
