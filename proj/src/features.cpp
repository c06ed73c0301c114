#include "tactile/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "tactile/error.hpp"

namespace tactile::features {

namespace {

constexpr std::array<const char*, 3> kAxes{"x", "y", "z"};
constexpr std::array<const char*, kPerAxis> kStats{
    "time_mean",    "time_p2p",      "time_std",    "time_skew",   "time_kurt",   "spec_centroid_f",
    "spec_std_f",   "spec_skew_f",   "spec_kurt_f", "spec_mean_p", "spec_std_p",  "spec_skew_p",
    "spec_kurt_p",  "peak_count",    "peak_mean_f", "peak_std_f",  "peak_skew_f", "peak_kurt_f",
    "peak_mean_p",  "peak_std_p",    "peak_skew_p", "peak_kurt_p"};
constexpr std::array<Unit, kPerAxis> kUnits{
    Unit::FieldLsb,      Unit::FieldLsb,      Unit::FieldLsb,      Unit::Dimensionless, Unit::Dimensionless,
    Unit::FrequencyHz,   Unit::FrequencyHz,   Unit::Dimensionless, Unit::Dimensionless, Unit::PowerLsb,
    Unit::PowerLsb,      Unit::Dimensionless, Unit::Dimensionless, Unit::Count,         Unit::FrequencyHz,
    Unit::FrequencyHz,   Unit::Dimensionless, Unit::Dimensionless, Unit::PowerLsb,      Unit::PowerLsb,
    Unit::Dimensionless, Unit::Dimensionless};

Moments finish(double mean, double m2, double m3, double m4) {
  Moments m;
  m.mean = mean;
  m.std = std::sqrt(m2);
  if (m2 > 0.0) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt = m4 / (m2 * m2);
  }
  return m;
}

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t lineno) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedInput, "bad number '" + s + "' at line " + std::to_string(lineno));
  }
  return v;
}

int parse_int(const std::string& s, std::size_t lineno) {
  int v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedInput, "bad integer '" + s + "' at line " + std::to_string(lineno));
  }
  return v;
}

const std::array<const char*, 8> kMetaColumns{"run_id", "design", "velocity_mm_s", "direction",
                                               "repetition", "trial", "label", "class"};

}  // namespace

std::string to_string(Unit unit) {
  switch (unit) {
    case Unit::FieldLsb: return "field-LSB";
    case Unit::FrequencyHz: return "frequency-Hz";
    case Unit::PowerLsb: return "power-LSB";
    case Unit::Dimensionless: return "dimensionless";
    case Unit::Count: return "count";
  }
  return "?";
}

const std::array<std::string, kFeatureCount>& slot_names() {
  static const auto names = [] {
    std::array<std::string, kFeatureCount> n;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t s = 0; s < kPerAxis; ++s) n[a * kPerAxis + s] = std::string(kAxes[a]) + "_" + kStats[s];
    }
    return n;
  }();
  return names;
}

Unit slot_unit(std::size_t slot) {
  if (slot >= kFeatureCount) throw Error(ErrorCode::OutOfRange, "feature slot out of range");
  return kUnits[slot % kPerAxis];
}

const std::vector<UnitGroup>& unit_groups() {
  static const auto groups = [] {
    std::vector<UnitGroup> g;
    for (auto u : {Unit::FieldLsb, Unit::FrequencyHz, Unit::PowerLsb, Unit::Dimensionless, Unit::Count}) {
      g.push_back({u, {}});
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) g[static_cast<std::size_t>(slot_unit(i))].slots.push_back(i);
    return g;
  }();
  return groups;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  return finish(mean, m2 / n, m3 / n, m4 / n);
}

Moments weighted_moments(std::span<const double> x, std::span<const double> weights) {
  if (x.size() != weights.size()) throw Error(ErrorCode::DimensionMismatch, "weights and values differ in length");
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    wsum += weights[i];
    mean += weights[i] * x[i];
  }
  if (!(wsum > 0.0)) return {};
  mean /= wsum;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean;
    const double d2 = d * d;
    m2 += weights[i] * d2;
    m3 += weights[i] * d2 * d;
    m4 += weights[i] * d2 * d2;
  }
  return finish(mean, m2 / wsum, m3 / wsum, m4 / wsum);
}

std::array<double, 5> time_features(std::span<const double> values) {
  if (values.size() < 3) throw Error(ErrorCode::TooShort, "time features need at least 3 samples");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const auto m = moments(values);
  return {m.mean, *hi - *lo, m.std, m.skew, m.kurt};
}

SpectrumFeatures spectrum_features(const dsp::PowerSpectrum& spec) {
  if (spec.power.empty() || spec.power.size() != spec.freqs_hz.size()) {
    throw Error(ErrorCode::InvalidArgument, "spectrum must be non-empty with matching frequency axis");
  }
  SpectrumFeatures out;
  double total = 0.0;
  for (double p : spec.power) total += p;
  if (!(total > 0.0)) {
    out.zero_power = true;
    return out;
  }
  const auto f = weighted_moments(spec.freqs_hz, spec.power);
  const auto p = moments(spec.power);
  out.values = {f.mean, f.std, f.skew, f.kurt, p.mean, p.std, p.skew, p.kurt};
  return out;
}

std::array<double, 9> peak_features(std::span<const dsp::SpectralPeak> peaks) {
  std::array<double, 9> out{};
  if (peaks.empty()) return out;
  std::vector<double> f, p;
  for (const auto& pk : peaks) {
    f.push_back(pk.freq_hz);
    p.push_back(pk.power);
  }
  auto mf = moments(f);
  auto mp = moments(p);
  if (peaks.size() < 4) {
    mf.skew = mf.kurt = mp.skew = mp.kurt = 0.0;
  }
  out = {static_cast<double>(peaks.size()), mf.mean, mf.std, mf.skew, mf.kurt, mp.mean, mp.std, mp.skew, mp.kurt};
  return out;
}

void validate(const PipelineParams& params) {
  if (!(params.resample_rate_hz > 0.0) || !(params.target_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "pipeline rates must be positive");
  }
  if (!(params.highpass_hz > 0.0) || params.highpass_hz >= params.target_rate_hz / 2.0) {
    throw Error(ErrorCode::InvalidArgument, "high-pass cutoff must lie in (0, target Nyquist)");
  }
  if (params.min_prominence < 0.0) throw Error(ErrorCode::InvalidArgument, "prominence must be >= 0");
}

dsp::UniformSeries condition(std::span<const double> times_s, std::span<const double> values,
                             const PipelineParams& params) {
  auto series = dsp::resample(times_s, values, params.resample_rate_hz);
  if (series.rate_hz > params.target_rate_hz) series = dsp::downsample(series, params.target_rate_hz);
  if (static_cast<double>(series.values.size()) < series.rate_hz) {
    throw Error(ErrorCode::TooShort, "feature extraction needs at least 1 s of data");
  }
  return dsp::highpass(series, params.highpass_hz);
}

FeatureVector extract(const magnetics::FieldSeries& field, const PipelineParams& params) {
  validate(params);
  const std::size_t n = field.size();
  if (field.bx.size() != n || field.by.size() != n || field.bz.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "field axes differ in length");
  }
  FeatureVector fv;
  std::vector<double> values(n);
  const std::array<const std::vector<std::int32_t>*, 3> axes{&field.bx, &field.by, &field.bz};
  for (std::size_t a = 0; a < 3; ++a) {
    std::transform(axes[a]->begin(), axes[a]->end(), values.begin(), [](std::int32_t c) { return double(c); });
    const auto series = condition(field.times_s, values, params);
    double* slot = fv.values.data() + a * kPerAxis;

    const auto t = time_features(series.values);
    std::copy(t.begin(), t.end(), slot + kTimeOffset);
    const auto spec = dsp::power_spectrum(series);
    const auto s = spectrum_features(spec);
    std::copy(s.values.begin(), s.values.end(), slot + kSpectrumOffset);
    const auto peaks = dsp::find_peaks(spec, params.min_prominence, params.max_peaks);
    const auto p = peak_features(peaks);
    std::copy(p.begin(), p.end(), slot + kPeakOffset);
  }
  return fv;
}

void validate(const LabeledDataset& data) {
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& r = data.rows[i];
    if (r.label < 0 || static_cast<std::size_t>(r.label) >= data.class_names.size()) {
      throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i) + " has an unknown label");
    }
    if (r.features.layout != data.rows.front().features.layout) {
      throw Error(ErrorCode::SchemaMismatch, "rows mix feature layouts '" + data.rows.front().features.layout +
                                                 "' and '" + r.features.layout + "'");
    }
  }
}

std::string to_string(NormalizeMode mode) { return mode == NormalizeMode::Global ? "global" : "fold-safe"; }

NormalizeMode normalize_mode_from_string(const std::string& name) {
  if (name == "global") return NormalizeMode::Global;
  if (name == "fold-safe") return NormalizeMode::FoldSafe;
  throw Error(ErrorCode::InvalidArgument, "unknown normalize mode '" + name + "'");
}

Normalizer Normalizer::fit(const LabeledDataset& data, std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw Error(ErrorCode::InvalidArgument, "normalization needs at least one fit row");
  Normalizer n;
  n.min_.fill(std::numeric_limits<double>::infinity());
  n.max_.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t r : fit_rows) {
    if (r >= data.rows.size()) throw Error(ErrorCode::OutOfRange, "fit row index out of range");
    const auto& v = data.rows[r].features.values;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto g = static_cast<std::size_t>(slot_unit(i));
      n.min_[g] = std::min(n.min_[g], v[i]);
      n.max_[g] = std::max(n.max_[g], v[i]);
    }
  }
  return n;
}

FeatureVector Normalizer::apply(const FeatureVector& v, bool clamp) const {
  FeatureVector out;
  out.layout = v.layout;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto g = static_cast<std::size_t>(slot_unit(i));
    const double span = max_[g] - min_[g];
    double y = span > 0.0 ? (v.values[i] - min_[g]) / span : 0.5;
    if (clamp) y = std::clamp(y, 0.0, 1.0);
    out.values[i] = y;
  }
  return out;
}

LabeledDataset normalize(const LabeledDataset& data, std::span<const std::size_t> fit_rows, bool clamp) {
  validate(data);
  const auto norm = Normalizer::fit(data, fit_rows);
  LabeledDataset out = data;
  for (auto& r : out.rows) r.features = norm.apply(r.features, clamp);
  return out;
}

void write_table(const LabeledDataset& data, std::ostream& out, const std::vector<std::string>& comments) {
  validate(data);
  const std::string layout = data.rows.empty() ? kLayoutVersion : data.rows.front().features.layout;
  out << "#layout=" << layout << '\n';
  for (const auto& c : comments) out << '#' << c << '\n';
  for (std::size_t i = 0; i < kMetaColumns.size(); ++i) out << (i ? "," : "") << kMetaColumns[i];
  for (const auto& name : slot_names()) out << ',' << name;
  out << '\n';
  for (const auto& r : data.rows) {
    const auto& cls = data.class_names[static_cast<std::size_t>(r.label)];
    for (const auto* s : {&r.meta.run_id, &r.meta.design, &r.meta.direction, &cls}) {
      if (s->find_first_of(",\n#") != std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "table text field '" + *s + "' contains a separator");
      }
    }
    out << r.meta.run_id << ',' << r.meta.design << ',' << format_double(r.meta.velocity_mm_s) << ','
        << r.meta.direction << ',' << r.meta.repetition << ',' << r.meta.trial << ',' << r.label << ',' << cls;
    for (double v : r.features.values) out << ',' << format_double(v);
    out << '\n';
  }
}

LabeledDataset read_table(std::istream& in) {
  LabeledDataset data;
  std::string layout;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::map<int, std::string> names;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#layout=", 0) == 0) layout = line.substr(8);
      continue;
    }
    const auto cells = split(line);
    if (!header) {
      if (cells.size() != kMetaColumns.size() + kFeatureCount) {
        throw Error(ErrorCode::SchemaMismatch, "feature table has " + std::to_string(cells.size()) + " columns");
      }
      for (std::size_t i = 0; i < kMetaColumns.size(); ++i) {
        if (cells[i] != kMetaColumns[i]) throw Error(ErrorCode::SchemaMismatch, "unexpected column '" + cells[i] + "'");
      }
      for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (cells[kMetaColumns.size() + i] != slot_names()[i]) {
          throw Error(ErrorCode::SchemaMismatch, "unexpected feature column '" + cells[kMetaColumns.size() + i] + "'");
        }
      }
      if (layout != kLayoutVersion) {
        throw Error(ErrorCode::SchemaMismatch, "feature layout '" + layout + "' is not " + kLayoutVersion);
      }
      header = true;
      continue;
    }
    if (cells.size() != kMetaColumns.size() + kFeatureCount) {
      throw Error(ErrorCode::MalformedInput, "wrong column count at line " + std::to_string(lineno));
    }
    Row r;
    r.meta.run_id = cells[0];
    r.meta.design = cells[1];
    r.meta.velocity_mm_s = parse_double(cells[2], lineno);
    r.meta.direction = cells[3];
    r.meta.repetition = parse_int(cells[4], lineno);
    r.meta.trial = parse_int(cells[5], lineno);
    r.label = parse_int(cells[6], lineno);
    if (r.label < 0) throw Error(ErrorCode::MalformedInput, "negative label at line " + std::to_string(lineno));
    auto [it, inserted] = names.emplace(r.label, cells[7]);
    if (!inserted && it->second != cells[7]) {
      throw Error(ErrorCode::MalformedInput, "label " + cells[6] + " maps to two class names");
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      r.features.values[i] = parse_double(cells[kMetaColumns.size() + i], lineno);
    }
    data.rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorCode::MalformedInput, "feature table has no header");
  if (!names.empty()) {
    data.class_names.resize(static_cast<std::size_t>(names.rbegin()->first) + 1);
    for (auto& [k, v] : names) data.class_names[static_cast<std::size_t>(k)] = v;
  }
  return data;
}

}  // namespace tactile::features
