#include "pbsid/cli.hpp"

#include "pbsid/error.hpp"
#include "pbsid/io.hpp"
#include "pbsid/preprocess.hpp"
#include "pbsid/residual.hpp"
#include "pbsid/select.hpp"
#include "pbsid/simulate.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>

namespace pbsid::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- helpers

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_or_nulls(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

void check_compatible(const core::SignalDataset& a, const core::SignalDataset& b,
                      const std::string& a_name, const std::string& b_name) {
  if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim()) {
    std::ostringstream os;
    os << "channel mismatch: " << a_name << " has m=" << a.input_dim() << ", r=" << a.output_dim()
       << "; " << b_name << " has m=" << b.input_dim() << ", r=" << b.output_dim();
    throw DataError(os.str());
  }
}

enum class OffsetMode { none, first, mean };

std::optional<Vector> output_offset(const core::SignalDataset& ds, OffsetMode mode) {
  if (mode == OffsetMode::none) return std::nullopt;
  if (ds.samples() == 0) throw DataError("cannot compute an offset from an empty dataset");
  if (mode == OffsetMode::first) return Vector(ds.outputs.col(0));
  return Vector(ds.outputs.rowwise().mean());
}

core::SignalDataset apply_offsets(core::SignalDataset ds, const io::StoredModel& stored) {
  if (stored.input_offset) ds.inputs.colwise() -= *stored.input_offset;
  if (stored.output_offset) ds.outputs.colwise() -= *stored.output_offset;
  return ds;
}

// ---------------------------------------------------------------- simulate

struct SimulationConfig {
  simulate::RodConfig rod;
  simulate::SensorNoise noise{0.05};  // thermocouple-level noise keeps the regressor full rank
  double sample_period = 96.0;
  Index identification_samples = 180;
  Index validation_samples = 120;
  double innovation_sigma = 0.0;
};

template <typename T>
void read_field(const json& obj, const char* key, T& target, const std::string& scope) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError("invalid config: field " + scope + key + " has the wrong type");
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& scope) {
  if (!obj.is_object()) throw DataError("invalid config: " + scope + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
    if (!ok) throw DataError("invalid config: unknown field " + scope + key);
  }
}

SimulationConfig parse_simulation_config(const json& j) {
  SimulationConfig cfg;
  reject_unknown(j,
                 {"sample_period", "identification_samples", "validation_samples", "rod", "noise",
                  "innovation_sigma"},
                 "");
  read_field(j, "sample_period", cfg.sample_period, "");
  read_field(j, "identification_samples", cfg.identification_samples, "");
  read_field(j, "validation_samples", cfg.validation_samples, "");
  read_field(j, "innovation_sigma", cfg.innovation_sigma, "");
  if (j.contains("rod")) {
    const auto& r = j["rod"];
    reject_unknown(r,
                   {"length", "diameter", "conductivity", "density", "specific_heat",
                    "convection_coeff", "ambient", "heater_positions", "heater_width",
                    "heater_max_power", "sensor_positions", "grid_points", "dt"},
                   "rod.");
    auto& rod = cfg.rod;
    read_field(r, "length", rod.length, "rod.");
    read_field(r, "diameter", rod.diameter, "rod.");
    read_field(r, "conductivity", rod.conductivity, "rod.");
    read_field(r, "density", rod.density, "rod.");
    read_field(r, "specific_heat", rod.specific_heat, "rod.");
    read_field(r, "convection_coeff", rod.convection_coeff, "rod.");
    read_field(r, "ambient", rod.ambient, "rod.");
    read_field(r, "heater_positions", rod.heater_positions, "rod.");
    read_field(r, "heater_width", rod.heater_width, "rod.");
    read_field(r, "heater_max_power", rod.heater_max_power, "rod.");
    read_field(r, "sensor_positions", rod.sensor_positions, "rod.");
    read_field(r, "grid_points", rod.grid_points, "rod.");
    read_field(r, "dt", rod.dt, "rod.");
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    reject_unknown(n, {"sigma", "hum_amplitude", "hum_hz"}, "noise.");
    read_field(n, "sigma", cfg.noise.sigma, "noise.");
    read_field(n, "hum_amplitude", cfg.noise.hum_amplitude, "noise.");
    read_field(n, "hum_hz", cfg.noise.hum_hz, "noise.");
  }
  if (!(cfg.sample_period > 0.0)) throw DataError("invalid config: field sample_period must be > 0");
  if (cfg.identification_samples < 0) {
    throw DataError("invalid config: field identification_samples must be >= 0");
  }
  if (cfg.validation_samples < 0) {
    throw DataError("invalid config: field validation_samples must be >= 0");
  }
  if (cfg.noise.sigma < 0.0) throw DataError("invalid config: field noise.sigma must be >= 0");
  if (cfg.innovation_sigma < 0.0) {
    throw DataError("invalid config: field innovation_sigma must be >= 0");
  }
  cfg.rod.validate();
  return cfg;
}

int cmd_simulate(const std::optional<std::string>& config_path,
                 const std::optional<std::string>& model_path, std::uint64_t seed,
                 const std::string& out_dir, std::ostream& out) {
  SimulationConfig cfg;
  if (config_path) {
    json j;
    try {
      j = json::parse(io::read_text(*config_path));
    } catch (const json::parse_error& e) {
      throw DataError("invalid config " + *config_path + ": " + e.what());
    }
    cfg = parse_simulation_config(j);
  }
  if (!fs::is_directory(out_dir)) throw DataError("output directory does not exist: " + out_dir);

  const Index total = cfg.identification_samples + cfg.validation_samples;
  core::SignalDataset all;
  // separate streams for excitation and noise
  const std::uint64_t noise_seed = seed ^ 0x9E3779B97F4A7C15ULL;
  if (model_path) {
    const io::StoredModel stored = io::load_model(*model_path);
    const Matrix u = simulate::prbs_like_inputs(stored.model.input_dim(), total, seed);
    all = simulate::simulate_lti(stored.model, Vector::Zero(stored.model.order()), u,
                                 cfg.innovation_sigma, noise_seed, cfg.sample_period);
  } else {
    const auto m = static_cast<Index>(cfg.rod.heater_positions.size());
    const Matrix v = simulate::prbs_like_inputs(m, total, seed);
    simulate::SensorNoise noise = cfg.noise;
    noise.seed = noise_seed;
    all = simulate::simulate_rod(cfg.rod, v, cfg.sample_period, noise);
  }
  const fs::path dir(out_dir);
  io::save_csv(dir / "identification.csv", all.slice(0, cfg.identification_samples));
  io::save_csv(dir / "validation.csv",
               all.slice(cfg.identification_samples, cfg.validation_samples));
  out << "wrote " << (dir / "identification.csv").string() << " (" << cfg.identification_samples
      << " samples) and " << (dir / "validation.csv").string() << " (" << cfg.validation_samples
      << " samples)\n";
  return kOk;
}

// ---------------------------------------------------------------- identify

struct IdentifyArgs {
  std::optional<std::string> ident;
  std::optional<std::string> valid;
  std::optional<std::string> replay;
  Index p_max = 40;
  Index n_max = 40;
  std::optional<Index> f_max;
  std::string method = "A";
  std::optional<Index> h;
  OffsetMode offset = OffsetMode::none;
  varx::RankPolicy rank_policy = varx::RankPolicy::strict;
  std::string model_out = "model.json";
  std::string report_out = "report.json";
};

int cmd_identify(const IdentifyArgs& args, std::ostream& out, std::ostream& err) {
  fs::path ident_path;
  fs::path valid_path;
  if (args.replay) {
    std::tie(ident_path, valid_path) = io::find_replay_pair(*args.replay);
  } else {
    ident_path = *args.ident;
    valid_path = *args.valid;
  }
  core::SignalDataset ident = io::load_csv(ident_path);
  core::SignalDataset valid = io::load_csv(valid_path);
  ident.validate();
  valid.validate();
  check_compatible(ident, valid, "identification", "validation");

  io::StoredModel stored;
  stored.output_offset = output_offset(ident, args.offset);
  const std::string ident_hash = io::dataset_hash(ident);
  const std::string valid_hash = io::dataset_hash(valid);
  ident = apply_offsets(std::move(ident), stored);
  valid = apply_offsets(std::move(valid), stored);

  select::PipelineOptions opts;
  opts.p_max = args.p_max;
  opts.n_max = args.n_max;
  opts.f_max = args.f_max;
  opts.grid.method = select::method_from_string(args.method);
  opts.grid.h = args.h;
  opts.grid.varx.rank_policy = args.rank_policy;
  const select::PipelineResult result = select::identify(ident, valid, opts);
  const auto& sel = result.selection;
  const auto& best = sel.best();

  for (const auto& w : sel.warnings) err << "warning: " << w << '\n';

  stored.model = sel.best_model;
  stored.provenance.dataset_hash = ident_hash;
  stored.provenance.tool_version = kToolVersion;
  stored.provenance.method = select::to_char(sel.method);
  stored.provenance.scores = {
      {"p", sel.p},
      {"n", best.pair.n},
      {"f", best.pair.f},
      {"relative_error", number_or_null(best.relative_error)},
      {"vaf", vector_or_nulls(best.vaf)},
  };

  json report;
  report["tool_version"] = kToolVersion;
  report["method"] = std::string(1, select::to_char(sel.method));
  report["identification"] = {{"path", ident_path.string()},
                              {"samples", ident.samples()},
                              {"hash", ident_hash}};
  report["validation"] = {{"path", valid_path.string()},
                          {"samples", valid.samples()},
                          {"hash", valid_hash}};
  json aic = json::array();
  for (const auto& e : result.aic.entries) {
    aic.push_back({{"p", e.p},
                   {"aic", number_or_null(e.aic)},
                   {"feasible", e.feasible},
                   {"degenerate", e.degenerate},
                   {"rank_deficient", e.rank_deficient}});
  }
  report["aic"] = std::move(aic);
  report["p_hat"] = sel.p;
  report["n_hat"] = best.pair.n;
  report["f_hat"] = best.pair.f;
  report["h"] = best.h;
  report["relative_error"] = number_or_null(best.relative_error);
  report["vaf"] = vector_or_nulls(best.vaf);
  report["singular_values"] = vector_or_nulls(sel.singular_values);
  json grid = json::array();
  for (const auto& s : sel.scores) {
    json entry = {{"n", s.pair.n},
                  {"f", s.pair.f},
                  {"relative_error", number_or_null(s.relative_error)},
                  {"ok", s.ok}};
    if (!s.failure.empty()) entry["failure"] = s.failure;
    grid.push_back(std::move(entry));
  }
  report["scores"] = std::move(grid);
  report["warnings"] = sel.warnings;

  io::save_model(args.model_out, stored);
  io::write_text_atomic(args.report_out, io::dump(report));

  out << "p_hat=" << sel.p << " n_hat=" << best.pair.n << " f_hat=" << best.pair.f
      << " method=" << select::to_char(sel.method) << " e=" << io::format_double(best.relative_error)
      << '\n';
  out << "vaf%=";
  for (Index i = 0; i < best.vaf.size(); ++i) {
    out << (i ? "," : "") << io::format_double(best.vaf[i]);
  }
  out << '\n';
  return kOk;
}

// ---------------------------------------------------------------- residuals

struct ResidualArgs {
  std::string model;
  std::string valid;
  std::optional<std::string> method;
  Index max_lag = 20;
  double threshold = 0.1;
  std::optional<Index> h;
  std::string out_csv = "residuals.csv";
};

int cmd_residuals(const ResidualArgs& args, std::ostream& out, std::ostream& err) {
  const io::StoredModel stored = io::load_model(args.model);
  core::SignalDataset valid = io::load_csv(args.valid);
  valid.validate();
  const auto& mdl = stored.model;
  if (mdl.input_dim() != valid.input_dim() || mdl.output_dim() != valid.output_dim()) {
    std::ostringstream os;
    os << "dimension mismatch: model expects m=" << mdl.input_dim() << " inputs and r="
       << mdl.output_dim() << " outputs; validation data has m=" << valid.input_dim()
       << " and r=" << valid.output_dim();
    throw DataError(os.str());
  }
  valid = apply_offsets(std::move(valid), stored);
  const select::Method method =
      select::method_from_string(args.method.value_or(std::string(1, stored.provenance.method)));
  const Index h = args.h.value_or(
      select::default_initial_window(mdl.order(), mdl.output_dim(), valid.samples()));
  const select::Prediction pred = select::predict(mdl, valid, method, h);
  for (const auto& w : pred.warnings) err << "warning: " << w << '\n';
  const Matrix eps = residual::residual_sequence(valid.outputs, pred.outputs);

  // variance floor relative to the signal level: an exact model leaves round-off only
  const double rms = std::sqrt(valid.outputs.squaredNorm() / static_cast<double>(valid.outputs.size()));
  const double floor = std::pow(1e-10 * std::max(rms, 1e-300), 2);

  json verdict;
  verdict["method"] = std::string(1, select::to_char(method));
  residual::ResidualReport rep;
  try {
    rep = residual::autocorrelation(eps, args.max_lag, floor);
  } catch (const DataError& e) {
    verdict["status"] = "rejected";
    verdict["reason"] = e.what();
    out << io::dump(verdict);
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  const residual::WhitenessVerdict v = residual::whiteness_verdict(rep, args.threshold);

  std::ostringstream csv;
  csv << "lag,b,s,gamma,bound,violation\n";
  const std::string bound = io::format_double(rep.bound);
  for (Index i = 0; i <= rep.max_lag; ++i) {
    const Matrix& g = rep.autocorrelation[static_cast<std::size_t>(i)];
    for (Index b = 0; b < g.rows(); ++b) {
      for (Index s = 0; s < g.cols(); ++s) {
        const bool violation = i >= 1 && std::abs(g(b, s)) > rep.bound;
        csv << i << ',' << b + 1 << ',' << s + 1 << ',' << io::format_double(g(b, s)) << ','
            << bound << ',' << (violation ? 1 : 0) << '\n';
      }
    }
  }
  io::write_text_atomic(args.out_csv, csv.str());

  verdict["status"] = v.pass ? "pass" : "fail";
  verdict["n1"] = rep.n1;
  verdict["max_lag"] = rep.max_lag;
  verdict["bound"] = rep.bound;
  verdict["threshold"] = v.threshold;
  verdict["overall_fraction"] = v.overall_fraction;
  verdict["violations"] = rep.violations.size();
  json flagged = json::array();
  for (const auto& [b, s] : v.flagged) flagged.push_back({b + 1, s + 1});
  verdict["flagged"] = std::move(flagged);
  verdict["relative_error"] = number_or_null(select::relative_error(valid.outputs, pred.outputs));
  out << io::dump(verdict);
  return kOk;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string in;
  std::string out;
  std::optional<double> cutoff;
  int order = 4;
  bool no_antialias = false;
  bool outliers = false;
  std::size_t outlier_window = 11;
  double outlier_sigmas = 3.0;
  std::optional<std::string> detrend;
  std::optional<double> downsample_period;
  std::optional<Index> downsample_factor;
  std::optional<std::string> psd_out;
  std::optional<std::size_t> psd_segment;
  double psd_overlap = 0.5;
};

void map_outputs(core::SignalDataset& ds,
                 const std::function<std::vector<double>(std::span<const double>)>& fn) {
  for (Index j = 0; j < ds.output_dim(); ++j) {
    const Vector row = ds.outputs.row(j).transpose();
    const auto y = fn(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    ds.outputs.row(j) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), static_cast<Index>(y.size()));
  }
}

int cmd_preprocess(const PreprocessArgs& args, std::ostream& out) {
  const bool transform = args.cutoff || args.outliers || args.detrend || args.downsample_period ||
                         args.downsample_factor;
  if (!transform && !args.psd_out) {
    io::write_text_atomic(args.out, io::read_text(args.in));
    out << "copied " << args.in << " to " << args.out << '\n';
    return kOk;
  }
  core::SignalDataset ds = io::load_csv(args.in);
  ds.validate();
  const double fs_hz = 1.0 / ds.sample_period;

  if (args.outliers) {
    map_outputs(ds, [&](std::span<const double> y) {
      return preprocess::remove_outliers(y, args.outlier_window, args.outlier_sigmas);
    });
  }
  // downsampling without an explicit filter reuses the default 0.2 Hz low-pass
  std::optional<double> cutoff = args.cutoff;
  const bool downsampling = args.downsample_period || args.downsample_factor;
  if (!cutoff && downsampling && !args.no_antialias && preprocess::FilterSpec{}.cutoff_hz < fs_hz / 2.0) {
    cutoff = preprocess::FilterSpec{}.cutoff_hz;
  }
  if (cutoff) {
    preprocess::FilterSpec spec;
    spec.order = args.order;
    spec.cutoff_hz = *cutoff;
    spec.sample_rate_hz = fs_hz;
    spec.validate();
    std::size_t transient = 0;
    map_outputs(ds, [&](std::span<const double> y) {
      auto f = preprocess::butterworth_lowpass(y, spec);
      transient = f.transient_samples;
      return f.values;
    });
    out << "filter transient: " << transient << " samples\n";
  }
  if (args.detrend) {
    preprocess::DetrendMode mode;
    if (*args.detrend == "mean") {
      mode = preprocess::DetrendMode::mean;
    } else if (*args.detrend == "linear") {
      mode = preprocess::DetrendMode::linear;
    } else {
      throw DataError("unknown detrend mode '" + *args.detrend + "' (expected mean or linear)");
    }
    map_outputs(ds, [&](std::span<const double> y) { return preprocess::detrend(y, mode); });
  }
  if (args.psd_out) {
    const auto n = static_cast<std::size_t>(ds.samples());
    const std::size_t seg = args.psd_segment.value_or(preprocess::default_segment_length(n));
    std::vector<preprocess::PowerSpectrum> spectra;
    for (Index j = 0; j < ds.output_dim(); ++j) {
      const Vector row = ds.outputs.row(j).transpose();
      spectra.push_back(preprocess::psd_welch(
          std::span<const double>(row.data(), n), fs_hz, seg, args.psd_overlap));
    }
    std::ostringstream csv;
    csv << "f";
    for (Index j = 0; j < ds.output_dim(); ++j) {
      csv << ',' << ds.labels[static_cast<std::size_t>(ds.input_dim() + j)];
    }
    csv << '\n';
    const std::size_t bins = spectra.empty() ? 0 : spectra.front().frequencies.size();
    for (std::size_t b = 0; b < bins; ++b) {
      csv << io::format_double(spectra.front().frequencies[b]);
      for (const auto& s : spectra) csv << ',' << io::format_double(s.power[b]);
      csv << '\n';
    }
    io::write_text_atomic(*args.psd_out, csv.str());
  }
  if (args.downsample_period && args.downsample_factor) {
    throw DataError("give either --downsample-period or --downsample-factor, not both");
  }
  if (args.downsample_period) {
    ds = preprocess::downsample(ds,
                                preprocess::downsample_factor_for_period(ds, *args.downsample_period));
  } else if (args.downsample_factor) {
    ds = preprocess::downsample(ds, *args.downsample_factor);
  }
  io::save_csv(args.out, ds);
  out << "wrote " << args.out << " (" << ds.samples() << " samples, period "
      << io::format_double(ds.sample_period) << " s)\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predictor-based subspace identification of MIMO state-space models", "pbsid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate identification and validation CSVs");
  std::optional<std::string> sim_config;
  std::optional<std::string> sim_model;
  std::uint64_t seed = 7;
  std::string out_dir = ".";
  sim->add_option("--config", sim_config, "Simulation config JSON (defaults: heated rod)")
      ->check(CLI::ExistingFile);
  sim->add_option("--model", sim_model, "Innovation model JSON; simulates it instead of the rod")
      ->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Random seed")->capture_default_str();
  sim->add_option("--out-dir", out_dir, "Directory for identification.csv and validation.csv")
      ->capture_default_str();

  // identify
  auto* idn = app.add_subcommand("identify", "Estimate a state-space model");
  IdentifyArgs ia;
  std::string offset = "none";
  std::string rank_policy = "strict";
  auto* ident_opt = idn->add_option("--ident", ia.ident, "Identification CSV")->check(CLI::ExistingFile);
  auto* valid_opt = idn->add_option("--valid", ia.valid, "Validation CSV")->check(CLI::ExistingFile);
  auto* replay_opt = idn->add_option("--replay", ia.replay, "Directory with a published dataset pair");
  ident_opt->needs(valid_opt)->excludes(replay_opt);
  valid_opt->needs(ident_opt)->excludes(replay_opt);
  idn->add_option("--p-max", ia.p_max, "Largest past window scanned by AIC")
      ->capture_default_str()->check(CLI::PositiveNumber);
  idn->add_option("--n-max", ia.n_max, "Largest state order in the grid")
      ->capture_default_str()->check(CLI::PositiveNumber);
  idn->add_option("--f-max", ia.f_max, "Largest future window (default: p_hat)")
      ->check(CLI::PositiveNumber);
  idn->add_option("--method", ia.method, "Validation method A, B or C")
      ->capture_default_str()->check(CLI::IsMember({"A", "B", "C", "a", "b", "c"}));
  idn->add_option("--init-window", ia.h, "Initial-state window length")->check(CLI::PositiveNumber);
  idn->add_option("--offset", offset, "Output offset removed before identification")
      ->capture_default_str()->check(CLI::IsMember({"none", "first", "mean"}));
  idn->add_option("--rank-policy", rank_policy, "Rank-deficient VARX regressor handling")
      ->capture_default_str()->check(CLI::IsMember({"strict", "min-norm"}));
  idn->add_option("--model-out", ia.model_out, "Model JSON path")->capture_default_str();
  idn->add_option("--report-out", ia.report_out, "Report JSON path")->capture_default_str();

  // residuals
  auto* res = app.add_subcommand("residuals", "Residual autocorrelation and whiteness test");
  ResidualArgs ra;
  res->add_option("--model", ra.model, "Model JSON")->required()->check(CLI::ExistingFile);
  res->add_option("--valid", ra.valid, "Validation CSV")->required()->check(CLI::ExistingFile);
  res->add_option("--method", ra.method, "Prediction method (default: the model's)")
      ->check(CLI::IsMember({"A", "B", "C", "a", "b", "c"}));
  res->add_option("--max-lag", ra.max_lag, "Largest lag l1")
      ->capture_default_str()->check(CLI::PositiveNumber);
  res->add_option("--threshold", ra.threshold, "Allowed violation fraction")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  res->add_option("--init-window", ra.h, "Initial-state window length")->check(CLI::PositiveNumber);
  res->add_option("--out", ra.out_csv, "Autocorrelation CSV path")->capture_default_str();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Filter, clean and downsample raw data");
  PreprocessArgs pa;
  pre->add_option("--in", pa.in, "Raw CSV")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pa.out, "Conditioned CSV")->required();
  pre->add_option("--cutoff", pa.cutoff, "Butterworth low-pass cutoff, Hz")
      ->check(CLI::PositiveNumber);
  pre->add_option("--order", pa.order, "Butterworth order")
      ->capture_default_str()->check(CLI::Range(1, 20));
  pre->add_flag("--no-antialias", pa.no_antialias,
                "Downsample without the default 0.2 Hz low-pass");
  pre->add_flag("--outliers", pa.outliers, "Replace outliers (Hampel filter)");
  pre->add_option("--outlier-window", pa.outlier_window, "Hampel window length")
      ->capture_default_str();
  pre->add_option("--outlier-sigmas", pa.outlier_sigmas, "Hampel threshold")
      ->capture_default_str();
  pre->add_option("--detrend", pa.detrend, "Remove mean or linear trend")
      ->check(CLI::IsMember({"mean", "linear"}));
  pre->add_option("--downsample-period", pa.downsample_period, "Target sample period, s")
      ->check(CLI::PositiveNumber);
  pre->add_option("--downsample-factor", pa.downsample_factor, "Keep every k-th sample")
      ->check(CLI::PositiveNumber);
  pre->add_option("--psd-out", pa.psd_out, "Welch PSD CSV of the conditioned outputs");
  pre->add_option("--psd-segment", pa.psd_segment, "Welch segment length");
  pre->add_option("--psd-overlap", pa.psd_overlap, "Welch segment overlap fraction")
      ->capture_default_str()->check(CLI::Range(0.0, 0.95));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (*idn && !ia.ident && !ia.replay) {
      throw CLI::RequiredError("identify needs --ident/--valid or --replay");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_config, sim_model, seed, out_dir, out);
    if (*idn) {
      ia.offset = offset == "first" ? OffsetMode::first
                  : offset == "mean" ? OffsetMode::mean
                                     : OffsetMode::none;
      ia.rank_policy =
          rank_policy == "min-norm" ? varx::RankPolicy::minimum_norm : varx::RankPolicy::strict;
      std::transform(ia.method.begin(), ia.method.end(), ia.method.begin(), ::toupper);
      return cmd_identify(ia, out, err);
    }
    if (*res) {
      if (ra.method) std::transform(ra.method->begin(), ra.method->end(), ra.method->begin(), ::toupper);
      return cmd_residuals(ra, out, err);
    }
    if (*pre) return cmd_preprocess(pa, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pbsid::cli
