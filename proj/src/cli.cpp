#include "psmm/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <ostream>
#include <sstream>

#include "psmm/error.hpp"
#include "psmm/io.hpp"
#include "psmm/matnorm.hpp"
#include "psmm/pipeline.hpp"
#include "psmm/synth.hpp"

namespace psmm::cli {

namespace {

std::optional<int> parse_rank(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size() && v >= 1,
          std::string(flag) + " must be 'auto' or a positive integer (got '" + text + "')");
  return v;
}

std::vector<Eigen::Index> parse_grid(const std::string& text, const char* flag) {
  auto to_int = [&](std::string_view s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size() && v >= 1,
            std::string(flag) + ": cannot parse '" + std::string(s) + "'");
    return static_cast<Eigen::Index>(v);
  };
  std::vector<Eigen::Index> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string_view> parts;
    std::string_view rest(text);
    for (auto pos = rest.find(':'); pos != std::string_view::npos; pos = rest.find(':')) {
      parts.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    parts.push_back(rest);
    require(parts.size() == 3, std::string(flag) + " range must be start:stop:step");
    const auto start = to_int(parts[0]);
    const auto stop = to_int(parts[1]);
    const auto step = to_int(parts[2]);
    require(start <= stop, std::string(flag) + " range must have start <= stop");
    for (auto v = start; v <= stop; v += step) out.push_back(v);
    return out;
  }
  std::string_view rest(text);
  while (true) {
    const auto pos = rest.find(',');
    out.push_back(to_int(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return out;
}

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path == "-")
    out << contents;
  else
    io::write_file(path, contents);
}

std::string json_text(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

struct FitArgs {
  std::string input;
  std::string output = "-";
  int slices = 10;
  double lambda = 100.0;
  std::string r1 = "auto";
  std::string r2 = "auto";
  std::vector<std::string> mode_ranks;
  bool symmetric = false;
  double tol = 1e-6;
  int max_iter = 100;
  int restarts = 2;
  std::uint64_t seed = 0;
  std::string method = "psmm";
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  PsmmConfig config;
  config.slices = a.slices;
  config.lambda = a.lambda;
  config.r1 = parse_rank(a.r1, "--r1");
  config.r2 = parse_rank(a.r2, "--r2");
  for (const auto& r : a.mode_ranks) config.mode_ranks.push_back(parse_rank(r, "--mode-rank"));
  config.symmetric = a.symmetric;
  config.smm_tol = a.tol;
  config.smm_max_iter = a.max_iter;
  config.restarts = a.restarts;
  config.seed = a.seed;
  config.validate();
  const Method method = parse_method(a.method);

  const TensorDataset data = io::read_dataset(a.input);
  require(data.has_responses(), "fit needs a response column");
  nlohmann::json doc;
  if (data.order() == 2) {
    const MatrixDataset m = data.to_matrices();
    doc = io::estimate_to_json(method == Method::Psmm ? fit_psmm(m, config)
                                                      : fit_psvm_baseline(m, config));
    doc["method"] = to_string(method);
  } else {
    require(method == Method::Psmm, "the vectorized baseline needs matrix input");
    doc = io::estimate_to_json(fit_pstm(data, config));
    doc["method"] = "pstm";
  }
  emit(a.output, json_text(doc), out);
  return kOk;
}

std::string reduced_header(const std::vector<Eigen::Index>& dims) {
  std::string header = "sample_index";
  const Eigen::Index total = product(dims);
  std::vector<Eigen::Index> idx(dims.size(), 1);
  for (Eigen::Index c = 0; c < total; ++c) {
    header += ",v";
    for (auto i : idx) header += "_" + std::to_string(i);
    for (std::size_t k = dims.size(); k-- > 0;) {
      if (++idx[k] <= dims[k]) break;
      idx[k] = 1;
    }
  }
  return header;
}

// Row-major traversal of a column-major tensor.
void append_row_major(std::string& line, const Tensor& t) {
  const auto& dims = t.dims();
  std::vector<Eigen::Index> idx(dims.size(), 0);
  for (Eigen::Index c = 0; c < t.size(); ++c) {
    line += ',' + io::format_double(t(idx));
    for (std::size_t k = dims.size(); k-- > 0;) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
}

int cmd_reduce(const std::string& input, const std::string& model, const std::string& output,
               std::ostream& out) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_file(model));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, std::string("model file is not valid JSON: ") + e.what());
  }
  const io::AnyEstimate estimate = io::estimate_from_json(doc);
  const TensorDataset data = io::read_dataset(input);

  std::ostringstream csv;
  if (const auto* est = std::get_if<SubspaceEstimate>(&estimate)) {
    require(data.order() == 2, "matrix estimate needs order-2 input", ErrorKind::DimensionMismatch);
    const ReducedFeatures reduced = reduce(data.to_matrices(), *est);
    const auto& first = reduced.coordinates.front();
    std::string header = reduced_header({first.rows(), first.cols()});
    if (reduced.symmetric_triples) header += ",v1,v2,v3";
    csv << header << '\n';
    for (std::size_t i = 0; i < reduced.coordinates.size(); ++i) {
      std::string line = std::to_string(i);
      append_row_major(line, Tensor::from_matrix(reduced.coordinates[i]));
      if (reduced.symmetric_triples)
        for (double v : (*reduced.symmetric_triples)[i]) line += ',' + io::format_double(v);
      csv << line << '\n';
    }
  } else {
    const auto& test = std::get<TensorSubspaceEstimate>(estimate);
    const std::vector<Tensor> reduced = reduce(data, test);
    csv << reduced_header(reduced.front().dims()) << '\n';
    for (std::size_t i = 0; i < reduced.size(); ++i) {
      std::string line = std::to_string(i);
      append_row_major(line, reduced[i]);
      csv << line << '\n';
    }
  }
  emit(output, csv.str(), out);
  return kOk;
}

struct SimulateArgs {
  int model = 1;
  long long n = 100;
  long long d = 5;
  double noise_sd = 0.2;
  std::uint64_t seed = 0;
  std::string output;
  std::string truth;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  require(a.n >= 1, "--n must be at least 1");
  const SyntheticInstance inst = gen_model(a.model, a.n, a.d, a.noise_sd, a.seed);
  std::ostringstream buf(std::ios::binary);
  io::write_mds1(buf, TensorDataset::from_matrices(inst.dataset));
  emit(a.output, buf.str(), out);
  if (!a.truth.empty()) {
    SubspaceEstimate truth;
    truth.row_basis = inst.true_row_basis;
    truth.col_basis = inst.true_col_basis;
    truth.r1 = static_cast<int>(truth.row_basis.cols());
    truth.r2 = static_cast<int>(truth.col_basis.cols());
    truth.config.seed = a.seed;
    nlohmann::json doc = io::estimate_to_json(truth);
    doc["model"] = a.model;
    doc["noise_sd"] = a.noise_sd;
    emit(a.truth, json_text(doc), out);
  }
  return kOk;
}

struct BenchmarkArgs {
  std::vector<int> models{1, 2, 3};
  std::vector<std::string> methods{"psmm", "psvm"};
  std::string n_grid = "100:500:100";
  std::string d_grid = "5,10";
  int replicates = 20;
  std::uint64_t seed = 0;
  std::string output = "-";
  int jobs = 1;
  double noise_sd = 0.2;
  int slices = 10;
  double lambda = 100.0;
  int restarts = 2;
  bool true_dims = false;
  bool no_timing = false;
};

int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out) {
  BenchmarkSpec spec;
  spec.models = a.models;
  spec.methods.clear();
  for (const auto& m : a.methods) spec.methods.push_back(parse_method(m));
  spec.n_grid = parse_grid(a.n_grid, "--n");
  spec.d_grid = parse_grid(a.d_grid, "--d");
  spec.replicates = a.replicates;
  spec.noise_sd = a.noise_sd;
  spec.true_dims = a.true_dims;
  spec.record_runtime = !a.no_timing;
  spec.jobs = a.jobs;
  PsmmConfig config;
  config.slices = a.slices;
  config.lambda = a.lambda;
  config.restarts = a.restarts;
  const BenchmarkResult result = run_benchmark(spec, config, a.seed);
  std::ostringstream csv;
  io::write_benchmark_csv(csv, result);
  emit(a.output, csv.str(), out);
  return kOk;
}

int cmd_cov(const std::string& input, const FlipFlopOptions& options, const std::string& output,
            std::ostream& out) {
  const TensorDataset data = io::read_dataset(input);
  nlohmann::json doc = data.order() == 2
                           ? io::matnorm_to_json(flipflop_fit(data.to_matrices(), options))
                           : io::tensornorm_to_json(flipflop_fit_tensor(data, options));
  emit(output, json_text(doc), out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Principal support matrix machine for matrix and tensor predictors", "psmm"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate row/column central subspaces");
  fit_cmd->add_option("--input", fit.input, "MDS1 or CSV dataset with responses")->required();
  fit_cmd->add_option("--output", fit.output, "Estimate JSON path ('-' for stdout)");
  fit_cmd->add_option("--slices", fit.slices, "Number of slices H (>= 2)");
  fit_cmd->add_option("--lambda", fit.lambda, "Hinge-loss weight");
  fit_cmd->add_option("--r1", fit.r1, "Row dimension or 'auto'");
  fit_cmd->add_option("--r2", fit.r2, "Column dimension or 'auto'");
  fit_cmd->add_option("--mode-rank", fit.mode_ranks, "Per-mode ranks for tensor input");
  fit_cmd->add_flag("--symmetric", fit.symmetric, "Tie row and column spaces");
  fit_cmd->add_option("--tol", fit.tol, "Coordinate-descent relative tolerance");
  fit_cmd->add_option("--max-iter", fit.max_iter, "Coordinate-descent iteration cap");
  fit_cmd->add_option("--restarts", fit.restarts, "Random restarts per slice");
  fit_cmd->add_option("--seed", fit.seed, "Master seed");
  fit_cmd->add_option("--method", fit.method, "psmm or psvm");

  std::string reduce_input, reduce_model, reduce_output = "-";
  auto* reduce_cmd = app.add_subcommand("reduce", "Project samples onto an estimate");
  reduce_cmd->add_option("--input", reduce_input, "Dataset path")->required();
  reduce_cmd->add_option("--model", reduce_model, "Estimate JSON path")->required();
  reduce_cmd->add_option("--output", reduce_output, "CSV path ('-' for stdout)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a benchmark dataset");
  sim_cmd->add_option("--model", sim.model, "Model id 1, 2 or 3");
  sim_cmd->add_option("--n", sim.n, "Sample size");
  sim_cmd->add_option("--d", sim.d, "Predictor side length");
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "Noise standard deviation");
  sim_cmd->add_option("--seed", sim.seed, "Seed");
  sim_cmd->add_option("--output", sim.output, "MDS1 output path")->required();
  sim_cmd->add_option("--truth", sim.truth, "Optional truth JSON path");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run the Monte Carlo benchmark grid");
  bench_cmd->add_option("--models", bench.models, "Model ids")->delimiter(',');
  bench_cmd->add_option("--methods", bench.methods, "psmm,psvm")->delimiter(',');
  bench_cmd->add_option("--n", bench.n_grid, "Sample sizes: start:stop:step or a list");
  bench_cmd->add_option("--d", bench.d_grid, "Side lengths: start:stop:step or a list");
  bench_cmd->add_option("--replicates", bench.replicates, "Replicates per cell");
  bench_cmd->add_option("--seed", bench.seed, "Master seed");
  bench_cmd->add_option("--output", bench.output, "CSV path ('-' for stdout)");
  bench_cmd->add_option("--jobs", bench.jobs, "Concurrent workers");
  bench_cmd->add_option("--noise-sd", bench.noise_sd, "Noise standard deviation");
  bench_cmd->add_option("--slices", bench.slices, "Number of slices H");
  bench_cmd->add_option("--lambda", bench.lambda, "Hinge-loss weight");
  bench_cmd->add_option("--restarts", bench.restarts, "Random restarts per slice");
  bench_cmd->add_flag("--true-dims", bench.true_dims, "Fit with the true structural dimensions");
  bench_cmd->add_flag("--no-timing", bench.no_timing, "Write zero runtimes");

  std::string cov_input, cov_output = "-";
  FlipFlopOptions cov_opts;
  auto* cov_cmd = app.add_subcommand("cov", "Kronecker covariance MLE");
  cov_cmd->add_option("--input", cov_input, "Dataset path")->required();
  cov_cmd->add_option("--tol", cov_opts.tol, "Relative-change tolerance");
  cov_cmd->add_option("--max-iter", cov_opts.max_iter, "Sweep cap");
  cov_cmd->add_option("--ridge", cov_opts.ridge, "Relative ridge before inversion");
  cov_cmd->add_option("--output", cov_output, "JSON path ('-' for stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "psmm: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*reduce_cmd) return cmd_reduce(reduce_input, reduce_model, reduce_output, out);
    if (*sim_cmd) return cmd_simulate(sim, out);
    if (*bench_cmd) return cmd_benchmark(bench, out);
    if (*cov_cmd) return cmd_cov(cov_input, cov_opts, cov_output, out);
  } catch (const Error& e) {
    err << "psmm: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return is_numerical(e.kind()) ? kNumericalError : kInputError;
  } catch (const std::exception& e) {
    err << "psmm: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace psmm::cli
