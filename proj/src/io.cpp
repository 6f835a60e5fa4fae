#include "psmm/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "psmm/error.hpp"

namespace psmm::io {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void io_fail(const std::string& what) { fail(ErrorKind::Io, what); }

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) io_fail("MDS1 payload is truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

// Column-major offsets visited in row-major (last index fastest) order.
std::vector<Index> row_major_offsets(const std::vector<Index>& dims) {
  const Index total = product(dims);
  std::vector<Index> strides(dims.size(), 1);
  for (std::size_t k = 1; k < dims.size(); ++k) strides[k] = strides[k - 1] * dims[k - 1];
  std::vector<Index> idx(dims.size(), 0);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(total));
  for (Index c = 0; c < total; ++c) {
    Index off = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) off += idx[k] * strides[k];
    out.push_back(off);
    for (std::size_t k = dims.size(); k-- > 0;) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty())
    io_fail("CSV line " + std::to_string(line_no) + ": cannot parse '" + text + "' as a number");
  return v;
}

std::vector<Index> parse_x_name(const std::string& name) {
  if (name.size() < 3 || name[0] != 'x' || name[1] != '_') io_fail("unexpected CSV column '" + name + "'");
  std::vector<Index> idx;
  std::size_t pos = 2;
  while (pos <= name.size()) {
    const auto end = std::min(name.find('_', pos), name.size());
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(name.data() + pos, name.data() + end, v);
    if (ec != std::errc() || ptr != name.data() + end || v < 1)
      io_fail("malformed CSV column '" + name + "'");
    idx.push_back(static_cast<Index>(v));
    pos = end + 1;
  }
  return idx;
}

json matrix_rows(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json matrix_columns(const MatrixXd& m) {
  json cols = json::array();
  for (Index j = 0; j < m.cols(); ++j) {
    json col = json::array();
    for (Index i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
    cols.push_back(std::move(col));
  }
  return cols;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd vector_from(const json& j) {
  if (!j.is_array()) io_fail("expected a JSON array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

MatrixXd columns_from(const json& j) {
  if (!j.is_array() || j.empty()) io_fail("basis must be a non-empty array of columns");
  const std::size_t d = j[0].size();
  MatrixXd m(static_cast<Index>(d), static_cast<Index>(j.size()));
  for (std::size_t c = 0; c < j.size(); ++c) {
    if (!j[c].is_array() || j[c].size() != d) io_fail("basis columns have unequal lengths");
    m.col(static_cast<Index>(c)) = vector_from(j[c]);
  }
  return m;
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json("auto"); }

std::optional<int> optional_int_from(const json& j) {
  if (j.is_number_integer()) return j.get<int>();
  return std::nullopt;
}

PsmmConfig config_from_json(const json& j) {
  PsmmConfig c;
  if (!j.is_object()) return c;
  c.slices = j.value("slices", c.slices);
  c.lambda = j.value("lambda", c.lambda);
  c.smm_tol = j.value("smm_tol", c.smm_tol);
  c.smm_max_iter = j.value("smm_max_iter", c.smm_max_iter);
  c.restarts = j.value("restarts", c.restarts);
  c.qp_tol = j.value("qp_tol", c.qp_tol);
  c.seed = j.value("seed", c.seed);
  c.symmetric = j.value("symmetric", c.symmetric);
  if (j.contains("r1")) c.r1 = optional_int_from(j["r1"]);
  if (j.contains("r2")) c.r2 = optional_int_from(j["r2"]);
  if (j.contains("vector_rank")) c.vector_rank = optional_int_from(j["vector_rank"]);
  if (j.contains("mode_ranks"))
    for (const auto& r : j["mode_ranks"]) c.mode_ranks.push_back(optional_int_from(r));
  if (j.contains("flipflop")) {
    const auto& f = j["flipflop"];
    c.flipflop.tol = f.value("tol", c.flipflop.tol);
    c.flipflop.max_iter = f.value("max_iter", c.flipflop.max_iter);
    c.flipflop.ridge = f.value("ridge", c.flipflop.ridge);
    c.flipflop.rescale_every_sweep = f.value("rescale_every_sweep", c.flipflop.rescale_every_sweep);
  }
  return c;
}

json convergence_json(const std::vector<SliceSummary>& slices) {
  json out = json::array();
  for (const auto& s : slices)
    out.push_back({{"slice", s.slice},
                   {"objective", s.objective},
                   {"iterations", s.iterations},
                   {"converged", s.converged}});
  return out;
}

std::vector<SliceSummary> convergence_from(const json& j) {
  std::vector<SliceSummary> out;
  if (!j.is_array()) return out;
  for (const auto& s : j)
    out.push_back({s.value("slice", 0), s.value("objective", 0.0), s.value("iterations", 0),
                   s.value("converged", false)});
  return out;
}

}  // namespace

void write_mds1(std::ostream& out, const TensorDataset& data) {
  ordered_json header;
  header["format"] = "MDS1";
  header["n"] = data.n();
  header["dims"] = data.dims();
  header["dtype"] = "f64le";
  header["has_response"] = data.has_responses();
  out << header.dump() << '\n';
  const auto order = row_major_offsets(data.dims());
  for (const auto& x : data.samples())
    for (Index off : order) put_f64(out, x.values()[off]);
  if (data.has_responses())
    for (Index i = 0; i < data.n(); ++i) put_f64(out, data.responses()[i]);
  if (!out) io_fail("failed to write MDS1 data");
}

void write_mds1(const std::filesystem::path& path, const TensorDataset& data) {
  std::ostringstream buf(std::ios::binary);
  write_mds1(buf, data);
  write_file(path, buf.str());
}

TensorDataset read_mds1(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) io_fail("MDS1 header line is missing");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    io_fail(std::string("MDS1 header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "MDS1") io_fail("not an MDS1 file");
  if (header.value("dtype", "") != "f64le") io_fail("MDS1 dtype must be f64le");
  if (!header.contains("n") || !header["n"].is_number_integer() || !header.contains("dims") ||
      !header["dims"].is_array())
    io_fail("MDS1 header needs integer n and a dims array");
  const long long n = header["n"].get<long long>();
  if (n < 1) io_fail("MDS1 dataset is empty");
  std::vector<Index> dims;
  for (const auto& d : header["dims"]) {
    if (!d.is_number_integer() || d.get<long long>() < 1) io_fail("MDS1 dims must be positive integers");
    dims.push_back(d.get<Index>());
  }
  if (dims.size() < 2) io_fail("MDS1 dims must have at least two entries");
  const bool has_response = header.value("has_response", false);

  const auto order = row_major_offsets(dims);
  const Index size = product(dims);
  std::vector<Tensor> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    VectorXd values(size);
    for (Index off : order) values[off] = get_f64(in);
    samples.emplace_back(dims, std::move(values));
  }
  std::optional<VectorXd> y;
  if (has_response) {
    VectorXd r(static_cast<Index>(n));
    for (Index i = 0; i < r.size(); ++i) r[i] = get_f64(in);
    y = std::move(r);
  }
  if (in.peek() != std::char_traits<char>::eof()) io_fail("MDS1 file has trailing bytes");
  return TensorDataset(std::move(samples), std::move(y));
}

TensorDataset read_csv_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) io_fail("CSV input is empty");
  const auto names = split_commas(line);
  const bool has_y = !names.empty() && names[0] == "y";
  const std::size_t first_x = has_y ? 1 : 0;
  if (names.size() <= first_x) io_fail("CSV header has no x_ columns");

  std::vector<std::vector<Index>> indices;
  for (std::size_t c = first_x; c < names.size(); ++c) indices.push_back(parse_x_name(names[c]));
  std::vector<Index> dims(indices.front().size(), 0);
  if (dims.size() < 2) io_fail("CSV columns need at least two indices (x_i_j)");
  for (const auto& idx : indices) {
    if (idx.size() != dims.size()) io_fail("CSV columns mix different orders");
    for (std::size_t k = 0; k < dims.size(); ++k) dims[k] = std::max(dims[k], idx[k]);
  }
  const Index size = product(dims);
  if (static_cast<Index>(indices.size()) != size) io_fail("CSV columns do not cover a full grid");
  // Columns must be in row-major order: last index fastest.
  std::vector<Index> expected(dims.size(), 1);
  std::vector<Index> strides(dims.size(), 1);
  for (std::size_t k = 1; k < dims.size(); ++k) strides[k] = strides[k - 1] * dims[k - 1];
  std::vector<Index> column_offset;
  for (const auto& idx : indices) {
    if (idx != expected) io_fail("CSV x columns must appear in row-major order");
    Index off = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) off += (idx[k] - 1) * strides[k];
    column_offset.push_back(off);
    for (std::size_t k = dims.size(); k-- > 0;) {
      if (++expected[k] <= dims[k]) break;
      expected[k] = 1;
    }
  }

  std::vector<Tensor> samples;
  std::vector<double> y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != names.size())
      io_fail("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
              " fields, expected " + std::to_string(names.size()));
    if (has_y) y.push_back(parse_double(fields[0], line_no));
    VectorXd values(size);
    for (std::size_t c = 0; c < column_offset.size(); ++c)
      values[column_offset[c]] = parse_double(fields[first_x + c], line_no);
    samples.emplace_back(dims, std::move(values));
  }
  if (samples.empty()) io_fail("CSV dataset has no samples");
  std::optional<VectorXd> responses;
  if (has_y) responses = Eigen::Map<const VectorXd>(y.data(), static_cast<Index>(y.size()));
  return TensorDataset(std::move(samples), std::move(responses));
}

void write_csv_dataset(std::ostream& out, const MatrixDataset& data) {
  std::string header = data.has_responses() ? "y" : "";
  for (Index i = 0; i < data.rows(); ++i)
    for (Index j = 0; j < data.cols(); ++j) {
      if (!header.empty()) header += ',';
      header += "x_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    }
  out << header << '\n';
  for (Index s = 0; s < data.n(); ++s) {
    std::string row = data.has_responses() ? format_double(data.responses()[s]) : "";
    const MatrixXd& x = data.sample(s);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) {
        if (!row.empty() || i + j > 0) row += ',';
        row += format_double(x(i, j));
      }
    out << row << '\n';
  }
}

TensorDataset read_dataset(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  std::istringstream in(contents, std::ios::binary);
  if (!contents.empty() && contents.front() == '{') return read_mds1(in);
  return read_csv_dataset(in);
}

json config_to_json(const PsmmConfig& c) {
  json modes = json::array();
  for (const auto& r : c.mode_ranks) modes.push_back(optional_int(r));
  return {{"slices", c.slices},
          {"lambda", c.lambda},
          {"smm_tol", c.smm_tol},
          {"smm_max_iter", c.smm_max_iter},
          {"restarts", c.restarts},
          {"qp_tol", c.qp_tol},
          {"r1", optional_int(c.r1)},
          {"r2", optional_int(c.r2)},
          {"mode_ranks", modes},
          {"vector_rank", optional_int(c.vector_rank)},
          {"seed", c.seed},
          {"symmetric", c.symmetric},
          {"flipflop",
           {{"tol", c.flipflop.tol},
            {"max_iter", c.flipflop.max_iter},
            {"ridge", c.flipflop.ridge},
            {"rescale_every_sweep", c.flipflop.rescale_every_sweep}}}};
}

json estimate_to_json(const SubspaceEstimate& e) {
  return {{"format_version", 1},
          {"row_basis", matrix_columns(e.row_basis)},
          {"col_basis", matrix_columns(e.col_basis)},
          {"eigvals_row", vector_json(e.eigvals_row)},
          {"eigvals_col", vector_json(e.eigvals_col)},
          {"selected_dims", {e.r1, e.r2}},
          {"symmetric", e.symmetric},
          {"config", config_to_json(e.config)},
          {"convergence", convergence_json(e.convergence)}};
}

json estimate_to_json(const TensorSubspaceEstimate& e) {
  json bases = json::array();
  json eigvals = json::array();
  for (const auto& b : e.bases) bases.push_back(matrix_columns(b));
  for (const auto& v : e.eigvals) eigvals.push_back(vector_json(v));
  return {{"format_version", 1},
          {"mode_bases", bases},
          {"mode_eigvals", eigvals},
          {"selected_dims", e.ranks},
          {"config", config_to_json(e.config)},
          {"convergence", convergence_json(e.convergence)}};
}

AnyEstimate estimate_from_json(const json& doc) {
  try {
    if (!doc.is_object()) io_fail("estimate file must hold a JSON object");
    if (doc.value("format_version", 0) != 1) io_fail("unsupported estimate format_version");
    if (doc.contains("mode_bases")) {
      TensorSubspaceEstimate e;
      for (const auto& b : doc["mode_bases"]) {
        e.bases.push_back(columns_from(b));
        e.ranks.push_back(static_cast<int>(e.bases.back().cols()));
      }
      if (doc.contains("mode_eigvals"))
        for (const auto& v : doc["mode_eigvals"]) e.eigvals.push_back(vector_from(v));
      e.config = config_from_json(doc.value("config", json::object()));
      e.convergence = convergence_from(doc.value("convergence", json::array()));
      return e;
    }
    if (!doc.contains("row_basis") || !doc.contains("col_basis"))
      io_fail("estimate needs row_basis and col_basis");
    SubspaceEstimate e;
    e.row_basis = columns_from(doc["row_basis"]);
    e.col_basis = columns_from(doc["col_basis"]);
    e.r1 = static_cast<int>(e.row_basis.cols());
    e.r2 = static_cast<int>(e.col_basis.cols());
    if (doc.contains("eigvals_row")) e.eigvals_row = vector_from(doc["eigvals_row"]);
    if (doc.contains("eigvals_col")) e.eigvals_col = vector_from(doc["eigvals_col"]);
    e.symmetric = doc.value("symmetric", false);
    e.config = config_from_json(doc.value("config", json::object()));
    e.convergence = convergence_from(doc.value("convergence", json::array()));
    return e;
  } catch (const json::exception& ex) {
    io_fail(std::string("malformed estimate JSON: ") + ex.what());
  }
}

json matnorm_to_json(const MatNormParams& p) {
  return {{"mean", matrix_rows(p.mean)},
          {"sigma_row", matrix_rows(p.sigma_row)},
          {"sigma_col", matrix_rows(p.sigma_col)},
          {"iterations", p.iterations},
          {"converged", p.converged},
          {"loglik_trace", p.loglik_trace}};
}

json tensornorm_to_json(const TensorNormParams& p) {
  json sigmas = json::array();
  for (const auto& s : p.sigmas) sigmas.push_back(matrix_rows(s));
  return {{"mean_dims", p.mean.dims()},
          {"mean", vector_json(p.mean.values())},
          {"sigmas", sigmas},
          {"iterations", p.iterations},
          {"converged", p.converged},
          {"loglik_trace", p.loglik_trace}};
}

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result) {
  out << "model,method,n,d,replicate,distance,runtime_seconds,r1,r2,status\n";
  for (const auto& r : result.rows)
    out << r.model_id << ',' << to_string(r.method) << ',' << r.n << ',' << r.d << ','
        << r.replicate << ',' << format_double(r.distance) << ','
        << format_double(r.runtime_seconds) << ',' << r.r1 << ',' << r.r2 << ',' << r.status
        << '\n';
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) io_fail("failed writing '" + path.string() + "'");
}

}  // namespace psmm::io
