#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "json.hpp"

#include "psmm/dataset.hpp"
#include "psmm/matnorm.hpp"
#include "psmm/pipeline.hpp"
#include "psmm/synth.hpp"

namespace psmm::io {

/// MDS1: one JSON header line, then f64le values sample-major and row-major
/// within each sample, then the optional responses.
void write_mds1(std::ostream& out, const TensorDataset& data);
void write_mds1(const std::filesystem::path& path, const TensorDataset& data);
TensorDataset read_mds1(std::istream& in);

/// Header "y,x_1_1,x_1_2,..." (y optional), one sample per row, 1-based
/// row-major indices.
TensorDataset read_csv_dataset(std::istream& in);
void write_csv_dataset(std::ostream& out, const MatrixDataset& data);

/// Dispatch on content: MDS1 when the file starts with a JSON header.
TensorDataset read_dataset(const std::filesystem::path& path);

nlohmann::json config_to_json(const PsmmConfig& config);
nlohmann::json estimate_to_json(const SubspaceEstimate& estimate);
nlohmann::json estimate_to_json(const TensorSubspaceEstimate& estimate);

using AnyEstimate = std::variant<SubspaceEstimate, TensorSubspaceEstimate>;
/// Accepts both matrix ("row_basis"/"col_basis") and tensor ("mode_bases")
/// documents.
AnyEstimate estimate_from_json(const nlohmann::json& doc);

nlohmann::json matnorm_to_json(const MatNormParams& params);
nlohmann::json tensornorm_to_json(const TensorNormParams& params);

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace psmm::io
