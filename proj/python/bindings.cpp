#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psmm/error.hpp"
#include "psmm/io.hpp"
#include "psmm/matnorm.hpp"
#include "psmm/pipeline.hpp"
#include "psmm/qp.hpp"
#include "psmm/synth.hpp"

namespace py = pybind11;
using namespace psmm;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<Eigen::Index> sample_dims(const Array& x) {
  if (x.ndim() < 3) throw py::value_error("samples must have shape (n, d1, d2, ...)");
  std::vector<Eigen::Index> dims;
  for (py::ssize_t k = 1; k < x.ndim(); ++k) dims.push_back(x.shape(k));
  return dims;
}

MatrixDataset to_matrix_dataset(const Array& x, const std::optional<Eigen::VectorXd>& y) {
  const auto dims = sample_dims(x);
  if (dims.size() != 2) throw py::value_error("matrix samples must have shape (n, d1, d2)");
  std::vector<Eigen::MatrixXd> samples;
  const double* base = x.data();
  const auto stride = dims[0] * dims[1];
  for (py::ssize_t i = 0; i < x.shape(0); ++i)
    samples.emplace_back(Eigen::Map<const RowMatrix>(base + i * stride, dims[0], dims[1]));
  return MatrixDataset(std::move(samples), y);
}

TensorDataset to_tensor_dataset(const Array& x, const std::optional<Eigen::VectorXd>& y) {
  const auto dims = sample_dims(x);
  const Eigen::Index size = product(dims);
  std::vector<Tensor> samples;
  for (py::ssize_t i = 0; i < x.shape(0); ++i) {
    const double* src = x.data() + i * size;
    Tensor t(dims);
    std::vector<Eigen::Index> idx(dims.size(), 0);
    for (Eigen::Index c = 0; c < size; ++c) {
      t(idx) = src[c];
      for (std::size_t k = dims.size(); k-- > 0;) {
        if (++idx[k] < dims[k]) break;
        idx[k] = 0;
      }
    }
    samples.push_back(std::move(t));
  }
  return TensorDataset(std::move(samples), y);
}

PsmmConfig make_config(int slices, double lambda, std::optional<int> r1, std::optional<int> r2,
                       bool symmetric, int restarts, std::uint64_t seed,
                       std::vector<std::optional<int>> mode_ranks, std::optional<int> vector_rank) {
  PsmmConfig c;
  c.slices = slices;
  c.lambda = lambda;
  c.r1 = r1;
  c.r2 = r2;
  c.symmetric = symmetric;
  c.restarts = restarts;
  c.seed = seed;
  c.mode_ranks = std::move(mode_ranks);
  c.vector_rank = vector_rank;
  return c;
}

py::dict estimate_dict(const SubspaceEstimate& e) {
  py::dict d;
  d["row_basis"] = e.row_basis;
  d["col_basis"] = e.col_basis;
  d["eigvals_row"] = e.eigvals_row;
  d["eigvals_col"] = e.eigvals_col;
  d["selected_dims"] = py::make_tuple(e.r1, e.r2);
  d["symmetric"] = e.symmetric;
  d["json"] = io::estimate_to_json(e).dump();
  return d;
}

SubspaceEstimate estimate_from(const py::dict& d) {
  SubspaceEstimate e;
  e.row_basis = d["row_basis"].cast<Eigen::MatrixXd>();
  e.col_basis = d["col_basis"].cast<Eigen::MatrixXd>();
  e.r1 = static_cast<int>(e.row_basis.cols());
  e.r2 = static_cast<int>(e.col_basis.cols());
  if (d.contains("symmetric")) e.symmetric = d["symmetric"].cast<bool>();
  return e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Principal support matrix machine core";

  static py::exception<Error> error(m, "PsmmError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(to_string(e.kind())) + ": " + e.what();
      PyErr_SetString(error.ptr(), msg.c_str());
    }
  });

  m.def(
      "flipflop_fit",
      [](const Array& x, double tol, int max_iter, double ridge) {
        FlipFlopOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        o.ridge = ridge;
        const MatNormParams p = flipflop_fit(to_matrix_dataset(x, std::nullopt), o);
        py::dict d;
        d["mean"] = p.mean;
        d["sigma_row"] = p.sigma_row;
        d["sigma_col"] = p.sigma_col;
        d["iterations"] = p.iterations;
        d["converged"] = p.converged;
        d["loglik_trace"] = p.loglik_trace;
        return d;
      },
      py::arg("x"), py::arg("tol") = 1e-8, py::arg("max_iter") = 200, py::arg("ridge") = 1e-8);

  m.def(
      "solve_svm_dual",
      [](const Eigen::MatrixXd& kernel, const Eigen::VectorXd& labels, double box, double tol) {
        const SvmDualSolution s = solve_svm_dual({kernel, labels, box, tol});
        py::dict d;
        d["alphas"] = s.alphas;
        d["bias_t"] = s.bias_t;
        d["dual_objective"] = s.dual_objective;
        d["kkt_residual"] = s.kkt_residual;
        d["iterations"] = s.iterations;
        d["converged"] = s.converged;
        return d;
      },
      py::arg("kernel"), py::arg("labels"), py::arg("box") = 1.0, py::arg("tol") = 1e-8);

  m.def(
      "fit_psmm",
      [](const Array& x, const Eigen::VectorXd& y, int slices, double lambda, std::optional<int> r1,
         std::optional<int> r2, bool symmetric, int restarts, std::uint64_t seed) {
        const auto config =
            make_config(slices, lambda, r1, r2, symmetric, restarts, seed, {}, std::nullopt);
        return estimate_dict(fit_psmm(to_matrix_dataset(x, y), config));
      },
      py::arg("x"), py::arg("y"), py::arg("slices") = 10, py::arg("lam") = 100.0,
      py::arg("r1") = py::none(), py::arg("r2") = py::none(), py::arg("symmetric") = false,
      py::arg("restarts") = 2, py::arg("seed") = 0);

  m.def(
      "fit_psvm",
      [](const Array& x, const Eigen::VectorXd& y, int slices, double lambda,
         std::optional<int> rank, std::uint64_t seed) {
        const auto config =
            make_config(slices, lambda, std::nullopt, std::nullopt, false, 0, seed, {}, rank);
        return estimate_dict(fit_psvm_baseline(to_matrix_dataset(x, y), config));
      },
      py::arg("x"), py::arg("y"), py::arg("slices") = 10, py::arg("lam") = 100.0,
      py::arg("rank") = py::none(), py::arg("seed") = 0);

  m.def(
      "fit_pstm",
      [](const Array& x, const Eigen::VectorXd& y, int slices, double lambda,
         std::vector<std::optional<int>> ranks, int restarts, std::uint64_t seed) {
        const auto config = make_config(slices, lambda, std::nullopt, std::nullopt, false, restarts,
                                        seed, std::move(ranks), std::nullopt);
        const TensorSubspaceEstimate e = fit_pstm(to_tensor_dataset(x, y), config);
        py::dict d;
        d["bases"] = e.bases;
        d["eigvals"] = e.eigvals;
        d["selected_dims"] = e.ranks;
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("slices") = 10, py::arg("lam") = 100.0,
      py::arg("ranks") = std::vector<std::optional<int>>{}, py::arg("restarts") = 2,
      py::arg("seed") = 0);

  m.def(
      "reduce",
      [](const Array& x, const py::dict& estimate) {
        const ReducedFeatures r = reduce(to_matrix_dataset(x, std::nullopt), estimate_from(estimate));
        const auto& first = r.coordinates.front();
        py::array_t<double> out({static_cast<py::ssize_t>(r.coordinates.size()),
                                 static_cast<py::ssize_t>(first.rows()),
                                 static_cast<py::ssize_t>(first.cols())});
        auto view = out.mutable_unchecked<3>();
        for (std::size_t i = 0; i < r.coordinates.size(); ++i)
          for (Eigen::Index a = 0; a < first.rows(); ++a)
            for (Eigen::Index b = 0; b < first.cols(); ++b)
              view(static_cast<py::ssize_t>(i), a, b) = r.coordinates[i](a, b);
        return out;
      },
      py::arg("x"), py::arg("estimate"));

  m.def(
      "gen_model",
      [](int model, Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed) {
        const SyntheticInstance inst = gen_model(model, n, d, noise_sd, seed);
        py::array_t<double> x({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(d),
                               static_cast<py::ssize_t>(d)});
        auto view = x.mutable_unchecked<3>();
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) view(i, a, b) = inst.dataset.sample(i)(a, b);
        return py::make_tuple(x, inst.dataset.responses(), inst.true_row_basis,
                              inst.true_col_basis);
      },
      py::arg("model"), py::arg("n"), py::arg("d"), py::arg("noise_sd") = 0.2, py::arg("seed") = 0);

  m.def("subspace_distance", &subspace_distance, py::arg("row_a"), py::arg("col_a"),
        py::arg("row_b"), py::arg("col_b"));
  m.def("projector_distance", &projector_distance, py::arg("a"), py::arg("b"));
  m.def("select_dimension_bic", &select_dimension_bic, py::arg("eigenvalues"), py::arg("n"));
  m.def(
      "slice_labels",
      [](const Eigen::VectorXd& y, int slices) {
        const SliceLabelSet s = slice_labels(y, slices);
        return py::make_tuple(s.cutpoints, s.retained, s.labels);
      },
      py::arg("y"), py::arg("slices") = 10);
}
