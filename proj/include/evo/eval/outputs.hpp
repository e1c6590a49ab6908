#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evo/eval/interp.hpp"

namespace evo {

struct ColumnInfo {
  std::uint64_t alt_id = 0;
  std::size_t alt_ordinal = 0;  // position in the output node's list
  std::size_t sub = 0;          // column index within a multi-column output
  std::string name;             // output_<ordinal>[_<sub>]
};

/// Stacked per-configuration feature matrix with bookkeeping for failed
/// output alternatives. Evaluation is float32; the matrix is widened to
/// float64 for the solvers.
struct FeatureMatrix {
  Eigen::MatrixXd X;  // n_samples x n_valid_columns
  std::vector<ColumnInfo> columns;
  std::vector<FailureRecord> failures;
  std::vector<std::uint64_t> valid_output_alts;  // evaluated without error
};

/// Evaluates every alternative of the output node under `config`. Each
/// alternative contributes one column per trailing element: (n,) is one
/// column, (n,k) is k columns. Failed or non-finite outputs are skipped and
/// reported; they never poison the matrix.
inline FeatureMatrix evaluate_outputs(const Graph& graph,
                                      const Configuration& config,
                                      const Dataset& dataset,
                                      EvalCache* cache = nullptr,
                                      long* eval_counter = nullptr) {
  const Node& out_node = graph.node("output");
  ConfigEval ev(graph, config, dataset, cache, eval_counter);
  const std::size_t n = dataset.n_samples;

  std::vector<std::pair<ColumnInfo, std::vector<float>>> cols;
  FeatureMatrix fm;
  for (std::size_t ord = 0; ord < out_node.alts.size(); ++ord) {
    const Alternative& alt = out_node.alts[ord];
    try {
      TensorPtr v = ev.eval_output_alt(alt);
      if (v->rank() == 0 || v->dim(0) != n)
        throw NodeEvalError(alt.id, "output",
                            "output value must have leading dimension "
                            "n_samples, got shape " +
                                Tensor::shape_str(v->shape()));
      const std::size_t width = v->size() / n;
      for (std::size_t j = 0; j < width; ++j) {
        bool finite = true;
        for (std::size_t i = 0; i < n; ++i)
          if (!std::isfinite(static_cast<double>(v->at(i * width + j)))) {
            finite = false;
            break;
          }
        if (!finite)
          throw NodeEvalError(alt.id, "output",
                              "non-finite value in output column");
      }
      ColumnInfo base;
      base.alt_id = alt.id;
      base.alt_ordinal = ord;
      for (std::size_t j = 0; j < width; ++j) {
        ColumnInfo ci = base;
        ci.sub = j;
        ci.name = "output_" + std::to_string(ord) +
                  (width > 1 ? "_" + std::to_string(j) : "");
        std::vector<float> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = v->at(i * width + j);
        cols.emplace_back(std::move(ci), std::move(col));
      }
      fm.valid_output_alts.push_back(alt.id);
    } catch (const NodeEvalError& err) {
      fm.failures.push_back({err.alt_id(), err.node_name(), err.what()});
    } catch (const EvalError& err) {
      fm.failures.push_back({alt.id, "output", err.what()});
    }
  }
  if (cols.empty())
    throw EvalError("all output alternatives failed for this configuration");

  fm.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  fm.columns.reserve(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i)
      fm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          static_cast<double>(cols[c].second[i]);
    fm.columns.push_back(cols[c].first);
  }
  return fm;
}

}  // namespace evo
