#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mchess/checkpoint.hpp"
#include "mchess/concepts.hpp"

namespace mchess {

// Row-major n x dim features with 0/1 labels.
struct ProbeProblem {
  int dim = 0;
  std::vector<float> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  const float* row(std::size_t i) const { return features.data() + i * static_cast<std::size_t>(dim); }
};

struct ProbeConfig {
  double lambda = 0.01;
  int max_epochs = 2000;
  double tolerance = 1e-6;     // relative objective improvement
  double zero_threshold = 0;   // |w| <= this counts as zero
};

struct ProbeFit {
  std::vector<double> w;
  double b = 0;
  // Objective at the start and after every epoch; non-increasing.
  std::vector<double> objective_history;
  int epochs = 0;
  bool converged = false;

  double objective() const { return objective_history.back(); }
  int nonzero(double threshold = 0) const;
};

// mean_i (sigmoid(w.x_i + b) - y_i)^2 + lambda * (|w|_1 + |b|)
double probe_objective(const ProbeProblem& problem, const std::vector<double>& w, double b, double lambda);

// Monotone accelerated proximal gradient (soft-thresholding) with
// backtracking. Starts from zero. Throws NonFiniteInput.
ProbeFit fit_probe(const ProbeProblem& problem, const ProbeConfig& config);

// 2 * accuracy - 1, predicting 1 when sigmoid(w.x + b) >= 0.5. Throws EmptyValidation.
double score_probe(const std::vector<double>& w, double b, const ProbeProblem& validation);

struct ProbeResult {
  std::string concept_name;
  std::uint64_t iteration = 0;
  int layer_index = 0;
  std::string layer;
  double corrected_accuracy = 0;
  int nonzero_weights = 0;
  double train_loss = 0;  // final objective on the training split
  double sparsity = 0;    // fraction of zero weights
};

// Train / validation problems at every capture point of `net`.
std::vector<std::pair<ProbeProblem, ProbeProblem>> layer_problems(const Network& net, const ConceptDataset& dataset,
                                                                  const VariantConfig& variant);

// Fits one probe per (checkpoint, capture point); results ordered by
// iteration, then layer. Fits run in parallel. Throws SpecMismatch when a
// checkpoint's variant differs from the dataset's.
std::vector<ProbeResult> probe_lineage(const std::vector<Checkpoint>& lineage, const ConceptDataset& dataset,
                                       const ProbeConfig& config);

// Columns: concept,iteration,layer,corrected_accuracy,nonzero_weights,train_loss
std::string format_probe_csv(const std::vector<ProbeResult>& results);
// Throws Parse naming the row.
std::vector<ProbeResult> parse_probe_csv(const std::string& text);

struct ReportOutput {
  std::vector<std::string> files;
};

// One <concept>.csv (iteration by layer) and <concept>.svg per concept plus
// summary.csv. Layers keep their first-seen order.
ReportOutput write_report(const std::vector<ProbeResult>& results, const std::string& out_dir);
std::string render_svg(const std::string& concept_name, const std::vector<ProbeResult>& rows);

}  // namespace mchess
