#include "mchess/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "mchess/errors.hpp"
#include "mchess/io.hpp"

namespace mchess {

namespace {

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

void scores(const ProbeProblem& p, const std::vector<double>& w, double b, std::vector<double>& s) {
  s.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const float* x = p.row(i);
    double acc = b;
    for (int j = 0; j < p.dim; ++j) acc += w[j] * x[j];
    s[i] = acc;
  }
}

double smooth_part(const ProbeProblem& p, const std::vector<double>& s) {
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = sigmoid(s[i]) - p.labels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(p.size());
}

double l1(const std::vector<double>& w, double b) {
  double sum = std::abs(b);
  for (double v : w) sum += std::abs(v);
  return sum;
}

double soft_threshold(double v, double t) { return v > t ? v - t : v < -t ? v + t : 0.0; }

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t b = 0;
  for (std::size_t e; (e = line.find(',', b)) != std::string::npos; b = e + 1) out.push_back(line.substr(b, e - b));
  out.push_back(line.substr(b));
  return out;
}

const char* kCsvHeader = "concept,iteration,layer,corrected_accuracy,nonzero_weights,train_loss";

}  // namespace

int ProbeFit::nonzero(double threshold) const {
  return static_cast<int>(std::count_if(w.begin(), w.end(), [&](double v) { return std::abs(v) > threshold; }));
}

double probe_objective(const ProbeProblem& problem, const std::vector<double>& w, double b, double lambda) {
  std::vector<double> s;
  scores(problem, w, b, s);
  return smooth_part(problem, s) + lambda * l1(w, b);
}

ProbeFit fit_probe(const ProbeProblem& problem, const ProbeConfig& config) {
  if (problem.size() == 0) throw Error(ErrorCode::InvalidConfig, "probe: empty training set");
  if (problem.features.size() != problem.size() * static_cast<std::size_t>(problem.dim)) {
    throw Error(ErrorCode::ShapeMismatch, "probe: feature matrix does not match dim x samples");
  }
  if (config.lambda < 0) throw Error(ErrorCode::InvalidConfig, "probe: lambda must be >= 0");
  for (float v : problem.features)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "probe: non-finite activation");

  const int m = problem.dim;
  const double n = static_cast<double>(problem.size());
  const double lambda = config.lambda;

  // Monotone FISTA: x is the best point so far, z the proximal step from
  // the extrapolated point y.
  std::vector<double> xw(m, 0.0), yw(m, 0.0), zw(m, 0.0), prev_w(m, 0.0), grad(m);
  double xb = 0, yb = 0, zb = 0, prev_b = 0;
  double t = 1.0;
  double L = 1.0;
  std::vector<double> s;

  ProbeFit fit;
  fit.objective_history.push_back(probe_objective(problem, xw, xb, lambda));
  double fx = fit.objective_history.back();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    scores(problem, yw, yb, s);
    const double fy = smooth_part(problem, s);
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0;
    for (std::size_t i = 0; i < problem.size(); ++i) {
      const double sg = sigmoid(s[i]);
      const double r = 2.0 * (sg - problem.labels[i]) * sg * (1.0 - sg) / n;
      if (r == 0) continue;
      const float* x = problem.row(i);
      for (int j = 0; j < m; ++j) grad[j] += r * x[j];
      grad_b += r;
    }

    double fz = 0;
    for (;;) {
      const double step = 1.0 / L;
      double dot = 0, sq = 0;
      for (int j = 0; j < m; ++j) {
        zw[j] = soft_threshold(yw[j] - step * grad[j], lambda * step);
        const double d = zw[j] - yw[j];
        dot += grad[j] * d;
        sq += d * d;
      }
      zb = soft_threshold(yb - step * grad_b, lambda * step);
      dot += grad_b * (zb - yb);
      sq += (zb - yb) * (zb - yb);
      scores(problem, zw, zb, s);
      fz = smooth_part(problem, s);
      if (fz <= fy + dot + 0.5 * L * sq + 1e-15 * std::abs(fy)) break;
      L *= 2.0;
      if (L > 1e30) break;
    }

    const double Fz = fz + lambda * l1(zw, zb);
    prev_w = xw;
    prev_b = xb;
    const bool accepted = Fz <= fx;
    if (accepted) {
      xw = zw;
      xb = zb;
    }
    const double F_new = std::min(Fz, fx);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double a = t / t_next, c = (t - 1.0) / t_next;
    for (int j = 0; j < m; ++j) yw[j] = xw[j] + a * (zw[j] - xw[j]) + c * (xw[j] - prev_w[j]);
    yb = xb + a * (zb - xb) + c * (xb - prev_b);
    t = t_next;

    const double improvement = (fx - F_new) / std::max(std::abs(fx), 1e-300);
    fx = F_new;
    fit.objective_history.push_back(fx);
    fit.epochs = epoch + 1;
    if (accepted && improvement < config.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.w = xw;
  fit.b = xb;
  return fit;
}

double score_probe(const std::vector<double>& w, double b, const ProbeProblem& validation) {
  if (validation.size() == 0) throw Error(ErrorCode::EmptyValidation, "probe: empty validation set");
  if (static_cast<int>(w.size()) != validation.dim) throw Error(ErrorCode::ShapeMismatch, "probe: weight length");
  std::vector<double> s;
  scores(validation, w, b, s);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    // sigmoid(s) >= 0.5 exactly when s >= 0.
    const int predicted = s[i] >= 0 ? 1 : 0;
    correct += predicted == validation.labels[i];
  }
  return 2.0 * static_cast<double>(correct) / static_cast<double>(s.size()) - 1.0;
}

std::vector<std::pair<ProbeProblem, ProbeProblem>> layer_problems(const Network& net, const ConceptDataset& dataset,
                                                                  const VariantConfig& variant) {
  const std::vector<Position> positions = dataset_positions(dataset, variant);
  const int layers = net.spec().capture_points();
  const int dim = net.spec().activation_size();
  std::vector<std::pair<ProbeProblem, ProbeProblem>> out(layers);
  for (auto& [train, val] : out) train.dim = val.dim = dim;

  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < positions.size(); begin += kChunk) {
    const std::size_t end = std::min(positions.size(), begin + kChunk);
    std::vector<InputPlanes> planes;
    planes.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) planes.push_back(encode_position(positions[i]));
    std::vector<const InputPlanes*> ptrs;
    for (const auto& p : planes) ptrs.push_back(&p);
    const auto traces = net.forward_batch(ptrs, true);
    for (std::size_t i = begin; i < end; ++i) {
      const ConceptSample& sample = dataset.samples[i];
      for (int l = 0; l < layers; ++l) {
        ProbeProblem& target = sample.validation ? out[l].second : out[l].first;
        const auto& act = traces[i - begin].activations[l];
        target.features.insert(target.features.end(), act.begin(), act.end());
        target.labels.push_back(sample.label);
      }
    }
  }
  return out;
}

std::vector<ProbeResult> probe_lineage(const std::vector<Checkpoint>& lineage, const ConceptDataset& dataset,
                                       const ProbeConfig& config) {
  std::vector<ProbeResult> results;
  for (const Checkpoint& ckpt : lineage) {
    if (ckpt.variant.name != dataset.variant) {
      throw Error(ErrorCode::SpecMismatch, "dataset variant " + dataset.variant + " does not match checkpoint variant " +
                                               ckpt.variant.name);
    }
    const auto problems = layer_problems(ckpt.net, dataset, ckpt.variant);
    const auto names = ckpt.net.spec().capture_names();
    std::vector<ProbeResult> rows(problems.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int l = 0; l < static_cast<int>(problems.size()); ++l) {
      const ProbeFit fit = fit_probe(problems[l].first, config);
      ProbeResult& r = rows[l];
      r.concept_name = dataset.concept_name;
      r.iteration = ckpt.iteration;
      r.layer_index = l;
      r.layer = names[l];
      r.corrected_accuracy = score_probe(fit.w, fit.b, problems[l].second);
      r.nonzero_weights = fit.nonzero(config.zero_threshold);
      r.train_loss = fit.objective();
      r.sparsity = 1.0 - static_cast<double>(r.nonzero_weights) / static_cast<double>(fit.w.size());
    }
    results.insert(results.end(), rows.begin(), rows.end());
  }
  return results;
}

std::string format_probe_csv(const std::vector<ProbeResult>& results) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : results) {
    out += r.concept_name + "," + std::to_string(r.iteration) + "," + r.layer + "," + format_fixed(r.corrected_accuracy) +
           "," + std::to_string(r.nonzero_weights) + "," + format_fixed(r.train_loss) + "\n";
  }
  return out;
}

std::vector<ProbeResult> parse_probe_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::Parse, "probe csv row 1: expected header '" + std::string(kCsvHeader) + "'");
  }
  std::vector<ProbeResult> out;
  std::map<std::pair<std::string, std::string>, int> layer_order;
  std::map<std::string, int> layers_seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    auto bad = [&](const std::string& what) {
      return Error(ErrorCode::Parse, "probe csv row " + std::to_string(row) + ": " + what);
    };
    if (f.size() != 6) throw bad("expected 6 columns");
    ProbeResult r;
    r.concept_name = f[0];
    r.layer = f[2];
    if (r.concept_name.empty() || r.layer.empty()) throw bad("empty concept or layer");
    try {
      std::size_t used = 0;
      r.iteration = std::stoull(f[1], &used);
      if (used != f[1].size()) throw bad("bad iteration");
      r.corrected_accuracy = std::stod(f[3], &used);
      if (used != f[3].size()) throw bad("bad corrected_accuracy");
      r.nonzero_weights = std::stoi(f[4], &used);
      if (used != f[4].size()) throw bad("bad nonzero_weights");
      r.train_loss = std::stod(f[5], &used);
      if (used != f[5].size()) throw bad("bad train_loss");
    } catch (const std::logic_error&) {
      throw bad("non-numeric field");
    }
    const auto key = std::make_pair(r.concept_name, r.layer);
    auto it = layer_order.find(key);
    if (it == layer_order.end()) it = layer_order.emplace(key, layers_seen[r.concept_name]++).first;
    r.layer_index = it->second;
    out.push_back(std::move(r));
  }
  if (out.empty()) throw Error(ErrorCode::Parse, "probe csv has no data rows");
  return out;
}

std::string render_svg(const std::string& concept_name, const std::vector<ProbeResult>& rows) {
  constexpr double kW = 720, kH = 440, kLeft = 70, kRight = 170, kTop = 50, kBottom = 60;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::uint64_t max_it = 0, min_it = UINT64_MAX;
  int layers = 0;
  for (const auto& r : rows) {
    max_it = std::max(max_it, r.iteration);
    min_it = std::min(min_it, r.iteration);
    layers = std::max(layers, r.layer_index + 1);
  }
  const double span = max_it > min_it ? static_cast<double>(max_it - min_it) : 1.0;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto X = [&](std::uint64_t it) { return kLeft + pw * static_cast<double>(it - min_it) / span; };
  auto Y = [&](double acc) { return kTop + ph * (1.0 - (acc + 1.0) / 2.0); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << concept_name << "</text>\n";
  for (double g : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << num(Y(g)) << "\" y2=\"" << num(Y(g))
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(Y(g) + 4) << "\" text-anchor=\"end\">" << num(g) << "</text>\n";
  }
  os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft << "\" y1=\"" << kTop << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << kTop + ph << "\" y2=\"" << kTop + ph
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"" << kTop + ph + 20 << "\" text-anchor=\"middle\">" << min_it << "</text>\n";
  os << "<text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 20 << "\" text-anchor=\"middle\">" << max_it << "</text>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">iteration</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">corrected accuracy</text>\n";

  for (int l = 0; l < layers; ++l) {
    std::vector<const ProbeResult*> pts;
    for (const auto& r : rows)
      if (r.layer_index == l) pts.push_back(&r);
    if (pts.empty()) continue;
    std::stable_sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->iteration < b->iteration; });
    const char* color = kColors[l % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << num(X(pts[i]->iteration)) << "," << num(Y(pts[i]->corrected_accuracy));
    }
    os << "\"/>\n";
    const double ly = kTop + 10 + 20 * l;
    os << "<line x1=\"" << kLeft + pw + 20 << "\" x2=\"" << kLeft + pw + 45 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + pw + 52 << "\" y=\"" << ly + 4 << "\">" << pts.front()->layer << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

ReportOutput write_report(const std::vector<ProbeResult>& results, const std::string& out_dir) {
  if (results.empty()) throw Error(ErrorCode::InvalidConfig, "report: no probe results");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir + ": " + ec.message());

  std::vector<std::string> concepts;
  for (const auto& r : results)
    if (std::find(concepts.begin(), concepts.end(), r.concept_name) == concepts.end()) concepts.push_back(r.concept_name);

  ReportOutput out;
  std::string summary = "concept,layer,first_iteration,first_accuracy,final_iteration,final_accuracy,best_iteration,best_accuracy\n";
  for (const auto& concept_name : concepts) {
    std::vector<ProbeResult> rows;
    for (const auto& r : results)
      if (r.concept_name == concept_name) rows.push_back(r);
    std::vector<std::string> layer_names;
    for (const auto& r : rows) {
      if (static_cast<int>(layer_names.size()) <= r.layer_index) layer_names.resize(r.layer_index + 1);
      layer_names[r.layer_index] = r.layer;
    }
    std::map<std::uint64_t, std::vector<std::string>> table;
    for (const auto& r : rows) {
      auto& cells = table[r.iteration];
      cells.resize(layer_names.size());
      cells[r.layer_index] = format_fixed(r.corrected_accuracy);
    }
    std::string curve = "iteration";
    for (const auto& n : layer_names) curve += "," + n;
    curve += "\n";
    for (const auto& [it, cells] : table) {
      curve += std::to_string(it);
      for (std::size_t l = 0; l < layer_names.size(); ++l) curve += "," + (l < cells.size() ? cells[l] : "");
      curve += "\n";
    }
    const std::string base = (std::filesystem::path(out_dir) / concept_name).string();
    write_file_atomic(base + ".csv", curve);
    write_file_atomic(base + ".svg", render_svg(concept_name, rows));
    out.files.push_back(base + ".csv");
    out.files.push_back(base + ".svg");

    for (int l = 0; l < static_cast<int>(layer_names.size()); ++l) {
      const ProbeResult *first = nullptr, *last = nullptr, *best = nullptr;
      for (const auto& r : rows) {
        if (r.layer_index != l) continue;
        if (!first || r.iteration < first->iteration) first = &r;
        if (!last || r.iteration > last->iteration) last = &r;
        if (!best || r.corrected_accuracy > best->corrected_accuracy) best = &r;
      }
      if (!first) continue;
      summary += concept_name + "," + layer_names[l] + "," + std::to_string(first->iteration) + "," +
                 format_fixed(first->corrected_accuracy) + "," + std::to_string(last->iteration) + "," +
                 format_fixed(last->corrected_accuracy) + "," + std::to_string(best->iteration) + "," +
                 format_fixed(best->corrected_accuracy) + "\n";
    }
  }
  const std::string summary_path = (std::filesystem::path(out_dir) / "summary.csv").string();
  write_file_atomic(summary_path, summary);
  out.files.push_back(summary_path);
  return out;
}

}  // namespace mchess
