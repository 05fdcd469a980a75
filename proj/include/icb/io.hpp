#pragma once

// Line-delimited JSON persistence for datasets and ground truth, and
// single-document JSON for results and metrics records.
//
// Dataset file:
//   {"version":1,"k":K,"T":T,"feature_names":[...], ...provenance}
//   {"t":1,"arms":[[...],...],"chosen":j}
//   ...
// Ground-truth file:
//   {"version":1,"kind":"ground-truth","agent":...,"k":K,"T":T,"rho_star":[...], ...}
//   {"t":1,"rho":[...],"reward":x,"belief_mean":[...]}

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icb/dataset.hpp"
#include "icb/metrics.hpp"

namespace icb {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Schema or syntax violation in an input file. `line` is 1-based, 0 when
/// the problem is not tied to a single line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- Eigen <-> JSON -------------------------------------------------------

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw NumericalError("refusing to serialize a non-finite value");
    a.push_back(v(i));
  }
  return a;
}

inline Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

inline Json to_json(const std::vector<double>& v) { return to_json(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())))); }

inline Vector vector_from_json(const Json& j, const char* what, std::size_t line = 0) {
  if (!j.is_array()) throw FormatError(std::string(what) + " must be an array", line);
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(std::string(what) + " must contain numbers", line);
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const Json& j, const char* what, std::size_t line = 0) {
  if (!j.is_array()) throw FormatError(std::string(what) + " must be an array of rows", line);
  if (j.empty()) return Matrix(0, 0);
  const Vector first = vector_from_json(j[0], what, line);
  Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r], what, line);
    if (row.size() != first.size()) throw FormatError(std::string(what) + " has ragged rows", line);
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline std::vector<double> std_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Json parse_line(const std::string& text, std::size_t line) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what(), line);
  }
}

template <class T>
T require(const Json& j, const char* key, std::size_t line = 0) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'", line);
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw FormatError(std::string("field '") + key + "' has the wrong type", line);
  }
}

inline void check_version(const Json& header, std::size_t line = 0) {
  const int v = require<int>(header, "version", line);
  if (v != kFormatVersion)
    throw FormatError("incompatible format version " + std::to_string(v) + " (expected " +
                          std::to_string(kFormatVersion) + ")",
                      line);
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline Json read_json_document(const std::string& path) {
  auto in = open_for_read(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    // JSON-lines artifacts: the header line carries the provenance.
    return parse_line(text.substr(0, text.find('\n')), 1);
  }
}

// ---- Dataset ---------------------------------------------------------------

struct LoadedDataset {
  Dataset dataset;
  Json header;
};

/// `provenance` keys (e.g. "config", "seed") are appended to the header.
inline void write_dataset(std::ostream& out, const Dataset& data, const Json& provenance = Json::object()) {
  data.validate();
  Json header;
  header["version"] = kFormatVersion;
  header["k"] = data.dim();
  header["T"] = data.horizon();
  header["feature_names"] = data.feature_names;
  for (const auto& [key, value] : provenance.items()) header[key] = value;
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < data.steps.size(); ++i) {
    Json row;
    row["t"] = i + 1;
    row["arms"] = to_json(data.steps[i].context.arms());
    row["chosen"] = data.steps[i].chosen;
    out << row.dump() << '\n';
  }
}

inline LoadedDataset read_dataset(std::istream& in) {
  LoadedDataset out;
  std::string text;
  if (!std::getline(in, text)) throw FormatError("empty dataset file", 1);
  out.header = parse_line(text, 1);
  check_version(out.header, 1);
  const auto k = require<Eigen::Index>(out.header, "k", 1);
  const auto horizon = require<Eigen::Index>(out.header, "T", 1);
  out.dataset.feature_names = require<std::vector<std::string>>(out.header, "feature_names", 1);
  if (k < 1) throw FormatError("k must be >= 1", 1);
  if (static_cast<Eigen::Index>(out.dataset.feature_names.size()) != k)
    throw FormatError("feature_names length does not match k", 1);

  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json row = parse_line(text, line);
    const auto t = require<long>(row, "t", line);
    if (t != static_cast<long>(out.dataset.steps.size()) + 1)
      throw FormatError("step index t must increase by one starting at 1", line);
    if (!row.contains("arms")) throw FormatError("missing field 'arms'", line);
    const Matrix arms = matrix_from_json(row["arms"], "arms", line);
    if (arms.rows() < 1) throw FormatError("step has no arms", line);
    if (arms.cols() != k) throw FormatError("arm feature dimension does not match k", line);
    if (!arms.allFinite()) throw FormatError("arm features must be finite", line);
    const auto chosen = require<long>(row, "chosen", line);
    if (chosen < 0 || chosen >= arms.rows()) throw FormatError("chosen index out of range", line);
    out.dataset.steps.push_back({ContextSet(arms), static_cast<Eigen::Index>(chosen)});
  }
  if (out.dataset.horizon() != horizon)
    throw FormatError("header declares T=" + std::to_string(horizon) + " but file has " +
                      std::to_string(out.dataset.horizon()) + " steps");
  return out;
}

inline void save_dataset(const std::string& path, const Dataset& data, const Json& provenance = Json::object()) {
  auto out = open_for_write(path);
  write_dataset(out, data, provenance);
}

inline LoadedDataset load_dataset(const std::string& path) {
  auto in = open_for_read(path);
  return read_dataset(in);
}

// ---- Ground truth ----------------------------------------------------------

struct GroundTruth {
  std::string agent;
  RewardParameter rho_star;
  Matrix rho;           // T×k, ρ_t the agent acted on
  Vector rewards;       // T
  Matrix belief_means;  // T×k, E[ρ] under the agent's belief at t
  Json header;

  bool operator==(const GroundTruth& o) const {
    return agent == o.agent && rho_star == o.rho_star && rho == o.rho && rewards == o.rewards &&
           belief_means == o.belief_means;
  }
};

inline void write_ground_truth(std::ostream& out, const GroundTruth& gt, const Json& provenance = Json::object()) {
  Json header;
  header["version"] = kFormatVersion;
  header["kind"] = "ground-truth";
  header["agent"] = gt.agent;
  header["k"] = gt.rho.cols();
  header["T"] = gt.rho.rows();
  header["rho_star"] = to_json(gt.rho_star);
  for (const auto& [key, value] : provenance.items()) header[key] = value;
  out << header.dump() << '\n';
  for (Eigen::Index t = 0; t < gt.rho.rows(); ++t) {
    Json row;
    row["t"] = t + 1;
    row["rho"] = to_json(Vector(gt.rho.row(t).transpose()));
    row["reward"] = gt.rewards(t);
    row["belief_mean"] = to_json(Vector(gt.belief_means.row(t).transpose()));
    out << row.dump() << '\n';
  }
}

inline GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth gt;
  std::string text;
  if (!std::getline(in, text)) throw FormatError("empty ground-truth file", 1);
  gt.header = parse_line(text, 1);
  check_version(gt.header, 1);
  if (require<std::string>(gt.header, "kind", 1) != "ground-truth") throw FormatError("not a ground-truth file", 1);
  gt.agent = require<std::string>(gt.header, "agent", 1);
  const auto k = require<Eigen::Index>(gt.header, "k", 1);
  const auto horizon = require<Eigen::Index>(gt.header, "T", 1);
  gt.rho_star = vector_from_json(gt.header["rho_star"], "rho_star", 1);
  if (gt.rho_star.size() != k) throw FormatError("rho_star length does not match k", 1);
  gt.rho.resize(horizon, k);
  gt.belief_means.resize(horizon, k);
  gt.rewards.resize(horizon);
  std::size_t line = 1;
  Eigen::Index t = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json row = parse_line(text, line);
    if (require<long>(row, "t", line) != t + 1) throw FormatError("step index t must increase by one starting at 1", line);
    if (t >= horizon) throw FormatError("more steps than the header declares", line);
    const Vector rho = vector_from_json(row.value("rho", Json()), "rho", line);
    const Vector mean = vector_from_json(row.value("belief_mean", Json()), "belief_mean", line);
    if (rho.size() != k || mean.size() != k) throw FormatError("vector length does not match k", line);
    gt.rho.row(t) = rho.transpose();
    gt.belief_means.row(t) = mean.transpose();
    gt.rewards(t) = require<double>(row, "reward", line);
    ++t;
  }
  if (t != horizon) throw FormatError("header declares T=" + std::to_string(horizon) + " but file has " + std::to_string(t) + " steps");
  return gt;
}

inline void save_ground_truth(const std::string& path, const GroundTruth& gt, const Json& provenance = Json::object()) {
  auto out = open_for_write(path);
  write_ground_truth(out, gt, provenance);
}

inline GroundTruth load_ground_truth(const std::string& path) {
  auto in = open_for_read(path);
  return read_ground_truth(in);
}

// ---- Results ---------------------------------------------------------------

/// Output of one inference run. Absent sections mean the algorithm does not
/// produce that quantity (e.g. trajectory ranking has no belief estimates).
struct Results {
  std::string algorithm;
  Eigen::Index horizon = 0;
  Eigen::Index dim = 0;
  std::vector<std::string> feature_names;
  std::optional<Vector> rho_star;
  std::optional<GaussianBelief> beta1;
  std::optional<Matrix> belief_means;
  std::optional<Matrix> belief_sd;
  std::vector<double> objective_trace;
  Json diagnostics = Json::object();
  Json config = Json::object();
  std::uint64_t seed = 0;

  bool operator==(const Results& o) const {
    auto eq_opt = [](const auto& a, const auto& b) { return a.has_value() == b.has_value() && (!a || *a == *b); };
    const bool beta_eq = beta1.has_value() == o.beta1.has_value() &&
                         (!beta1 || (beta1->mean == o.beta1->mean && beta1->covariance == o.beta1->covariance));
    return algorithm == o.algorithm && horizon == o.horizon && dim == o.dim && feature_names == o.feature_names &&
           eq_opt(rho_star, o.rho_star) && beta_eq && eq_opt(belief_means, o.belief_means) &&
           eq_opt(belief_sd, o.belief_sd) && objective_trace == o.objective_trace && diagnostics == o.diagnostics &&
           config == o.config && seed == o.seed;
  }
};

inline Json results_to_json(const Results& r) {
  Json j;
  j["version"] = kFormatVersion;
  j["kind"] = "results";
  j["algorithm"] = r.algorithm;
  j["config"] = r.config;
  j["seed"] = r.seed;
  j["dataset"] = {{"T", r.horizon}, {"k", r.dim}, {"feature_names", r.feature_names}};
  Json est = Json::object();
  est["rho_star"] = r.rho_star ? to_json(*r.rho_star) : Json();
  est["beta1"] = r.beta1 ? Json{{"mean", to_json(r.beta1->mean)}, {"covariance", to_json(r.beta1->covariance)}} : Json();
  j["estimates"] = est;
  j["belief_means"] = r.belief_means ? to_json(*r.belief_means) : Json();
  j["belief_sd"] = r.belief_sd ? to_json(*r.belief_sd) : Json();
  j["objective_trace"] = to_json(r.objective_trace);
  j["diagnostics"] = r.diagnostics;
  return j;
}

inline Results results_from_json(const Json& j) {
  check_version(j);
  if (require<std::string>(j, "kind") != "results") throw FormatError("not a results document");
  Results r;
  r.algorithm = require<std::string>(j, "algorithm");
  r.config = j.value("config", Json::object());
  r.seed = require<std::uint64_t>(j, "seed");
  const Json& ds = j.at("dataset");
  r.horizon = require<Eigen::Index>(ds, "T");
  r.dim = require<Eigen::Index>(ds, "k");
  r.feature_names = require<std::vector<std::string>>(ds, "feature_names");
  const Json& est = j.at("estimates");
  if (!est.at("rho_star").is_null()) r.rho_star = vector_from_json(est["rho_star"], "rho_star");
  if (!est.at("beta1").is_null())
    r.beta1 = GaussianBelief{vector_from_json(est["beta1"].at("mean"), "beta1.mean"),
                             matrix_from_json(est["beta1"].at("covariance"), "beta1.covariance")};
  if (!j.at("belief_means").is_null()) {
    r.belief_means = matrix_from_json(j["belief_means"], "belief_means");
    if (r.belief_means->rows() != r.horizon || r.belief_means->cols() != r.dim)
      throw FormatError("belief_means shape does not match the dataset section");
  }
  if (!j.at("belief_sd").is_null()) r.belief_sd = matrix_from_json(j["belief_sd"], "belief_sd");
  r.objective_trace = std_vector(vector_from_json(j.at("objective_trace"), "objective_trace"));
  r.diagnostics = j.value("diagnostics", Json::object());
  return r;
}

inline void save_results(const std::string& path, const Results& r) {
  auto out = open_for_write(path);
  out << results_to_json(r).dump(1) << '\n';
}

inline Results load_results(const std::string& path) {
  auto in = open_for_read(path);
  try {
    return results_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("malformed results JSON: ") + e.what());
  } catch (const Json::out_of_range& e) {
    throw FormatError(std::string("results document is missing a section: ") + e.what());
  }
}

// ---- Metrics ---------------------------------------------------------------

struct MetricsRecord {
  std::string agent;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::optional<ErrorSeries> belief_error;
  std::optional<double> true_reward_error;
  std::optional<Matrix> importance;  // T×k; rows are NaN where undefined
};

inline Json metrics_to_json(const MetricsRecord& m) {
  Json j;
  j["version"] = kFormatVersion;
  j["kind"] = "metrics";
  j["agent"] = m.agent;
  j["algorithm"] = m.algorithm;
  j["seed"] = m.seed;
  j["feature_names"] = m.feature_names;
  if (m.belief_error) {
    j["belief_error"] = {{"mean", m.belief_error->mean},
                         {"variation", m.belief_error->variation},
                         {"per_time", to_json(m.belief_error->per_time)}};
  } else {
    j["belief_error"] = Json();
  }
  j["true_reward_error"] = m.true_reward_error ? Json(*m.true_reward_error) : Json();
  if (m.importance) {
    Json rows = Json::array();
    for (Eigen::Index t = 0; t < m.importance->rows(); ++t) {
      const Vector row = m.importance->row(t).transpose();
      rows.push_back(row.allFinite() ? to_json(row) : Json());
    }
    j["importance"] = rows;
  } else {
    j["importance"] = Json();
  }
  return j;
}

inline MetricsRecord metrics_from_json(const Json& j) {
  check_version(j);
  if (require<std::string>(j, "kind") != "metrics") throw FormatError("not a metrics record");
  MetricsRecord m;
  m.agent = require<std::string>(j, "agent");
  m.algorithm = require<std::string>(j, "algorithm");
  m.seed = require<std::uint64_t>(j, "seed");
  m.feature_names = require<std::vector<std::string>>(j, "feature_names");
  if (j.contains("belief_error") && !j["belief_error"].is_null()) {
    const Json& be = j["belief_error"];
    ErrorSeries s;
    s.per_time = std_vector(vector_from_json(be.at("per_time"), "per_time"));
    s.mean = require<double>(be, "mean");
    s.variation = require<double>(be, "variation");
    m.belief_error = s;
  }
  if (j.contains("true_reward_error") && !j["true_reward_error"].is_null())
    m.true_reward_error = j["true_reward_error"].get<double>();
  if (j.contains("importance") && !j["importance"].is_null()) {
    const Json& rows = j["importance"];
    const auto k = static_cast<Eigen::Index>(m.feature_names.size());
    Matrix imp(static_cast<Eigen::Index>(rows.size()), k);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].is_null()) {
        imp.row(static_cast<Eigen::Index>(t)).setConstant(std::numeric_limits<double>::quiet_NaN());
      } else {
        const Vector row = vector_from_json(rows[t], "importance");
        if (row.size() != k) throw FormatError("importance row length does not match feature_names");
        imp.row(static_cast<Eigen::Index>(t)) = row.transpose();
      }
    }
    m.importance = imp;
  }
  return m;
}

inline void save_metrics(const std::string& path, const MetricsRecord& m) {
  auto out = open_for_write(path);
  out << metrics_to_json(m).dump(1) << '\n';
}

inline MetricsRecord load_metrics(const std::string& path) {
  auto in = open_for_read(path);
  try {
    return metrics_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("malformed metrics JSON in '") + path + "': " + e.what());
  } catch (const Json::out_of_range& e) {
    throw FormatError(std::string("metrics record '") + path + "' is missing a field: " + e.what());
  }
}

}  // namespace icb
