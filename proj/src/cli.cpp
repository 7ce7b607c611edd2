#include "ghmm/cli.hpp"

#include "ghmm/error.hpp"
#include "ghmm/filter.hpp"
#include "ghmm/format.hpp"
#include "ghmm/inference.hpp"
#include "ghmm/info.hpp"
#include "ghmm/models/discrete_hmm.hpp"
#include "ghmm/models/garch.hpp"
#include "ghmm/models/lssm.hpp"
#include "ghmm/models/product.hpp"
#include "ghmm/models/trbm.hpp"
#include "ghmm/montecarlo.hpp"
#include "ghmm/sensitivity.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ghmm {

using nlohmann::json;

namespace {

Error config_error(const std::string& path, const std::string& msg) { return {Errc::InvalidConfig, msg, path}; }

// A JSON object plus its dotted path. Defaults requested through the
// accessors are written back so the object ends up fully resolved.
class Node {
 public:
  Node(json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw config_error(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

  const json& raw(const std::string& key) const {
    if (!has(key)) throw config_error(field(key), "missing required field");
    return j_[key];
  }

  double num(const std::string& key) const { return as_num(raw(key), field(key)); }
  double num(const std::string& key, double fallback) {
    if (!has(key)) j_[key] = fallback;
    return num(key);
  }

  long long integer(const std::string& key) const { return as_int(raw(key), field(key)); }
  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) j_[key] = fallback;
    return integer(key);
  }

  std::string str(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw config_error(field(key), "expected a string");
    return v.get<std::string>();
  }

  Vec vec(const std::string& key) const { return as_vec(raw(key), field(key)); }
  Mat mat(const std::string& key) const { return as_mat(raw(key), field(key)); }

  Node child(const std::string& key) {
    if (!has(key)) throw config_error(field(key), "missing required block");
    return {j_[key], field(key)};
  }

  json& at(const std::string& key) { return j_[key]; }

  static double as_num(const json& v, const std::string& path) {
    if (!v.is_number()) throw config_error(path, "expected a number");
    return v.get<double>();
  }
  static long long as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw config_error(path, "expected an integer");
    return v.get<long long>();
  }
  static Vec as_vec(const json& v, const std::string& path) {
    if (v.is_number()) return Vec::Constant(1, v.get<double>());
    if (!v.is_array()) throw config_error(path, "expected an array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
      out(static_cast<Eigen::Index>(i)) = as_num(v[i], path + "[" + std::to_string(i) + "]");
    return out;
  }
  static Mat as_mat(const json& v, const std::string& path) {
    if (v.is_number()) return Mat::Constant(1, 1, v.get<double>());
    if (!v.is_array() || v.empty()) throw config_error(path, "expected a non-empty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string row = path + "[" + std::to_string(i) + "]";
      if (!v[i].is_array() || v[i].size() != cols || cols == 0)
        throw config_error(row, "rows must be non-empty arrays of equal length");
      for (std::size_t c = 0; c < cols; ++c)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            as_num(v[i][c], row + "[" + std::to_string(c) + "]");
    }
    return out;
  }

 private:
  json& j_;
  std::string path_;
};

int to_int(long long v, const std::string& path, long long lo = 1) {
  if (v < lo || v > 1'000'000'000) throw config_error(path, "value out of range");
  return static_cast<int>(v);
}

std::vector<Mat> matrix_list(Node& node, const std::string& key) {
  std::vector<Mat> out;
  if (!node.has(key)) return out;
  const json& v = node.raw(key);
  if (!v.is_array()) throw config_error(node.field(key), "expected an array of matrices");
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(Node::as_mat(v[i], node.field(key) + "[" + std::to_string(i) + "]"));
  return out;
}

ModelSetup three_state(Node& n) {
  auto m = three_state_model();
  return {m, Vec::Constant(1, n.num("delta", 0.0))};
}

ModelSetup affine(Node& n) {
  const Mat P = n.mat("transition"), B = n.mat("emission");
  std::vector<AffineHmm::Param> params;
  std::vector<double> values;
  if (n.has("params")) {
    json& arr = n.at("params");
    if (!arr.is_array()) throw config_error(n.field("params"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Node p(arr[i], n.field("params") + "[" + std::to_string(i) + "]");
      AffineHmm::Param ap;
      ap.name = p.has("name") ? p.str("name") : "p" + std::to_string(i);
      ap.dP = p.has("dP") ? p.mat("dP") : Mat::Zero(P.rows(), P.cols());
      ap.dB = p.has("dB") ? p.mat("dB") : Mat::Zero(B.rows(), B.cols());
      if (p.has("lo")) ap.lo = p.num("lo");
      if (p.has("hi")) ap.hi = p.num("hi");
      values.push_back(p.num("value", 0.0));
      params.push_back(std::move(ap));
    }
  }
  auto m = std::make_shared<AffineHmm>(P, B, std::move(params), "hmm");
  return {m, Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

ModelSetup korder(Node& n) {
  const int l = to_int(n.integer("states"), n.field("states"));
  const int k = to_int(n.integer("order", 1), n.field("order"));
  const int A = to_int(n.integer("alphabet"), n.field("alphabet"));
  auto m = std::make_shared<KOrderHmm>(l, k, A);
  Vec theta = m->default_theta();
  if (n.has("transition") || n.has("emission")) theta = m->theta_from(n.mat("transition"), n.mat("emission"));
  return {m, theta};
}

ModelSetup garch(Node& n) {
  std::optional<double> s0;
  if (n.has("sigma0_sq")) s0 = n.num("sigma0_sq");
  auto m = std::make_shared<Garch11>(s0);
  Vec theta(3);
  theta << n.num("delta"), n.num("alpha"), n.num("beta");
  return {m, theta};
}

ModelSetup varma(Node& n) {
  const Mat Sigma = n.mat("sigma");
  const std::vector<Mat> ar = matrix_list(n, "ar"), ma = matrix_list(n, "ma");
  auto m = std::make_shared<VarmaModel>(static_cast<int>(Sigma.rows()), static_cast<int>(ar.size()),
                                        static_cast<int>(ma.size()), Sigma);
  const Eigen::Index mm = Sigma.rows() * Sigma.rows();
  Vec theta(m->param_dim());
  Eigen::Index at = 0;
  auto put = [&](const std::vector<Mat>& list, const std::string& key) {
    for (std::size_t j = 0; j < list.size(); ++j) {
      if (list[j].rows() != Sigma.rows() || list[j].cols() != Sigma.rows())
        throw Error(Errc::DimensionMismatch, "coefficient must be m×m", n.field(key) + "[" + std::to_string(j) + "]");
      const Mat rm = list[j].transpose();  // row-major flattening
      theta.segment(at, mm) = Eigen::Map<const Vec>(rm.data(), mm);
      at += mm;
    }
  };
  put(ar, "ar");
  put(ma, "ma");
  return {m, theta};
}

ModelSetup trbm(Node& n) {
  TrbmSpec s{n.mat("W"), n.mat("Wp"), n.vec("bY"), n.vec("bH")};
  if (s.Wp.rows() != s.W.cols() || s.Wp.cols() != s.W.cols())
    throw Error(Errc::DimensionMismatch, "Wp must be P×P", n.field("Wp"));
  if (s.bY.size() != s.W.rows()) throw Error(Errc::DimensionMismatch, "bY must have D entries", n.field("bY"));
  if (s.bH.size() != s.W.cols()) throw Error(Errc::DimensionMismatch, "bH must have P entries", n.field("bH"));
  TrbmHmm h = trbm_to_hmm(s);
  return {h.model, h.theta};
}

ModelSetup product(json& block, const std::string& path) {
  Node n(block, path);
  ModelSetup a = make_model(n.at("a"), n.field("a"));
  ModelSetup b = make_model(n.at("b"), n.field("b"));
  auto m = std::make_shared<ProductModel>(a.model, b.model);
  return {m, ProductModel::join(a.theta, b.theta)};
}

}  // namespace

ModelSetup make_model(json& block, const std::string& path) {
  if (block.is_null()) throw config_error(path, "missing required block");
  Node n(block, path);
  const std::string family = n.str("family");
  ModelSetup s;
  if (family == "three-state") s = three_state(n);
  else if (family == "hmm") s = affine(n);
  else if (family == "softmax-hmm" || family == "korder-hmm") s = korder(n);
  else if (family == "garch11") s = garch(n);
  else if (family == "varma") s = varma(n);
  else if (family == "trbm") s = trbm(n);
  else if (family == "product") s = product(block, path);
  else throw config_error(n.field("family"), "unknown model family '" + family + "'");
  if (n.has("theta")) {
    const Vec th = n.vec("theta");
    if (th.size() != s.model->param_dim())
      throw Error(Errc::DimensionMismatch,
                  "expected " + std::to_string(s.model->param_dim()) + " parameters, got " + std::to_string(th.size()),
                  n.field("theta"));
    s.theta = th;
  }
  s.model->validate(s.theta);
  return s;
}

Series read_observations_csv(const std::filesystem::path& file) {
  const std::string field = "input.observations";
  std::ifstream in(file);
  if (!in) throw Error(Errc::InvalidConfig, "cannot open " + file.string(), field);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::InvalidObservation, "empty observation file", field);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  std::map<int, std::size_t> ycols;  // y index → column
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.size() < 2 || h[0] != 'y') continue;
    int j = 0;
    const auto r = std::from_chars(h.data() + 1, h.data() + h.size(), j);
    if (r.ec == std::errc() && r.ptr == h.data() + h.size() && j >= 1) ycols[j] = c;
  }
  if (ycols.empty() || ycols.rbegin()->first != static_cast<int>(ycols.size()))
    throw Error(Errc::InvalidObservation, "header must name columns y1..yd", field);
  Series y(ycols.size());
  std::vector<double> row(ycols.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    std::size_t j = 0;
    for (const auto& [idx, c] : ycols) {
      if (c >= cells.size()) throw Error(Errc::InvalidObservation, "short row at line " + std::to_string(lineno), field);
      const std::string& s = cells[c];
      double v = 0.0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw Error(Errc::InvalidObservation, "bad number '" + s + "' at line " + std::to_string(lineno), field);
      row[j++] = v;
    }
    y.push_back(Obs(row));
  }
  if (y.empty()) throw Error(Errc::TooShort, "no observations", field);
  return y;
}

namespace {

struct Output {
  std::string csv;
  json result;
};

class Runner {
 public:
  Runner(json& config, const RunOptions& opt, std::uint64_t seed, int threads)
      : opt_(opt), seed_(seed), threads_(threads) {
    if (!config.contains("estimator")) config["estimator"] = json::object();
    est_json_ = &config["estimator"];
    config_ = &config;
  }

  Output run(const std::string& command) {
    static const std::map<std::string, Output (Runner::*)()> table = {
        {"simulate", &Runner::simulate},    {"loglik", &Runner::loglik},       {"score", &Runner::score},
        {"hessian", &Runner::hessian},      {"fisher", &Runner::fisher},       {"kl", &Runner::kl},
        {"kl-sweep", &Runner::kl_sweep},    {"quad-check", &Runner::quad_check}, {"crlb", &Runner::crlb},
        {"aic-order", &Runner::aic_order},  {"aic-states", &Runner::aic_states},
    };
    const auto it = table.find(command);
    if (it == table.end()) throw config_error("command", "unknown command '" + command + "'");
    return (this->*it->second)();
  }

 private:
  Node est() { return {*est_json_, "estimator"}; }
  ModelSetup model() {
    if (!model_) model_ = make_model((*config_)["model"], "model");
    return *model_;
  }

  SampleSpec sample() {
    Node e = est();
    SampleSpec s;
    s.n = static_cast<std::size_t>(to_int(e.integer("n"), e.field("n")));
    s.seed = seed_;
    s.burn_in = static_cast<std::size_t>(
        to_int(e.integer("burn_in", static_cast<long long>(s.n / 10)), e.field("burn_in"), 0));
    if (*s.burn_in >= s.n) throw config_error(e.field("burn_in"), "burn-in must be shorter than n");
    if (e.has("x0")) s.x0 = to_int(e.integer("x0"), e.field("x0"), 0);
    return s;
  }

  // Observations from input.observations, else simulated from the model.
  Series data(std::size_t dim) {
    Series y;
    if ((*config_).contains("input") && (*config_)["input"].contains("observations")) {
      Node in((*config_)["input"], "input");
      std::filesystem::path p = in.str("observations");
      if (p.is_relative()) p = opt_.base_dir / p;
      y = read_observations_csv(p);
    } else {
      const SampleSpec s = sample();
      const ModelSetup m = model();
      y = ghmm::simulate(*m.model, m.theta, s.n, s.seed, s.x0).y;
    }
    if (dim != 0 && y.dim() != dim)
      throw Error(Errc::DimensionMismatch,
                  "observations have " + std::to_string(y.dim()) + " columns, model expects " + std::to_string(dim),
                  "input.observations");
    return y;
  }

  Vec direction(int q) {
    Node e = est();
    if (!e.has("direction")) {
      json v = json::array();
      for (int i = 0; i < q; ++i) v.push_back(i == 0 ? 1.0 : 0.0);
      e.at("direction") = v;
    }
    const Vec v = e.vec("direction");
    if (v.size() != q) throw Error(Errc::DimensionMismatch, "direction length differs from the parameter count",
                                   e.field("direction"));
    return v;
  }

  FitOptions fit_options() {
    Node e = est();
    FitOptions o;
    o.starts = to_int(e.integer("starts", o.starts), e.field("starts"));
    o.max_iter = to_int(e.integer("max_iter", o.max_iter), e.field("max_iter"));
    o.grad_tol = e.num("grad_tol", o.grad_tol);
    o.jitter = e.num("jitter", o.jitter);
    o.seed = seed_;
    o.threads = threads_;
    return o;
  }

  FisherEstimate fisher_estimate(const ModelSetup& m) {
    Node e = est();
    const std::string method = e.has("method") ? e.str("method") : "hessian-average";
    e.at("method") = method;
    const SampleSpec s = sample();
    if (method == "hessian-average") return fisher_hessian_estimate(*m.model, m.theta, s);
    if (method == "score-outer") return fisher_score_estimate(*m.model, m.theta, s);
    if (method == "lssm-asymptotic") {
      const auto* v = dynamic_cast<const VarmaModel*>(m.model.get());
      if (!v) throw config_error(e.field("method"), "lssm-asymptotic needs a varma model");
      return lssm_fisher(*v, m.theta, s.n, s.seed, s.window_start());
    }
    throw config_error(e.field("method"), "unknown method '" + method + "'");
  }

  static json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
  static json to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
    return rows;
  }
  static json to_json(const KlEstimate& k) {
    return {{"value", k.value}, {"se", k.se},           {"n", k.n},
            {"burn_in", k.burn_in}, {"mean_ll1", k.mean_ll1}, {"mean_ll0", k.mean_ll0},
            {"infinite", k.infinite}};
  }

  static void csv_row(std::ostream& os, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) os << ',';
      write_number(os, v);
      first = false;
    }
    os << '\n';
  }

  Output simulate() {
    const ModelSetup m = model();
    const SampleSpec s = sample();
    const Trajectory tr = ghmm::simulate(*m.model, m.theta, s.n, s.seed, s.x0);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    return {os.str(), {{"n", tr.n()}, {"theta", to_json(m.theta)}}};
  }

  Output loglik() {
    const ModelSetup m = model();
    const Series y = data(m.model->obs_dim());
    const double ll = log_likelihood(*m.model, m.theta, y);
    std::ostringstream os;
    os << "n,loglik\n" << y.size() << ',';
    write_number(os, ll);
    os << '\n';
    return {os.str(), {{"n", y.size()}, {"loglik", ll}}};
  }

  Output score() {
    const ModelSetup m = model();
    const Series y = data(m.model->obs_dim());
    const Vec g = ghmm::score(*m.model, m.theta, y);
    const auto names = m.model->param_names();
    std::ostringstream os;
    os << "index,param,value\n";
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      os << i << ',' << names[static_cast<std::size_t>(i)] << ',';
      write_number(os, g(i));
      os << '\n';
    }
    return {os.str(), {{"n", y.size()}, {"params", names}, {"score", to_json(g)}}};
  }

  Output hessian() {
    const ModelSetup m = model();
    const Series y = data(m.model->obs_dim());
    const HessianResult h = ghmm::hessian(*m.model, m.theta, y);
    std::ostringstream os;
    os << "row,col,value\n";
    for (Eigen::Index i = 0; i < h.value.rows(); ++i)
      for (Eigen::Index j = 0; j < h.value.cols(); ++j) {
        os << i << ',' << j << ',';
        write_number(os, h.value(i, j));
        os << '\n';
      }
    return {os.str(),
            {{"n", y.size()},
             {"params", m.model->param_names()},
             {"hessian", to_json(h.value)},
             {"asymmetry", h.asymmetry},
             {"asymmetry_warning", h.asymmetry_warning}}};
  }

  Output fisher() {
    const ModelSetup m = model();
    const FisherEstimate f = fisher_estimate(m);
    std::ostringstream os;
    os << "row,col,value,se\n";
    for (Eigen::Index i = 0; i < f.value.rows(); ++i)
      for (Eigen::Index j = 0; j < f.value.cols(); ++j) {
        os << i << ',' << j << ',';
        csv_row(os, {f.value(i, j), f.se(i, j)});
      }
    return {os.str(),
            {{"method", f.method},
             {"n", f.n},
             {"burn_in", f.burn_in},
             {"params", m.model->param_names()},
             {"value", to_json(f.value)},
             {"se", to_json(f.se)}}};
  }

  Output kl() {
    const ModelSetup m0 = model();
    if (!config_->contains("alternative")) throw config_error("alternative", "missing required block");
    json alt = (*config_)["model"];
    alt.merge_patch((*config_)["alternative"]);
    const ModelSetup m1 = make_model(alt, "alternative");
    if (m1.model->family() != m0.model->family() || m1.model->param_dim() != m0.model->param_dim())
      throw config_error("alternative", "alternative must be the same family and shape as the model");
    const KlEstimate k = kl_estimate(*m0.model, m1.theta, m0.theta, sample());
    std::ostringstream os;
    os << "kl,se,n,burn_in,mean_ll1,mean_ll0,infinite\n";
    write_number(os, k.value);
    os << ',';
    write_number(os, k.se);
    os << ',' << k.n << ',' << k.burn_in << ',';
    write_number(os, k.mean_ll1);
    os << ',';
    write_number(os, k.mean_ll0);
    os << ',' << (k.infinite ? 1 : 0) << '\n';
    json r = to_json(k);
    r["theta1"] = to_json(m1.theta);
    r["theta0"] = to_json(m0.theta);
    return {os.str(), r};
  }

  std::vector<double> grid(Node& e) {
    const json& g = e.raw("grid");
    if (g.is_array()) {
      const Vec v = e.vec("grid");
      return {v.data(), v.data() + v.size()};
    }
    Node spec(e.at("grid"), e.field("grid"));
    const double from = spec.num("from"), to = spec.num("to"), step = spec.num("step");
    if (!(step > 0.0) || to < from) throw config_error(e.field("grid"), "need step > 0 and to >= from");
    const auto count = static_cast<long long>(std::floor((to - from) / step + 1e-9)) + 1;
    if (count > 100000) throw config_error(e.field("grid"), "grid too large");
    std::vector<double> out;
    for (long long i = 0; i < count; ++i) out.push_back(from + static_cast<double>(i) * step);
    return out;
  }

  int param_index(Node& e, const Model& m) {
    if (!e.has("param")) e.at("param") = 0;
    const json& p = e.raw("param");
    const auto names = m.param_names();
    if (p.is_string()) {
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == p.get<std::string>()) return static_cast<int>(i);
      throw config_error(e.field("param"), "no parameter named '" + p.get<std::string>() + "'");
    }
    const long long i = e.integer("param");
    if (i < 0 || i >= m.param_dim()) throw config_error(e.field("param"), "parameter index out of range");
    return static_cast<int>(i);
  }

  Output kl_sweep() {
    const ModelSetup m = model();
    Node e = est();
    const int index = param_index(e, *m.model);
    const std::vector<double> g = grid(e);
    const int reps = to_int(e.integer("replicates", 1), e.field("replicates"));
    const auto pts = ghmm::kl_sweep(*m.model, m.theta, index, g, sample(), reps, threads_);
    std::ostringstream os;
    os << "value,kl,se,replicates\n";
    json rows = json::array();
    for (const auto& p : pts) {
      write_number(os, p.value);
      os << ',';
      write_number(os, p.mean);
      os << ',';
      write_number(os, p.se);
      os << ',' << p.replicates.size() << '\n';
      json reps_json = json::array();
      for (const auto& r : p.replicates) reps_json.push_back(to_json(r));
      rows.push_back({{"value", p.value}, {"kl", p.mean}, {"se", p.se}, {"replicates", reps_json}});
    }
    return {os.str(), {{"param", m.model->param_names()[static_cast<std::size_t>(index)]}, {"points", rows}}};
  }

  Output quad_check() {
    const ModelSetup m = model();
    const Vec v = direction(m.model->param_dim());
    Node e = est();
    if (!e.has("eps_grid")) e.at("eps_grid") = {0.2, 0.1, 0.05, 0.025};
    const Vec eps = e.vec("eps_grid");
    const QuadCheck qc = quadratic_check(*m.model, m.theta, v, {eps.data(), eps.data() + eps.size()}, sample(),
                                         nullptr, threads_);
    std::ostringstream os;
    os << "eps,kl,kl_se,quad,rho,rho_se,dev\n";
    json rows = json::array();
    for (const auto& r : qc.rows) {
      csv_row(os, {r.eps, r.kl, r.kl_se, r.quad, r.rho, r.rho_se, r.dev});
      rows.push_back({{"eps", r.eps}, {"kl", r.kl}, {"kl_se", r.kl_se}, {"quad", r.quad},
                      {"rho", r.rho}, {"rho_se", r.rho_se}, {"dev", r.dev}});
    }
    return {os.str(),
            {{"rows", rows}, {"vIv", qc.vIv}, {"vIv_se", qc.vIv_se}, {"dev_nonincreasing", qc.dev_nonincreasing}}};
  }

  Output crlb() {
    const ModelSetup m = model();
    const Vec v = direction(m.model->param_dim());
    const FisherEstimate f = fisher_estimate(m);
    Node e = est();
    if (!e.has("ns")) e.at("ns") = json::array({f.n});
    const json& nsj = e.raw("ns");
    if (!nsj.is_array()) throw config_error(e.field("ns"), "expected an array of sample sizes");
    std::vector<std::size_t> ns;
    for (std::size_t i = 0; i < nsj.size(); ++i)
      ns.push_back(static_cast<std::size_t>(to_int(Node::as_int(nsj[i], e.field("ns") + "[" + std::to_string(i) + "]"),
                                                   e.field("ns"))));
    const CrlbReport c = crlb_report(f.value, v, ns);
    std::ostringstream os;
    os << "n,bound\n";
    json per = json::array();
    for (const auto& [n, b] : c.per_n) {
      os << n << ',';
      write_number(os, b);
      os << '\n';
      per.push_back({{"n", n}, {"bound", b}});
    }
    return {os.str(),
            {{"classical", c.classical},
             {"minimax", c.minimax},
             {"condition", c.condition},
             {"pseudo_inverse", c.pseudo_inverse},
             {"per_n", per},
             {"fisher", to_json(f.value)},
             {"fisher_se", to_json(f.se)},
             {"method", f.method}}};
  }

  int alphabet(Node& e, const Series& y) {
    if (!e.has("alphabet")) {
      double hi = 1.0;
      for (double v : y.values()) hi = std::max(hi, v);
      e.at("alphabet") = static_cast<long long>(hi);
    }
    return to_int(e.integer("alphabet"), e.field("alphabet"));
  }

  static json report_json(const AicReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
      rows.push_back({{"k", row.k},
                      {"loglik", row.loglik},
                      {"penalty", row.penalty},
                      {"aic", row.aic},
                      {"params", row.params},
                      {"converged", row.converged},
                      {"iterations", row.iterations},
                      {"grad_norm", row.grad_norm},
                      {"theta", to_json(row.theta)}});
    return {{"selected", r.selected}, {"rows", rows}};
  }

  Output aic_order() {
    const Series y = data(1);
    Node e = est();
    const int l = to_int(e.integer("states"), e.field("states"));
    const int kmax = to_int(e.integer("k_max", 3), e.field("k_max"));
    const int A = alphabet(e, y);
    const AicReport r = aic_order_select(y, l, kmax, A, fit_options());
    std::ostringstream os;
    write_aic_csv(os, r);
    return {os.str(), report_json(r)};
  }

  Output aic_states() {
    const Series y = data(1);
    Node e = est();
    const int order = to_int(e.integer("order", 1), e.field("order"));
    if (!e.has("k_range")) e.at("k_range") = {1, 3};
    const json& kr = e.raw("k_range");
    if (!kr.is_array() || kr.size() != 2) throw config_error(e.field("k_range"), "expected [k_min, k_max]");
    const int lo = to_int(Node::as_int(kr[0], e.field("k_range") + "[0]"), e.field("k_range"));
    const int hi = to_int(Node::as_int(kr[1], e.field("k_range") + "[1]"), e.field("k_range"));
    if (hi < lo) throw config_error(e.field("k_range"), "k_max below k_min");
    std::vector<int> ks;
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
    const int A = alphabet(e, y);
    const AicReport r = aic_state_select(y, order, ks, A, fit_options());
    std::ostringstream os;
    write_aic_csv(os, r);
    return {os.str(), report_json(r)};
  }

  const RunOptions& opt_;
  std::uint64_t seed_;
  int threads_;
  json* config_ = nullptr;
  json* est_json_ = nullptr;
  std::optional<ModelSetup> model_;
};

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) throw Error(Errc::InvalidConfig, "cannot write " + p.string(), "out");
}

std::string describe(const Error& e) {
  std::string s = "error: ";
  s += e.what();
  if (!e.field().empty()) s += " [field " + e.field() + "]";
  return s;
}

}  // namespace

int cmd_dispatch(json config, const RunOptions& opt, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (!config.is_object()) throw config_error("", "config must be a JSON object");
    Node root(config, "");
    const std::string command = root.str("command");
    std::uint64_t seed = 0;
    if (opt.seed) {
      seed = *opt.seed;
    } else if (root.has("seed")) {
      const json& s = root.raw("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        throw config_error("seed", "expected a non-negative integer");
      seed = s.get<std::uint64_t>();
    }
    config["seed"] = seed;
    int threads = 1;
    if (opt.threads) threads = *opt.threads;
    else if (root.has("threads")) threads = to_int(root.integer("threads"), "threads");
    if (threads < 1) throw config_error("threads", "need at least one thread");
    config["threads"] = threads;

    Runner runner(config, opt, seed, threads);
    const auto t1 = std::chrono::steady_clock::now();
    Output out = runner.run(command);
    const auto t2 = std::chrono::steady_clock::now();

    std::filesystem::create_directories(opt.out);
    write_file(opt.out / (command + ".csv"), out.csv);
    const json doc = {{"command", command}, {"seed", seed}, {"config", config}, {"result", out.result}};
    write_file(opt.out / (command + ".json"), doc.dump(2) + "\n");
    const auto t3 = std::chrono::steady_clock::now();
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    const json meta = {
        {"config", config},
        {"versions",
         {{"ghmm", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}}},
        {"timings", {{"setup_seconds", secs(t0, t1)}, {"command_seconds", secs(t1, t2)}, {"total_seconds", secs(t0, t3)}}}};
    write_file(opt.out / "run_meta.json", meta.dump(2) + "\n");
    return kExitOk;
  } catch (const Error& e) {
    err << describe(e) << '\n';
    return is_validation(e.code()) ? kExitValidation : kExitNumerical;
  } catch (const json::exception& e) {
    err << "error: InvalidConfig: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

int run_config_file(const std::filesystem::path& config, RunOptions opt, std::ostream& err) {
  std::ifstream in(config);
  if (!in) {
    err << "error: InvalidConfig: cannot open " << config.string() << '\n';
    return kExitValidation;
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    err << "error: InvalidConfig: " << e.what() << '\n';
    return kExitValidation;
  }
  if (opt.base_dir == ".") opt.base_dir = config.parent_path().empty() ? "." : config.parent_path();
  return cmd_dispatch(std::move(j), opt, err);
}

}  // namespace ghmm
