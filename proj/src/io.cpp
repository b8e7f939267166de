#include "scinc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace scinc {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& source, const std::string& what) {
  throw UsageError(source + ": " + what);
}

// Non-finite numbers are written as the strings "inf", "-inf", "nan".
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double get_num(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw UsageError(where + ": expected a number");
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Vec get_vec(const json& j, const std::string& where) {
  if (!j.is_array()) throw UsageError(where + ": expected an array");
  Vec v(static_cast<Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_num(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

json mat_json(const Mat& m) {
  json d = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) d.push_back(num(m(i, j)));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", d}};
}

Mat get_mat(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw UsageError(where + ": expected {rows, cols, data}");
  const auto r = j["rows"].get<Index>();
  const auto c = j["cols"].get<Index>();
  const json& d = j["data"];
  if (!d.is_array() || static_cast<Index>(d.size()) != r * c) throw UsageError(where + ": data length != rows*cols");
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index k = 0; k < c; ++k) m(i, k) = get_num(d[static_cast<size_t>(i * c + k)], where + ".data");
  return m;
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw UsageError(where + ": missing field '" + key + "'");
  return j[key];
}

json sep_json(const Separable& s) {
  return json{{"type", "separable"},     {"weight", vec_json(s.weight)}, {"center", vec_json(s.center)},
              {"lin", vec_json(s.lin)},  {"lo", vec_json(s.lo)},         {"hi", vec_json(s.hi)}};
}

Separable get_sep(const json& j, const std::string& w) {
  return Separable{get_vec(field(j, "weight", w), w + ".weight"), get_vec(field(j, "center", w), w + ".center"),
                   get_vec(field(j, "lin", w), w + ".lin"), get_vec(field(j, "lo", w), w + ".lo"),
                   get_vec(field(j, "hi", w), w + ".hi")};
}

json prox_json(const ProxFn& g) {
  switch (g.kind()) {
    case ProxFn::Kind::Separable: return sep_json(g.separable());
    case ProxFn::Kind::Affine: {
      const auto& a = g.affine_part();
      return json{{"type", "affine"}, {"B", mat_json(a.B)}, {"d", vec_json(a.d)}, {"c", vec_json(a.c)}};
    }
    case ProxFn::Kind::ConjLinear:
      return json{{"type", "conj_linear"}, {"h", sep_json(g.conj_part().h)}, {"b", vec_json(g.conj_part().b)}};
    case ProxFn::Kind::Blocks: {
      json b = json::array();
      for (const auto& p : g.blocks()) b.push_back(prox_json(p));
      return json{{"type", "blocks"}, {"blocks", b}};
    }
  }
  return json();
}

ProxFn get_prox(const json& j, const std::string& w) {
  const auto type = field(j, "type", w).get<std::string>();
  if (type == "separable") return ProxFn(get_sep(j, w));
  if (type == "affine") {
    Mat B = get_mat(field(j, "B", w), w + ".B");
    Vec d = get_vec(field(j, "d", w), w + ".d");
    Vec c = get_vec(field(j, "c", w), w + ".c");
    if (B.rows() == 0) B.resize(0, c.size());
    return ProxFn::affine(std::move(B), std::move(d), std::move(c));
  }
  if (type == "conj_linear") return ProxFn(ConjPlusLinear{get_sep(field(j, "h", w), w + ".h"), get_vec(field(j, "b", w), w + ".b")});
  if (type == "blocks") {
    std::vector<ProxFn> parts;
    const json& b = field(j, "blocks", w);
    for (size_t i = 0; i < b.size(); ++i) parts.push_back(get_prox(b[i], w + ".blocks[" + std::to_string(i) + "]"));
    return ProxFn(std::move(parts));
  }
  throw UsageError(w + ": unknown prox type '" + type + "'");
}

json barrier_json(const BarrierPtr& f) {
  const auto parts = f->parts();
  if (!parts.empty()) {
    json a = json::array();
    for (const auto& p : parts) a.push_back(barrier_json(p));
    return json{{"type", "sum"}, {"parts", a}};
  }
  const std::string name = f->name();
  if (name == "logdet") return json{{"type", name}, {"order", sym_order(f->dim())}};
  if (name == "lorentz") return json{{"type", name}, {"dim", f->dim() - 1}};
  if (name == "orthant" || name == "box") return json{{"type", name}, {"dim", f->dim()}};
  throw CapabilityError("barrier '" + name + "' has no file representation");
}

BarrierPtr get_barrier(const json& j, const std::string& w) {
  const auto type = field(j, "type", w).get<std::string>();
  if (type == "sum") {
    const json& p = field(j, "parts", w);
    if (!p.is_array() || p.size() < 2) throw UsageError(w + ".parts: need at least two parts");
    BarrierPtr acc = get_barrier(p[0], w + ".parts[0]");
    for (size_t i = 1; i < p.size(); ++i)
      acc = barrier_sum(acc, get_barrier(p[i], w + ".parts[" + std::to_string(i) + "]"));
    return acc;
  }
  if (type == "logdet") return barrier_logdet(field(j, "order", w).get<Index>());
  const auto d = field(j, "dim", w).get<Index>();
  if (type == "orthant") return barrier_orthant(d);
  if (type == "box") return barrier_box(d);
  if (type == "lorentz") return barrier_lorentz(d);
  throw UsageError(w + ": unknown barrier type '" + type + "'");
}

json spec_json(const ProblemSpec& s) {
  json j{{"family", family_name(s.family)}, {"n", s.n}, {"seed", s.seed}};
  switch (s.family) {
    case Family::MaxEigenvalue: j["p"] = s.p; break;
    case Family::SparseLowRank:
      j["rho"] = s.rho;
      j["rank_fraction"] = s.rank_fraction;
      j["sparsity"] = s.sparsity;
      j["noise_variance"] = s.noise_variance;
      j["noise_density"] = s.noise_density;
      break;
    case Family::ClusterRecovery:
      j["cluster_sizes"] = s.cluster_sizes;
      j["edge_prob_in"] = s.edge_prob_in;
      j["edge_prob_out"] = s.edge_prob_out;
      break;
  }
  return j;
}

ProblemSpec get_spec(const json& j, const std::string& w) {
  ProblemSpec s;
  s.family = parse_family(field(j, "family", w).get<std::string>());
  s.n = j.value("n", Index{0});
  s.p = j.value("p", Index{0});
  s.seed = field(j, "seed", w).get<std::uint64_t>();
  s.rho = j.value("rho", s.rho);
  s.rank_fraction = j.value("rank_fraction", s.rank_fraction);
  s.sparsity = j.value("sparsity", s.sparsity);
  s.noise_variance = j.value("noise_variance", s.noise_variance);
  s.noise_density = j.value("noise_density", s.noise_density);
  if (j.contains("cluster_sizes")) s.cluster_sizes = j["cluster_sizes"].get<std::vector<Index>>();
  s.edge_prob_in = j.value("edge_prob_in", s.edge_prob_in);
  s.edge_prob_out = j.value("edge_prob_out", s.edge_prob_out);
  return s;
}

DualConicProblem as_dual(const json& j, const std::string& w) {
  DualConicProblem P;
  P.c_obj = get_vec(field(j, "c", w), w + ".c");
  P.b = get_vec(field(j, "b", w), w + ".b");
  P.L = get_mat(field(j, "L", w), w + ".L");
  P.g = get_prox(field(j, "g", w), w + ".g");
  P.f = get_barrier(field(j, "f", w), w + ".f");
  if (j.contains("cone_center")) P.cone_center = get_vec(j["cone_center"], w + ".cone_center");
  return P;
}

}  // namespace

// ---------------------------------------------------------------------------
// problems

ProblemFile generate_problem(const ProblemSpec& spec) {
  ProblemFile pf;
  pf.spec = spec;
  switch (spec.family) {
    case Family::MaxEigenvalue:
      pf.kind = "saddle";
      pf.max_eig = gen_max_eigenvalue_data(spec.n, spec.p, spec.seed);
      pf.saddle = max_eig_problem(*pf.max_eig);
      break;
    case Family::SparseLowRank:
      pf.kind = "primal";
      pf.sparse_lowrank = gen_sparse_lowrank_data(spec);
      pf.primal = sparse_lowrank_problem(*pf.sparse_lowrank);
      break;
    case Family::ClusterRecovery: {
      pf.kind = "dual_conic";
      std::vector<Index> sizes = spec.cluster_sizes;
      if (sizes.empty()) {
        if (spec.n < 4) throw UsageError("cluster_recovery: give cluster sizes or n >= 4");
        sizes = {spec.n / 2, spec.n - spec.n / 2};
      }
      pf.cluster = gen_cluster_data(sizes, spec.edge_prob_in, spec.edge_prob_out, spec.seed);
      pf.spec->cluster_sizes = sizes;
      pf.spec->n = static_cast<Index>(pf.cluster->labels.size());
      pf.dual = cluster_problem(*pf.cluster);
      break;
    }
  }
  return pf;
}

void validate_problem(const ProblemFile& pf) {
  if (pf.max_eig) validate_max_eig(*pf.max_eig);
  if (pf.sparse_lowrank) validate_sparse_lowrank(*pf.sparse_lowrank);
  if (pf.cluster) validate_cluster(*pf.cluster);
  if (pf.kind == "saddle") pf.saddle.validate();
  else if (pf.kind == "primal") pf.primal.validate();
  else if (pf.kind == "dual_conic") pf.dual.validate();
  else if (pf.kind == "inclusion") {
    if (!pf.inclusion.F) throw UsageError("inclusion: missing barrier");
    require_dim(pf.inclusion.A.dim(), pf.inclusion.F->dim(), "inclusion: operator");
    if (!pf.inclusion.F->in_domain(pf.inclusion.z0)) throw DomainError("inclusion: z0 is not interior");
  } else {
    throw UsageError("unknown problem kind '" + pf.kind + "'");
  }
}

Inclusion as_inclusion(const ProblemFile& pf) {
  if (pf.kind == "inclusion") return pf.inclusion;
  if (pf.kind == "saddle") {
    Vec z(pf.saddle.n() + pf.saddle.m());
    z << pf.saddle.x0, (pf.saddle.y0.size() > 0 ? pf.saddle.y0 : Vec::Zero(pf.saddle.m()));
    return Inclusion{pf.saddle.barrier(), pf.saddle.op(), z};
  }
  if (pf.kind == "primal") return Inclusion{pf.primal.f, subdiff_operator(pf.primal.g), pf.primal.x0};
  if (pf.kind == "dual_conic")
    return Inclusion{dual_barrier(pf.dual), dual_operator(pf.dual), find_dual_start(pf.dual)};
  throw UsageError("unknown problem kind '" + pf.kind + "'");
}

std::string problem_to_string(const ProblemFile& pf) {
  json j{{"format_version", kFormatVersion}, {"kind", pf.kind}};
  if (pf.spec) j["spec"] = spec_json(*pf.spec);
  if (pf.max_eig) {
    json Ls = json::array();
    for (const auto& Li : pf.max_eig->Ls) Ls.push_back(mat_json(Li));
    j["data"] = json{{"C", mat_json(pf.max_eig->C)}, {"L", Ls}};
  } else if (pf.sparse_lowrank) {
    const auto& d = *pf.sparse_lowrank;
    j["data"] = json{{"M0", mat_json(d.M0)}, {"M", mat_json(d.M)}, {"rho", d.rho}, {"lower", d.lower}, {"upper", d.upper}};
  } else if (pf.cluster) {
    const auto& d = *pf.cluster;
    j["data"] = json{{"A", mat_json(d.A)},  {"sizes", d.sizes}, {"labels", d.labels},
                     {"X_planted", mat_json(d.X_planted)}, {"s1", d.s1}, {"s2", d.s2}};
  }
  json r;
  if (pf.kind == "saddle") {
    const auto& P = pf.saddle;
    r = json{{"g", prox_json(P.g)}, {"psi", prox_json(P.psi)}, {"f", barrier_json(P.f)}, {"phi", barrier_json(P.phi)},
             {"L", mat_json(P.L)},  {"x0", vec_json(P.x0)},     {"y0", vec_json(P.y0)}};
    if (P.solver) r["subsolver"] = "saddle_affine";
  } else if (pf.kind == "primal") {
    r = json{{"g", prox_json(pf.primal.g)}, {"f", barrier_json(pf.primal.f)}, {"x0", vec_json(pf.primal.x0)}};
  } else if (pf.kind == "dual_conic") {
    const auto& P = pf.dual;
    r = json{{"c", vec_json(P.c_obj)}, {"b", vec_json(P.b)},        {"L", mat_json(P.L)},
             {"g", prox_json(P.g)},   {"f", barrier_json(P.f)},     {"cone_center", vec_json(P.cone_center)}};
  } else if (pf.kind == "inclusion") {
    const auto& I = pf.inclusion;
    r = json{{"F", barrier_json(I.F)}, {"G", prox_json(I.A.G)}, {"z0", vec_json(I.z0)}};
    if (I.A.K.size() > 0) r["K"] = mat_json(I.A.K);
    if (I.A.a.size() > 0) r["a"] = vec_json(I.A.a);
  } else {
    throw UsageError("unknown problem kind '" + pf.kind + "'");
  }
  j["problem"] = r;
  return j.dump(1) + "\n";
}

ProblemFile problem_from_string(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(source, std::string("malformed JSON: ") + e.what());
  }
  try {
    const int ver = field(j, "format_version", source).get<int>();
    if (ver != kFormatVersion) parse_fail(source, "unsupported format_version " + std::to_string(ver));
    ProblemFile pf;
    pf.kind = field(j, "kind", source).get<std::string>();
    if (j.contains("spec")) pf.spec = get_spec(j["spec"], source + ".spec");

    // Generated problems are rebuilt from their raw data.
    if (pf.spec && j.contains("data")) {
      const json& d = j["data"];
      const std::string w = source + ".data";
      switch (pf.spec->family) {
        case Family::MaxEigenvalue: {
          MaxEigData m;
          m.C = get_mat(field(d, "C", w), w + ".C");
          const json& Ls = field(d, "L", w);
          for (size_t i = 0; i < Ls.size(); ++i) m.Ls.push_back(get_mat(Ls[i], w + ".L[" + std::to_string(i) + "]"));
          pf.max_eig = m;
          pf.saddle = max_eig_problem(m);
          break;
        }
        case Family::SparseLowRank: {
          SparseLowRankData m;
          m.M0 = get_mat(field(d, "M0", w), w + ".M0");
          m.M = get_mat(field(d, "M", w), w + ".M");
          m.rho = get_num(field(d, "rho", w), w + ".rho");
          m.lower = get_num(field(d, "lower", w), w + ".lower");
          m.upper = get_num(field(d, "upper", w), w + ".upper");
          pf.sparse_lowrank = m;
          pf.primal = sparse_lowrank_problem(m);
          break;
        }
        case Family::ClusterRecovery: {
          ClusterData m;
          m.A = get_mat(field(d, "A", w), w + ".A");
          m.sizes = field(d, "sizes", w).get<std::vector<Index>>();
          m.labels = field(d, "labels", w).get<std::vector<Index>>();
          m.X_planted = get_mat(field(d, "X_planted", w), w + ".X_planted");
          m.s1 = get_num(field(d, "s1", w), w + ".s1");
          m.s2 = get_num(field(d, "s2", w), w + ".s2");
          pf.cluster = m;
          pf.dual = cluster_problem(m);
          break;
        }
      }
      return pf;
    }

    const std::string w = source + ".problem";
    const json& r = field(j, "problem", source);
    if (pf.kind == "saddle") {
      auto& P = pf.saddle;
      P.g = get_prox(field(r, "g", w), w + ".g");
      P.psi = get_prox(field(r, "psi", w), w + ".psi");
      P.f = get_barrier(field(r, "f", w), w + ".f");
      P.phi = get_barrier(field(r, "phi", w), w + ".phi");
      P.L = get_mat(field(r, "L", w), w + ".L");
      P.x0 = get_vec(field(r, "x0", w), w + ".x0");
      if (r.contains("y0")) P.y0 = get_vec(r["y0"], w + ".y0");
      if (r.value("subsolver", std::string()) == "saddle_affine") P.solver = saddle_affine_subsolver(P.n());
    } else if (pf.kind == "primal") {
      pf.primal.g = get_prox(field(r, "g", w), w + ".g");
      pf.primal.f = get_barrier(field(r, "f", w), w + ".f");
      pf.primal.x0 = get_vec(field(r, "x0", w), w + ".x0");
    } else if (pf.kind == "dual_conic") {
      pf.dual = as_dual(r, w);
    } else if (pf.kind == "inclusion") {
      auto& I = pf.inclusion;
      I.F = get_barrier(field(r, "F", w), w + ".F");
      I.A.G = get_prox(field(r, "G", w), w + ".G");
      if (r.contains("K")) I.A.K = get_mat(r["K"], w + ".K");
      if (r.contains("a")) I.A.a = get_vec(r["a"], w + ".a");
      I.z0 = get_vec(field(r, "z0", w), w + ".z0");
    } else {
      parse_fail(source, "unknown problem kind '" + pf.kind + "'");
    }
    return pf;
  } catch (const json::exception& e) {
    parse_fail(source, std::string("bad field: ") + e.what());
  }
}

void write_problem(const ProblemFile& pf, const std::string& path) { write_text(path, problem_to_string(pf)); }

ProblemFile read_problem(const std::string& path) { return problem_from_string(read_text(path), path); }

// ---------------------------------------------------------------------------
// solutions

void write_solution(const SolutionFile& s, const std::string& path) {
  json vals = json::object();
  for (const auto& [k, v] : s.values) vals[k] = num(v);
  const auto& c = s.schedule;
  json j{{"format_version", kFormatVersion},
         {"kind", s.kind},
         {"scheme", s.scheme},
         {"status", s.status},
         {"z", vec_json(s.z)},
         {"t", num(s.t)},
         {"lambda", num(s.lambda)},
         {"nu", num(s.nu)},
         {"schedule",
          {{"c", c.c}, {"beta", c.beta}, {"eta", c.eta}, {"nu", c.nu}, {"kappa", c.kappa}, {"t0", c.t0},
           {"sigma_bar", c.sigma_bar}, {"delta_t_bar", c.delta_t_bar}, {"delta_tau_bar", c.delta_tau_bar},
           {"phase1_step", c.phase1_step}, {"M0", c.M0}, {"theta", c.theta}}},
         {"budget", {{"k_max", s.budget.k_max}, {"j_max", s.budget.j_max}, {"j_max_running", s.budget_running.j_max}}},
         {"phase1_iters", s.phase1_iters},
         {"phase2_iters", s.phase2_iters},
         {"zeta_norm0", num(s.zeta_norm0)},
         {"zeta_norm_max", num(s.zeta_norm_max)},
         {"values", vals}};
  if (s.x_recovered) j["x_recovered"] = vec_json(*s.x_recovered);
  if (s.s_recovered) j["s_recovered"] = vec_json(*s.s_recovered);
  json lm = json::array();
  for (double v : s.lambda_mid) lm.push_back(num(v));
  j["lambda_mid"] = lm;
  write_text(path, j.dump(1) + "\n");
}

SolutionFile read_solution(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    parse_fail(path, std::string("malformed JSON: ") + e.what());
  }
  try {
    if (field(j, "format_version", path).get<int>() != kFormatVersion) parse_fail(path, "unsupported format_version");
    SolutionFile s;
    s.kind = field(j, "kind", path).get<std::string>();
    s.scheme = field(j, "scheme", path).get<std::string>();
    s.status = field(j, "status", path).get<std::string>();
    s.z = get_vec(field(j, "z", path), path + ".z");
    s.t = get_num(field(j, "t", path), path + ".t");
    s.lambda = get_num(field(j, "lambda", path), path + ".lambda");
    s.nu = get_num(field(j, "nu", path), path + ".nu");
    const json& c = field(j, "schedule", path);
    const std::string w = path + ".schedule";
    auto& sc = s.schedule;
    sc.c = get_num(field(c, "c", w), w);
    sc.beta = get_num(field(c, "beta", w), w);
    sc.eta = get_num(field(c, "eta", w), w);
    sc.nu = get_num(field(c, "nu", w), w);
    sc.kappa = get_num(field(c, "kappa", w), w);
    sc.t0 = get_num(field(c, "t0", w), w);
    sc.sigma_bar = get_num(field(c, "sigma_bar", w), w);
    sc.delta_t_bar = get_num(field(c, "delta_t_bar", w), w);
    sc.delta_tau_bar = get_num(field(c, "delta_tau_bar", w), w);
    sc.phase1_step = get_num(field(c, "phase1_step", w), w);
    sc.M0 = get_num(field(c, "M0", w), w);
    sc.theta = get_num(field(c, "theta", w), w);
    const json& b = field(j, "budget", path);
    s.budget.k_max = field(b, "k_max", path + ".budget").get<std::int64_t>();
    s.budget.j_max = field(b, "j_max", path + ".budget").get<std::int64_t>();
    s.budget_running.j_max = b.value("j_max_running", s.budget.j_max);
    s.budget_running.k_max = s.budget.k_max;
    s.phase1_iters = field(j, "phase1_iters", path).get<std::int64_t>();
    s.phase2_iters = field(j, "phase2_iters", path).get<std::int64_t>();
    s.zeta_norm0 = get_num(field(j, "zeta_norm0", path), path + ".zeta_norm0");
    s.zeta_norm_max = get_num(field(j, "zeta_norm_max", path), path + ".zeta_norm_max");
    for (const auto& [k, v] : field(j, "values", path).items()) s.values[k] = get_num(v, path + ".values." + k);
    if (j.contains("x_recovered")) s.x_recovered = get_vec(j["x_recovered"], path + ".x_recovered");
    if (j.contains("s_recovered")) s.s_recovered = get_vec(j["s_recovered"], path + ".s_recovered");
    if (j.contains("lambda_mid")) {
      const Vec lm = get_vec(j["lambda_mid"], path + ".lambda_mid");
      s.lambda_mid.assign(lm.data(), lm.data() + lm.size());
    }
    return s;
  } catch (const json::exception& e) {
    parse_fail(path, std::string("bad field: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// traces

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trace_to_csv(const std::vector<TraceRow>& rows) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& r : rows) {
    out += r.phase + "," + std::to_string(r.k);
    for (double v : {r.t, r.lambda, r.delta_target, r.delta_achieved, r.sigma, r.residual_primary, r.residual_aux,
                     r.wall_ms})
      out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

namespace {

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw UsageError(where + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

std::vector<TraceRow> trace_from_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) parse_fail(source, "empty trace");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) parse_fail(source + ":1", "unexpected header");
  static const char* names[] = {"phase", "k", "t", "lambda", "delta_target", "delta_achieved", "sigma",
                                "residual_primary", "residual_aux", "wall_ms"};
  std::vector<TraceRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    const std::string at = source + ":" + std::to_string(lineno);
    if (f.size() != 10) parse_fail(at, "expected 10 fields, got " + std::to_string(f.size()));
    TraceRow r;
    r.phase = f[0];
    if (r.phase != "1" && r.phase != "2" && r.phase != "fgn" && r.phase != "dgn" && r.phase != "damped")
      parse_fail(at, "field 'phase': unknown value '" + r.phase + "'");
    {
      std::int64_t k = 0;
      const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), k);
      if (res.ec != std::errc() || res.ptr != f[1].data() + f[1].size()) parse_fail(at, "field 'k': not an integer");
      r.k = k;
    }
    double* dst[] = {&r.t, &r.lambda, &r.delta_target, &r.delta_achieved, &r.sigma, &r.residual_primary,
                     &r.residual_aux, &r.wall_ms};
    for (int i = 0; i < 8; ++i) *dst[i] = parse_double(f[static_cast<size_t>(i + 2)], at + " field '" + names[i + 2] + "'");
    rows.push_back(r);
  }
  return rows;
}

void write_trace(const std::vector<TraceRow>& rows, const std::string& path) { write_text(path, trace_to_csv(rows)); }

std::vector<TraceRow> read_trace(const std::string& path) { return trace_from_csv(read_text(path), path); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw UsageError("write to '" + path + "' failed");
}

}  // namespace scinc
