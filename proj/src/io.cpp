#include "opkit/io.hpp"

#include <fstream>
#include <sstream>

namespace opkit {

using nlohmann::json;

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::ParseError, "matrix must be an array of rows");
  const Index r = static_cast<Index>(j.size());
  Index c = -1;
  Mat m;
  for (Index i = 0; i < r; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) fail(ErrorCode::ParseError, "matrix row must be an array");
    if (c < 0) {
      c = static_cast<Index>(row.size());
      m.resize(r, c);
    }
    if (static_cast<Index>(row.size()) != c) fail(ErrorCode::DimensionMismatch, "ragged matrix rows");
    for (Index k = 0; k < c; ++k) {
      const auto& e = row[static_cast<std::size_t>(k)];
      if (e.is_number()) {
        m(i, k) = cplx(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        fail(ErrorCode::ParseError, "matrix entries must be numbers or [re, im] pairs");
      }
    }
  }
  if (r == 0) return Mat(0, 0);
  return m;
}

json polynomial_to_json(const Polynomial& f) {
  json terms = json::array();
  for (const auto& t : f.terms) terms.push_back({{"exponents", t.alpha}, {"coeff", {t.coeff.real(), t.coeff.imag()}}});
  return {{"variables", f.n}, {"terms", terms}};
}

std::vector<Mat> Instance::members() const {
  if (kind == Kind::Gamma) return tuple.members;
  return {triple.A, triple.B, triple.P};
}

StructuredOperator Instance::structure() const {
  if (shift) return StructuredOperator::make_shift_adjoint(block);
  return StructuredOperator::make_finite(P());
}

json instance_to_json(const Instance& in) {
  json j;
  if (in.kind == Instance::Kind::Gamma) {
    j["n"] = in.tuple.n;
    j["dim"] = in.tuple.dim();
    json m = json::array();
    for (const auto& x : in.tuple.members) m.push_back(matrix_to_json(x));
    j["members"] = m;
    j["window"] = in.tuple.window;
  } else {
    j["kind"] = "tetrablock";
    j["dim"] = in.triple.dim();
    j["members"] = {{"A", matrix_to_json(in.triple.A)}, {"B", matrix_to_json(in.triple.B)},
                    {"P", matrix_to_json(in.triple.P)}};
    j["window"] = in.triple.window;
  }
  if (in.shift)
    j["structure"] = {{"kind", "shift-adjoint"}, {"block", in.block}, {"N", in.trunc.N},
                      {"margin", in.trunc.interior_margin}};
  if (!in.generator.empty()) j["generator"] = in.generator;
  if (!in.fo_A.empty() || !in.fo_B.empty()) {
    json f = json::object();
    for (auto [key, ops] : {std::pair{"A", &in.fo_A}, std::pair{"B", &in.fo_B}}) {
      json a = json::array();
      for (const auto& x : *ops) a.push_back(matrix_to_json(x));
      f[key] = a;
    }
    j["fundamental"] = f;
  }
  return j;
}

Instance instance_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "instance must be a JSON object");
  if (!j.contains("members")) fail(ErrorCode::ParseError, "instance has no members");
  Instance in;
  Index window = j.value("window", static_cast<Index>(0));
  if (j.contains("structure")) {
    const auto& s = j["structure"];
    if (!s.is_object() || s.value("kind", "") != "shift-adjoint")
      fail(ErrorCode::ParseError, "unsupported structure description");
    in.shift = true;
    in.block = s.value("block", static_cast<Index>(1));
    in.trunc = TruncationOrder{s.value("N", 32), s.value("margin", 3)};
    in.trunc.validate();
  }
  const auto& m = j["members"];
  if (m.is_object()) {
    in.kind = Instance::Kind::Tetra;
    for (const char* k : {"A", "B", "P"})
      if (!m.contains(k)) fail(ErrorCode::ParseError, std::string("tetrablock member ") + k + " missing");
    in.triple = ETriple::make(matrix_from_json(m["A"]), matrix_from_json(m["B"]), matrix_from_json(m["P"]), window);
  } else if (m.is_array()) {
    std::vector<Mat> ops;
    for (const auto& x : m) {
      ops.push_back(matrix_from_json(x));
      require_square(ops.back(), "tuple member");
      if (ops.back().rows() != ops.front().rows()) fail(ErrorCode::DimensionMismatch, "tuple members differ in size");
    }
    if (j.contains("n") && j["n"].get<int>() != static_cast<int>(ops.size()))
      fail(ErrorCode::DimensionMismatch, "n does not match the member count");
    if (ops.size() < 2) fail(ErrorCode::DimensionMismatch, "a tuple needs at least two members");
    in.tuple = OperatorTuple::make(std::move(ops), window);
  } else {
    fail(ErrorCode::ParseError, "members must be an array or an object");
  }
  if (j.contains("dim") && j["dim"].get<Index>() != in.P().rows())
    fail(ErrorCode::DimensionMismatch, "dim does not match the members");
  if (in.shift && in.P().rows() != (in.trunc.N + 1) * in.block)
    fail(ErrorCode::DimensionMismatch, "structure size does not match the members");
  in.generator = j.value("generator", "");
  if (j.contains("fundamental")) {
    const auto& f = j["fundamental"];
    if (!f.is_object() || in.kind != Instance::Kind::Gamma)
      fail(ErrorCode::ParseError, "fundamental must be an object on a tuple instance");
    for (auto [key, ops] : {std::pair{"A", &in.fo_A}, std::pair{"B", &in.fo_B}}) {
      if (!f.contains(key)) continue;
      if (!f[key].is_array()) fail(ErrorCode::ParseError, std::string("fundamental ") + key + " must be an array");
      for (const auto& x : f[key]) ops->push_back(matrix_from_json(x));
    }
  }
  return in;
}

Instance read_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::ParseError, "cannot read " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what());
  }
  try {
    return instance_from_json(j);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad field: ") + e.what());
  }
}

namespace {

int int_param(const std::map<std::string, std::string>& p, const std::string& k, int dflt) {
  auto it = p.find(k);
  if (it == p.end()) return dflt;
  try {
    std::size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(k);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidParams, "parameter " + k + " must be an integer");
  }
}

double real_param(const std::map<std::string, std::string>& p, const std::string& k, double dflt) {
  auto it = p.find(k);
  if (it == p.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidParams, "parameter " + k + " must be a number");
  }
}

// "a:b,c,d:e" -> a+bi, c, d+ei
std::vector<cplx> point_param(const std::map<std::string, std::string>& p) {
  std::vector<cplx> out;
  auto it = p.find("point");
  if (it == p.end()) return out;
  std::stringstream ss(it->second);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos)
        out.emplace_back(std::stod(item), 0.0);
      else
        out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidParams, "point must be a comma list of re or re:im");
  }
  return out;
}

void check_known(const std::map<std::string, std::string>& p, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) fail(ErrorCode::InvalidParams, "unknown parameter " + k);
  }
}

}  // namespace

Instance generate_instance(const std::string& id, const std::map<std::string, std::string>& params,
                           std::uint64_t seed) {
  Instance in;
  in.generator = id;
  const int N = int_param(params, "N", 32), margin = int_param(params, "margin", 3);
  if (id == "symmetrized-unitaries" || id == "binomial-isometry" || id == "pure-compression" || id == "scalar") {
    check_known(params, {"n", "dim", "N", "block", "margin", "radius", "point"});
    GammaGeneratorParams g;
    g.n = int_param(params, "n", 3);
    g.dim = int_param(params, "dim", 4);
    g.N = int_param(params, "N", 16);
    g.block = int_param(params, "block", 1);
    g.margin = margin;
    g.radius = real_param(params, "radius", 0.6);
    g.point = point_param(params);
    in.tuple = make_gamma_instance(parse_gamma_generator(id), g, seed);
    in.trunc = TruncationOrder{std::max(g.N, 4), std::min(margin, std::max(g.N, 4) - 1)};
    return in;
  }
  if (id == "backshift-astar" || id == "sigma-safe" || id == "zero-p") {
    check_known(params, {"n", "dim", "N", "block", "margin"});
    ModelInstanceParams m;
    m.n = int_param(params, "n", 3);
    m.dim = int_param(params, "dim", 4);
    m.N = N;
    m.block = int_param(params, "block", 1);
    m.margin = margin;
    auto kind = id == "backshift-astar" ? ModelFamily::Backshift
                : id == "sigma-safe"    ? ModelFamily::PureSigmaSafe
                                        : ModelFamily::ZeroP;
    auto mi = make_model_instance(kind, m, seed);
    in.tuple = mi.tuple;
    in.trunc = mi.trunc;
    in.shift = kind == ModelFamily::Backshift;
    in.block = m.block;
    return in;
  }
  check_known(params, {"dim", "N", "margin", "point"});
  EGeneratorParams e;
  e.dim = int_param(params, "dim", 4);
  e.N = N;
  e.margin = margin;
  e.point = point_param(params);
  auto kind = parse_e_generator(id);
  in.kind = Instance::Kind::Tetra;
  in.triple = make_e_instance(kind, e, seed);
  in.trunc = TruncationOrder{N, margin};
  in.shift = kind == EGenerator::Backshift;
  in.block = 1;
  return in;
}

json fo_to_json(const FoTuple& fo) {
  json ops = json::array();
  for (const auto& a : fo.ops) ops.push_back(matrix_to_json(a));
  return {{"n", fo.n},
          {"defect_dim", fo.defect_dim},
          {"residual", fo.residual},
          {"ops", ops},
          {"defect_basis", matrix_to_json(fo.defect.space.basis)}};
}

json fo_pair_to_json(const FoPair& f) {
  return {{"F1", matrix_to_json(f.F1)},
          {"F2", matrix_to_json(f.F2)},
          {"defect_dim", f.F1.rows()},
          {"residual", f.residual},
          {"solver_gap", f.solver_gap},
          {"fo_commute", f.fo_commute},
          {"defect_balance", f.defect_balance},
          {"defect_basis", matrix_to_json(f.defect.space.basis)}};
}

}  // namespace opkit
