#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "opkit/io.hpp"
#include "opkit/model.hpp"
#include "opkit/tetrablock.hpp"

using nlohmann::json;
using namespace opkit;

namespace {

enum Exit { Ok = 0, Other = 1, Input = 2, Dimension = 3, Residual = 4, VerifyFailed = 5 };

const std::vector<std::string> kCatalog = {
    "GAMMA-L44",     "GAMMA-L45",     "GAMMA-L43",   "GAMMA-L41a",   "GAMMA-L41b",    "GAMMA-SIGMA",
    "MODEL-APPX",    "MODEL-REL1",    "MODEL-NEC",   "MODEL-EXTRACT", "MODEL-DOUG",   "MODEL-BLKDIAG",
    "MODEL-POWDIL",  "TETRA-L52a",    "TETRA-L52b",  "TETRA-ASTAR",  "TETRA-HALFUNIT", "TETRA-NEC",
    "TETRA-EXTRACT", "TETRA-DIL"};

struct Config {
  std::string instance_file;
  std::string generator;
  std::vector<std::string> params;
  std::optional<std::uint64_t> seed;
  std::string ids = "all";
  std::optional<double> tol;
  std::optional<int> truncation;
  int grid = 4096;
  std::string format = "json";
  std::string out;
};

struct Loaded {
  Instance inst;
  std::map<std::string, std::string> verify_params;  // keys consumed by verify, not by the generator
  std::string digest;
};

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

std::map<std::string, std::string> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, std::string> out;
  for (const auto& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorCode::InvalidParams, "expected K=V, got " + s);
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

Tolerances tolerances(const Config& c) {
  Tolerances t;
  if (c.tol) {
    if (!(*c.tol > 0)) fail(ErrorCode::InvalidParams, "tolerance must be positive");
    t.residual_tol = *c.tol;
  }
  return t;
}

Loaded load(const Config& c) {
  Loaded l;
  if (!c.instance_file.empty() == !c.generator.empty())
    fail(ErrorCode::InvalidParams, "give exactly one of --instance and --generator");
  auto params = parse_params(c.params);
  for (const char* k : {"m_range", "samples"}) {
    auto it = params.find(k);
    if (it != params.end()) {
      l.verify_params[k] = it->second;
      params.erase(it);
    }
  }
  if (!c.instance_file.empty()) {
    if (!params.empty()) fail(ErrorCode::InvalidParams, "--params applies to generators only");
    l.inst = read_instance(c.instance_file);
    if (c.truncation) {
      l.inst.trunc.N = *c.truncation;
      l.inst.trunc.interior_margin = std::min(l.inst.trunc.interior_margin, *c.truncation - 1);
      l.inst.trunc.validate();
    }
  } else {
    if (!c.seed) fail(ErrorCode::InvalidParams, "--seed is required with --generator");
    if (c.truncation && !params.count("N")) params["N"] = std::to_string(*c.truncation);
    l.inst = generate_instance(c.generator, params, *c.seed);
  }
  l.digest = digest_matrices(l.inst.members());
  return l;
}

int int_value(const std::map<std::string, std::string>& p, const std::string& k, int dflt) {
  auto it = p.find(k);
  if (it == p.end()) return dflt;
  try {
    std::size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used == it->second.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidParams, "parameter " + k + " must be a positive integer");
}

void emit(const Config& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) fail(ErrorCode::ParseError, "cannot write " + c.out);
  f << text;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::scientific << v;
  return os.str();
}

// ---------------------------------------------------------------- check

int cmd_check(const Config& c) {
  auto l = load(c);
  auto tol = tolerances(c);
  json j;
  j["instance_digest"] = l.digest;
  std::optional<RefutationWitness> witness;
  if (l.inst.kind == Instance::Kind::Gamma) {
    auto r = classify_gamma_tuple(l.inst.tuple, tol, 200, c.seed.value_or(1));
    j["verdict"] = verdict_name(r.verdict);
    j["evidence"] = r.evidence;
    j["one_sided"] = r.one_sided;
    witness = r.witness;
  } else {
    auto r = classify_e_triple(l.inst.triple, tol, 200, c.seed.value_or(1));
    j["verdict"] = e_verdict_name(r.verdict);
    j["evidence"] = r.evidence;
    witness = r.witness;
  }
  if (witness)
    j["witness"] = {{"polynomial", polynomial_to_json(witness->f)},
                    {"tuple_norm", witness->tuple_norm},
                    {"sup_on_domain", witness->sup}};
  if (c.format == "json") {
    emit(c, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << "verdict: " << j["verdict"].get<std::string>() << "\n";
    for (auto& [k, v] : j["evidence"].items()) os << "  " << k << " = " << fmt(v.get<double>()) << "\n";
    if (witness)
      os << "witness: " << j["witness"]["polynomial"].dump() << " norm " << fmt(witness->tuple_norm) << " > sup "
         << fmt(witness->sup) << "\n";
    emit(c, os.str());
  }
  return Ok;
}

// ---------------------------------------------------------------- fo

json with_note(json fo, Index defect_dim) {
  if (defect_dim == 0) fo["note"] = "defect dimension 0";
  return fo;
}

int cmd_fo(const Config& c) {
  auto l = load(c);
  auto tol = tolerances(c);
  json j;
  j["instance_digest"] = l.digest;
  if (l.inst.kind == Instance::Kind::Gamma) {
    CharFnEvaluator ev(l.inst.structure(), l.inst.trunc, tol);
    auto A = fo_of(l.inst.tuple, ev, tol);
    j["A"] = with_note(fo_to_json(A), A.defect_dim);
    try {
      auto B = fo_of_adjoint(l.inst.tuple, ev, tol);
      j["B"] = with_note(fo_to_json(B), B.defect_dim);
    } catch (const OpkitError& e) {
      j["B_error"] = e.what();
    }
  } else {
    auto F = solve_fo_pair(l.inst.triple, tol);
    j["F"] = with_note(fo_pair_to_json(F), F.F1.rows());
    try {
      auto G = solve_fo_pair(l.inst.triple.adjoint(), tol);
      json g = fo_pair_to_json(G);
      g["G1"] = g["F1"];
      g["G2"] = g["F2"];
      g.erase("F1");
      g.erase("F2");
      j["G"] = with_note(g, G.F1.rows());
    } catch (const OpkitError& e) {
      j["G_error"] = e.what();
    }
  }
  if (c.format == "json") {
    emit(c, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const char* k : {"A", "B", "F", "G"}) {
      if (!j.contains(k)) continue;
      const auto& x = j[k];
      os << k << ": defect dimension " << x["defect_dim"].get<Index>() << ", residual "
         << fmt(x["residual"].get<double>()) << "\n";
      if (x.contains("ops"))
        for (std::size_t i = 0; i < x["ops"].size(); ++i) os << "  " << k << i + 1 << " = " << x["ops"][i].dump() << "\n";
      for (const char* m : {"F1", "F2", "G1", "G2"})
        if (x.contains(m)) os << "  " << m << " = " << x[m].dump() << "\n";
    }
    for (const char* k : {"B_error", "G_error"})
      if (j.contains(k)) os << k << ": " << j[k].get<std::string>() << "\n";
    emit(c, os.str());
  }
  return Ok;
}

// ---------------------------------------------------------------- verify

std::vector<std::string> select_ids(const std::string& ids) {
  if (ids == "all") return kCatalog;
  std::vector<std::string> want;
  std::stringstream ss(ids);
  for (std::string s; std::getline(ss, s, ',');)
    if (!s.empty()) want.push_back(s);
  for (const auto& w : want)
    if (std::find(kCatalog.begin(), kCatalog.end(), w) == kCatalog.end())
      fail(ErrorCode::InvalidParams, "unknown identity " + w);
  std::vector<std::string> out;
  for (const auto& id : kCatalog)
    if (std::find(want.begin(), want.end(), id) != want.end()) out.push_back(id);
  return out;
}

// Lazily computed shared data; a failed step records its reason and the dependent ids are skipped.
class Verifier {
 public:
  Verifier(const Loaded& l, const Tolerances& tol, const Config& c) : l_(l), tol_(tol) {
    seed_ = c.seed.value_or(1);
    opt_.grid = c.grid;
    opt_.m_range = int_value(l.verify_params, "m_range", 8);
    opt_.samples = int_value(l.verify_params, "samples", 8);
    opt_.seed = seed_;
  }

  VerificationReport run(const std::string& id) {
    const bool gamma = l_.inst.kind == Instance::Kind::Gamma;
    if (starts_with(id, "GAMMA-") || starts_with(id, "MODEL-")) {
      if (!gamma) return skipped_report(id, "requires an operator tuple instance");
      return starts_with(id, "GAMMA-") ? run_gamma(id) : run_model(id);
    }
    if (gamma) return skipped_report(id, "requires a tetrablock instance");
    return run_tetra(id);
  }

 private:
  template <class F>
  bool step(std::string& reason, F&& f) {
    try {
      f();
      return true;
    } catch (const OpkitError& e) {
      reason = e.what();
      return false;
    }
  }

  bool evaluator() {
    if (!ev_ && ev_reason_.empty())
      step(ev_reason_, [&] {
        ev_ = std::make_shared<const CharFnEvaluator>(l_.inst.structure(), l_.inst.trunc, tol_);
      });
    return ev_ != nullptr;
  }

  // Operators given in the instance replace the solved ones.
  static void supply(FoTuple& fo, const std::vector<Mat>& given) {
    if (given.empty()) return;
    if (given.size() != fo.ops.size()) fail(ErrorCode::DimensionMismatch, "supplied fundamental tuple length");
    for (std::size_t i = 0; i < given.size(); ++i)
      if (given[i].rows() != fo.defect_dim || given[i].cols() != fo.defect_dim)
        fail(ErrorCode::DimensionMismatch, "supplied fundamental operator does not match the defect dimension");
    fo.ops = given;
  }

  bool gamma_fo() {
    if (!evaluator()) {
      fo_reason_ = ev_reason_;
      return false;
    }
    if (!A_ && fo_reason_.empty())
      step(fo_reason_, [&] {
        A_ = fo_of(l_.inst.tuple, *ev_, tol_);
        B_ = fo_of_adjoint(l_.inst.tuple, *ev_, tol_);
        supply(*A_, l_.inst.fo_A);
        supply(*B_, l_.inst.fo_B);
      });
    return A_.has_value() && B_.has_value();
  }

  VerificationReport run_gamma(const std::string& id) {
    if (!gamma_fo()) return skipped_report(id, "fundamental operators unavailable: " + fo_reason_);
    GammaIdentityInput in;
    in.tuple = &l_.inst.tuple;
    in.A = &*A_;
    in.B = &*B_;
    in.theta = ev_.get();
    in.trusted = ev_->trusted();
    in.seed = seed_;
    if (id == "GAMMA-L41a" || id == "GAMMA-L41b") {
      if (!ev_->pure_blocks()) return skipped_report(id, "P has a unitary part");
      if (ev_->astar().size() == 0) return skipped_report(id, "strong limit A_* did not converge");
      in.astar = &ev_->astar();
    }
    return verify_gamma_identity(id, in, tol_);
  }

  // Leading window of P isometric and S_j = c_j + c'_j M_z there: the multiplier tuple itself.
  bool binomial_isometry() const {
    const auto& t = l_.inst.tuple;
    if (l_.inst.shift || t.window == 0) return false;
    std::vector<Index> lead;
    for (Index i = 0; i < t.trusted(); ++i) lead.push_back(i);
    const Mat& P = t.P();
    if (windowed_norm(P.adjoint() * P - identity(P.rows()), lead, lead) > tol_.residual_tol) return false;
    for (int j = 1; j < t.n; ++j) {
      Mat expect = binomial(t.n - 1, j) * identity(P.rows()) + binomial(t.n - 1, j - 1) * P;
      if (windowed_norm(t.S(j) - expect, lead, lead) > tol_.residual_tol) return false;
    }
    return true;
  }

  VerificationReport run_model(const std::string& id) {
    if (binomial_isometry()) {
      if (id != "MODEL-EXTRACT") return skipped_report(id, "isometric last member has no pure model");
      if (!dil_ && dil_reason_.empty())
        step(dil_reason_, [&] {
          dil_ = binomial_multiplier_instance(l_.inst.tuple.n, l_.inst.trunc, 0.5, tol_);
        });
      if (!dil_) return skipped_report(id, "multiplier model unavailable: " + dil_reason_);
      return verify_model_identity(id, &*dil_, tol_, opt_);
    }
    if (!evaluator()) return skipped_report(id, "evaluator unavailable: " + ev_reason_);
    if (!dil_ && dil_reason_.empty())
      step(dil_reason_, [&] { dil_ = prepare_dilation(l_.inst.tuple, ev_, l_.inst.trunc, tol_); });
    if (!dil_) return skipped_report(id, "dilation data unavailable: " + dil_reason_);
    return verify_model_identity(id, &*dil_, tol_, opt_);
  }

  VerificationReport run_tetra(const std::string& id) {
    const auto& t = l_.inst.triple;
    ETetraInput in;
    in.N = l_.inst.trunc.N;
    in.samples = opt_.samples;
    in.seed = seed_;
    if (id == "TETRA-HALFUNIT") return verify_tetra_identity(id, in, tol_);
    if (id == "TETRA-ASTAR") {
      if (!evaluator()) return skipped_report(id, "evaluator unavailable: " + ev_reason_);
      if (!ev_->pure_blocks()) return skipped_report(id, "P has a unitary part");
      if (ev_->astar().size() == 0) return skipped_report(id, "strong limit A_* did not converge");
      in.triple = &t;
      in.astar = &ev_->astar();
      in.trusted = ev_->trusted();
      return verify_tetra_identity(id, in, tol_);
    }
    if (id == "TETRA-L52a" || id == "TETRA-L52b") {
      if (l_.inst.shift) return skipped_report(id, "no finite evaluator of P* for a truncated shift");
      if (!F_ && pair_reason_.empty())
        step(pair_reason_, [&] {
          F_ = solve_fo_pair(t, tol_);
          G_ = solve_fo_pair(t.adjoint(), tol_);
          ev_adj_ = std::make_unique<CharFnEvaluator>(Mat(t.P.adjoint()), tol_);
        });
      if (!ev_adj_) return skipped_report(id, "fundamental operators unavailable: " + pair_reason_);
      in.F = &*F_;
      in.G = &*G_;
      in.theta_adj = ev_adj_.get();
      return verify_tetra_identity(id, in, tol_);
    }
    if (!evaluator()) return skipped_report(id, "evaluator unavailable: " + ev_reason_);
    if (!edil_ && edil_reason_.empty())
      step(edil_reason_, [&] {
        FoPair F, G;
        edil_ = prepare_e_dilation(t, ev_, l_.inst.trunc, tol_, &F, &G);
      });
    if (!edil_) return skipped_report(id, "dilation data unavailable: " + edil_reason_);
    in.model = &*edil_;
    return verify_tetra_identity(id, in, tol_);
  }

  const Loaded& l_;
  Tolerances tol_;
  ModelVerifyOptions opt_;
  std::uint64_t seed_ = 1;
  std::shared_ptr<const CharFnEvaluator> ev_;
  std::unique_ptr<CharFnEvaluator> ev_adj_;
  std::optional<FoTuple> A_, B_;
  std::optional<FoPair> F_, G_;
  std::optional<DilationInstance> dil_, edil_;
  std::string ev_reason_, fo_reason_, dil_reason_, pair_reason_, edil_reason_;
};

int cmd_verify(const Config& c) {
  auto l = load(c);
  auto tol = tolerances(c);
  auto ids = select_ids(c.ids);
  Verifier v(l, tol, c);
  std::vector<VerificationReport> reports;
  bool ok = true;
  for (const auto& id : ids) {
    auto r = v.run(id);
    r.instance_digest = l.digest;
    if (!r.skipped && !r.pass) ok = false;
    reports.push_back(std::move(r));
  }
  if (c.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    emit(c, arr.dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const auto& r : reports) {
      os << r.identity << " " << (r.skipped ? "SKIP" : r.pass ? "PASS" : "FAIL");
      if (!r.skipped) os << " residual " << fmt(r.residual) << " tol " << fmt(r.tolerance);
      if (!r.reason.empty()) os << " (" << r.reason << ")";
      os << "\n";
    }
    emit(c, os.str());
  }
  return ok ? Ok : VerifyFailed;
}

// ---------------------------------------------------------------- generate

int cmd_generate(const Config& c) {
  if (c.generator.empty()) fail(ErrorCode::InvalidParams, "generate needs --generator");
  auto l = load(c);
  emit(c, instance_to_json(l.inst).dump(2) + "\n");
  return Ok;
}

int exit_for(const OpkitError& e, const std::string& command) {
  switch (e.code()) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidParams:
    case ErrorCode::MissingInput:
    case ErrorCode::NonFiniteEntry:
      return Input;
    case ErrorCode::DimensionMismatch:
      return Dimension;
    case ErrorCode::ResidualTooLarge:
      return command == "fo" ? Residual : Other;
    default:
      return Other;
  }
}

void add_common(CLI::App* sub, Config& c) {
  auto* inst = sub->add_option("--instance", c.instance_file, "instance JSON file");
  auto* gen = sub->add_option("--generator", c.generator, "generator id");
  inst->excludes(gen);
  sub->add_option("--params", c.params, "generator parameters K=V")->expected(0, -1);
  sub->add_option("--seed", c.seed, "generator seed");
  sub->add_option("--tol", c.tol, "residual tolerance");
  sub->add_option("--truncation", c.truncation, "truncation order N")->check(CLI::PositiveNumber);
  sub->add_option("--grid", c.grid, "FFT grid size")->check(CLI::PositiveNumber);
  sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "text"}));
  sub->add_option("--out", c.out, "output file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator tuple checks, fundamental operators and identity verification"};
  app.require_subcommand(1);
  Config c;
  auto* check = app.add_subcommand("check", "classify an operator tuple or triple");
  auto* fo = app.add_subcommand("fo", "solve for the fundamental operators");
  auto* verify = app.add_subcommand("verify", "run identity checks");
  auto* generate = app.add_subcommand("generate", "write a generated instance");
  for (auto* s : {check, fo, verify, generate}) add_common(s, c);
  verify->add_option("--ids", c.ids, "comma separated identity ids or all");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? Ok : Input;
  }
  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "check") return cmd_check(c);
    if (command == "fo") return cmd_fo(c);
    if (command == "verify") return cmd_verify(c);
    return cmd_generate(c);
  } catch (const OpkitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e, command);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Other;
  }
}
