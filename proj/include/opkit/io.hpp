#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "opkit/tetrablock.hpp"

namespace opkit {

nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);  // ParseError on malformed entries
nlohmann::json polynomial_to_json(const Polynomial& f);

// A parsed or generated instance together with the structure of its last member.
struct Instance {
  enum class Kind { Gamma, Tetra };
  Kind kind = Kind::Gamma;
  OperatorTuple tuple;  // Gamma kind
  ETriple triple;       // Tetra kind
  bool shift = false;   // last member is a truncated backward shift of multiplicity `block`
  Index block = 1;
  TruncationOrder trunc{32, 3};
  std::string generator;
  // Optional supplied fundamental operators (canonical defect bases) of the tuple and its adjoint.
  std::vector<Mat> fo_A, fo_B;

  const Mat& P() const { return kind == Kind::Gamma ? tuple.P() : triple.P; }
  std::vector<Mat> members() const;
  StructuredOperator structure() const;
};

nlohmann::json instance_to_json(const Instance& in);
Instance instance_from_json(const nlohmann::json& j);
Instance read_instance(const std::string& path);

// Generator ids of all modules; params are K=V strings.
Instance generate_instance(const std::string& id, const std::map<std::string, std::string>& params,
                           std::uint64_t seed);

nlohmann::json fo_to_json(const FoTuple& fo);
nlohmann::json fo_pair_to_json(const FoPair& f);

}  // namespace opkit
