#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "opkit/linalg.hpp"

namespace opkit {

struct VerificationReport {
  std::string identity;
  double residual = 0;
  double tolerance = 0;
  bool pass = false;
  bool skipped = false;
  std::string reason;  // skip reason or failure detail
  nlohmann::json window = nlohmann::json::object();
  std::string instance_digest;
};

nlohmann::json to_json(const VerificationReport& r);
VerificationReport make_report(const std::string& id, double residual, double tolerance, nlohmann::json window = {});
VerificationReport skipped_report(const std::string& id, const std::string& reason);

std::string sha256_hex(const std::string& bytes);
// Hash of shapes and raw IEEE bytes of the operators, order sensitive.
std::string digest_matrices(const std::vector<Mat>& ops);

}  // namespace opkit
