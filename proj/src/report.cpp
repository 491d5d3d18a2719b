#include "opkit/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace opkit {

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["identity"] = r.identity;
  if (r.skipped) {
    j["skipped"] = true;
    j["reason"] = r.reason;
    if (!r.instance_digest.empty()) j["instance_digest"] = r.instance_digest;
    return j;
  }
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["window"] = r.window;
  j["instance_digest"] = r.instance_digest;
  if (!r.reason.empty()) j["note"] = r.reason;
  return j;
}

VerificationReport make_report(const std::string& id, double residual, double tolerance, nlohmann::json window) {
  VerificationReport r;
  r.identity = id;
  r.residual = residual;
  r.tolerance = tolerance;
  r.pass = std::isfinite(residual) && residual <= tolerance;
  r.window = window.is_null() ? nlohmann::json::object() : std::move(window);
  return r;
}

VerificationReport skipped_report(const std::string& id, const std::string& reason) {
  VerificationReport r;
  r.identity = id;
  r.skipped = true;
  r.reason = reason;
  return r;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, out, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(out[i]);
  return os.str();
}

std::string digest_matrices(const std::vector<Mat>& ops) {
  std::string buf;
  for (const auto& m : ops) {
    std::int64_t shape[2] = {static_cast<std::int64_t>(m.rows()), static_cast<std::int64_t>(m.cols())};
    buf.append(reinterpret_cast<const char*>(shape), sizeof(shape));
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) {
        double v[2] = {m(i, j).real(), m(i, j).imag()};
        buf.append(reinterpret_cast<const char*>(v), sizeof(v));
      }
  }
  return sha256_hex(buf);
}

}  // namespace opkit
