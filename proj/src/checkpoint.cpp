#include "protochaos/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "protochaos/errors.hpp"

namespace protochaos {

namespace {

constexpr const char* kTag = "protochaos-checkpoint v1";

// Hexfloat round-trips doubles exactly.
void append_hex(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  out += buf;
}

double parse_hex(const std::string& token, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || token.empty()) {
    throw ValidationError(std::string("checkpoint: bad ") + what + " value '" + token + "'");
  }
  return v;
}

}  // namespace

std::string render_checkpoint(const ProjectionHead& head) {
  std::string out = kTag;
  out += '\n';
  out += "dims " + std::to_string(head.out_dim()) + " " + std::to_string(head.in_dim()) +
         " " + (head.has_bias() ? "1" : "0") + "\n";
  out += "log_tau ";
  append_hex(out, head.log_tau);
  out += " epsilon ";
  append_hex(out, head.epsilon);
  out += '\n';
  for (Eigen::Index r = 0; r < head.out_dim(); ++r) {
    for (Eigen::Index c = 0; c < head.in_dim(); ++c) {
      if (c > 0) out += ' ';
      append_hex(out, head.weight(r, c));
    }
    out += '\n';
  }
  if (head.has_bias()) {
    for (Eigen::Index i = 0; i < head.out_dim(); ++i) {
      if (i > 0) out += ' ';
      append_hex(out, head.bias[i]);
    }
    out += '\n';
  }
  return out;
}

ProjectionHead parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTag) {
    throw ValidationError("checkpoint: missing or unsupported version tag");
  }
  std::string word;
  long d = 0, dim = 0;
  int has_bias = 0;
  in >> word >> d >> dim >> has_bias;
  if (word != "dims" || !in || d < 1 || dim < 1 || (has_bias != 0 && has_bias != 1)) {
    throw ValidationError("checkpoint: malformed dims line");
  }
  ProjectionHead head;
  std::string tau_hex, eps_hex;
  in >> word >> tau_hex;
  if (word != "log_tau" || !in) throw ValidationError("checkpoint: missing log_tau");
  head.log_tau = parse_hex(tau_hex, "log_tau");
  in >> word >> eps_hex;
  if (word != "epsilon" || !in) throw ValidationError("checkpoint: missing epsilon");
  head.epsilon = parse_hex(eps_hex, "epsilon");

  head.weight.resize(d, dim);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      if (!(in >> word)) throw ValidationError("checkpoint: truncated weight matrix");
      head.weight(r, c) = parse_hex(word, "weight");
    }
  }
  if (has_bias == 1) {
    head.bias.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(in >> word)) throw ValidationError("checkpoint: truncated bias vector");
      head.bias[i] = parse_hex(word, "bias");
    }
  }
  return head;
}

void save_checkpoint(const ProjectionHead& head, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << render_checkpoint(head);
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

ProjectionHead load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace protochaos
