#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "knaf/naf_policy.hpp"

namespace knaf::io {

static_assert(std::endian::native == std::endian::little,
              "policy files store little-endian doubles");

/// Where a policy came from; informational only.
struct Provenance {
  std::string map_name = "-";
  long steps = 0;
  std::uint64_t seed = 0;
};

struct LoadedPolicy {
  NAFPolicy policy;
  Provenance provenance;
};

namespace detail {

inline void write_doubles(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  }
}

inline void read_doubles(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof(double))) {
        throw std::runtime_error("policy file: truncated payload");
      }
      m(r, c) = v;
    }
  }
}

inline Eigen::VectorXd parse_vector(std::istringstream& ls, Eigen::Index n,
                                    const std::string& key) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(ls >> v(i))) {
      throw std::runtime_error("policy file: bad '" + key + "' line");
    }
  }
  return v;
}

}  // namespace detail

/// Text header (layout, bounds, provenance) followed by the numeric payload
/// as raw little-endian doubles, so evaluations round-trip bit-exactly.
inline void save_policy(std::ostream& out, const NAFPolicy& p,
                        const Provenance& prov = Provenance()) {
  char buf[512];
  out << "KNAF-POLICY v1\n";
  out << "state_dim " << p.state_dim() << "\n";
  out << "action_dim " << p.action_dim() << "\n";
  std::snprintf(buf, sizeof(buf), "l0 %.17g\n", p.l0());
  out << buf;
  out << "bandwidth";
  for (Eigen::Index i = 0; i < p.kernel().bandwidth().size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", p.kernel().bandwidth()(i));
    out << buf;
  }
  out << "\naction_low";
  for (Eigen::Index i = 0; i < p.action_low().size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", p.action_low()(i));
    out << buf;
  }
  out << "\naction_high";
  for (Eigen::Index i = 0; i < p.action_high().size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", p.action_high()(i));
    out << buf;
  }
  out << "\norder " << p.order() << "\n";
  out << "map " << (prov.map_name.empty() ? "-" : prov.map_name) << "\n";
  out << "steps " << prov.steps << "\n";
  out << "seed " << prov.seed << "\n";
  const long payload =
      static_cast<long>(p.order()) * (p.state_dim() + p.stacked_dim());
  out << "payload " << payload << "\n";
  out << "BINARY\n";
  detail::write_doubles(out, p.centers());
  detail::write_doubles(out, p.stacked_weights());
}

inline LoadedPolicy load_policy(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "KNAF-POLICY v1") {
    throw std::runtime_error("policy file: bad magic/version");
  }
  int state_dim = -1, action_dim = -1;
  long order = -1, payload = -1;
  double l0 = 0.0;
  Eigen::VectorXd bandwidth, low, high;
  Provenance prov;
  bool saw_binary = false;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "BINARY") {
      saw_binary = true;
      break;
    } else if (key == "state_dim") {
      ls >> state_dim;
    } else if (key == "action_dim") {
      ls >> action_dim;
    } else if (key == "l0") {
      ls >> l0;
    } else if (key == "bandwidth") {
      if (state_dim <= 0) throw std::runtime_error("policy file: bandwidth before state_dim");
      bandwidth = detail::parse_vector(ls, state_dim, key);
    } else if (key == "action_low") {
      if (action_dim <= 0) throw std::runtime_error("policy file: action_low before action_dim");
      low = detail::parse_vector(ls, action_dim, key);
    } else if (key == "action_high") {
      if (action_dim <= 0) throw std::runtime_error("policy file: action_high before action_dim");
      high = detail::parse_vector(ls, action_dim, key);
    } else if (key == "order") {
      ls >> order;
    } else if (key == "map") {
      ls >> prov.map_name;
    } else if (key == "steps") {
      ls >> prov.steps;
    } else if (key == "seed") {
      ls >> prov.seed;
    } else if (key == "payload") {
      ls >> payload;
    } else {
      throw std::runtime_error("policy file: unknown header key '" + key + "'");
    }
  }
  if (!saw_binary || state_dim <= 0 || action_dim <= 0 || order < 0 ||
      bandwidth.size() == 0 || low.size() == 0 || high.size() == 0) {
    throw std::runtime_error("policy file: incomplete header");
  }
  const int stacked = 2 + action_dim + action_dim * action_dim;
  if (payload != order * (state_dim + stacked)) {
    throw std::runtime_error("policy file: payload size mismatch");
  }
  Eigen::MatrixXd centers(order, state_dim);
  Eigen::MatrixXd weights(order, stacked);
  detail::read_doubles(in, centers);
  detail::read_doubles(in, weights);
  NAFPolicy p(GaussianKernel(bandwidth), std::move(low), std::move(high), l0,
              std::move(centers), std::move(weights));
  return {std::move(p), std::move(prov)};
}

inline void save_policy_file(const std::string& path, const NAFPolicy& p,
                             const Provenance& prov = Provenance()) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write policy file '" + path + "'");
  save_policy(f, p, prov);
  if (!f.good()) {
    throw std::runtime_error("failed writing policy file '" + path + "'");
  }
}

inline LoadedPolicy load_policy_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read policy file '" + path + "'");
  return load_policy(f);
}

}  // namespace knaf::io
