#pragma once

// Text serialization of tabular and discretized linear MDPs.
//
//   rsdrl-mdp 1
//   states <S>
//   actions <A>
//   horizon <H>
//   reward_points <M>
//   reward_origin <z_1>
//   reward_spacing <delta>
//   initial_state <s_1>
//   [feature_dim <d>]
//   transitions            # H*S*A lines: h s a p(s'=0) ... p(s'=S-1)
//   rewards                # H*S*A lines: h s a p(z_1) ... p(z_M)
//   [phi]                  # S*A lines:   s a phi_1 ... phi_d
//   [mu]                   # H*S lines:   h s' mu_1 ... mu_d
//   [theta]                # H*M lines:   h i theta_1 ... theta_d
//   end
//
// Reals are written with 17 significant digits, which round-trips every
// double exactly. Lines starting with '#' are comments.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rsdrl/error.hpp"
#include "rsdrl/linear_mdp.hpp"
#include "rsdrl/tabular_mdp.hpp"

namespace rsdrl {

inline std::string format_exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_header(std::ostream& os, const TabularMDP& mdp) {
  os << "rsdrl-mdp 1\n"
     << "states " << mdp.n_states() << "\n"
     << "actions " << mdp.n_actions() << "\n"
     << "horizon " << mdp.horizon() << "\n"
     << "reward_points " << mdp.n_rewards() << "\n"
     << "reward_origin " << format_exact(mdp.reward_grid().origin()) << "\n"
     << "reward_spacing " << format_exact(mdp.reward_grid().spacing()) << "\n"
     << "initial_state " << mdp.initial_state() << "\n";
}

inline void write_tables(std::ostream& os, const TabularMDP& mdp) {
  os << "transitions\n";
  for (std::size_t h = 0; h < mdp.horizon(); ++h)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        os << h << ' ' << s << ' ' << a;
        for (double p : mdp.transition_row(h, s, a)) os << ' ' << format_exact(p);
        os << '\n';
      }
  os << "rewards\n";
  for (std::size_t h = 0; h < mdp.horizon(); ++h)
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        os << h << ' ' << s << ' ' << a;
        for (double p : mdp.reward_row(h, s, a)) os << ' ' << format_exact(p);
        os << '\n';
      }
}

inline void write_vector_line(std::ostream& os, std::size_t i, std::size_t j, const Eigen::VectorXd& v) {
  os << i << ' ' << j;
  for (Eigen::Index k = 0; k < v.size(); ++k) os << ' ' << format_exact(v[k]);
  os << '\n';
}

class LineReader {
public:
  explicit LineReader(std::istream& is) : is_(is) {}

  // Next non-empty, non-comment line split into tokens.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string t; ss >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    throw IoError("mdp file: unexpected end of input after line " + std::to_string(line_no_));
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError("mdp file line " + std::to_string(line_no_) + ": " + what);
  }

  double real(const std::string& token) const {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') fail("not a number: '" + token + "'");
    return v;
  }

  std::size_t count(const std::string& token) const {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || token.front() == '-') fail("not a count: '" + token + "'");
    return static_cast<std::size_t>(v);
  }

  std::size_t keyed(const std::string& key) {
    const auto t = next();
    if (t.size() != 2 || t[0] != key) fail("expected '" + key + " <value>'");
    return count(t[1]);
  }
  double keyed_real(const std::string& key) {
    const auto t = next();
    if (t.size() != 2 || t[0] != key) fail("expected '" + key + " <value>'");
    return real(t[1]);
  }

  // "i j v_1 ... v_n" with the expected leading indices.
  std::vector<double> row(std::initializer_list<std::size_t> expect, std::size_t n) {
    const auto t = next();
    if (t.size() != expect.size() + n) fail("expected " + std::to_string(expect.size() + n) + " fields");
    std::size_t k = 0;
    for (std::size_t e : expect)
      if (count(t[k++]) != e) fail("row indices out of order");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = real(t[k + i]);
    return out;
  }

  void expect_word(const std::string& word) {
    const auto t = next();
    if (t.size() != 1 || t[0] != word) fail("expected section '" + word + "'");
  }

private:
  std::istream& is_;
  std::size_t line_no_ = 0;
};

} // namespace detail

inline void write_mdp(std::ostream& os, const TabularMDP& mdp) {
  detail::write_header(os, mdp);
  detail::write_tables(os, mdp);
  os << "end\n";
}

inline void write_mdp(std::ostream& os, const DiscretizedLinearMDP& lin) {
  const TabularMDP& mdp = lin.tabular;
  detail::write_header(os, mdp);
  os << "feature_dim " << lin.dim << "\n";
  detail::write_tables(os, mdp);
  os << "phi\n";
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) detail::write_vector_line(os, s, a, lin.feature(s, a));
  os << "mu\n";
  for (std::size_t h = 0; h < mdp.horizon(); ++h)
    for (std::size_t s = 0; s < mdp.n_states(); ++s) detail::write_vector_line(os, h, s, lin.mu[h][s]);
  os << "theta\n";
  for (std::size_t h = 0; h < mdp.horizon(); ++h)
    for (std::size_t i = 0; i < mdp.n_rewards(); ++i) detail::write_vector_line(os, h, i, lin.theta[h][i]);
  os << "end\n";
}

struct ParsedMdp {
  TabularMDP tabular;
  std::optional<DiscretizedLinearMDP> linear; // present when features were stored
};

/// Reads either form. Tables are taken verbatim (bit-exact); for linear
/// files the stored features are checked against the stored tables.
inline ParsedMdp read_mdp(std::istream& is) {
  detail::LineReader in(is);
  {
    const auto magic = in.next();
    if (magic.size() != 2 || magic[0] != "rsdrl-mdp" || magic[1] != "1") in.fail("missing 'rsdrl-mdp 1' header");
  }
  const std::size_t n_s = in.keyed("states");
  const std::size_t n_a = in.keyed("actions");
  const std::size_t horizon = in.keyed("horizon");
  const std::size_t m = in.keyed("reward_points");
  const double origin = in.keyed_real("reward_origin");
  const double spacing = in.keyed_real("reward_spacing");
  const std::size_t s0 = in.keyed("initial_state");

  std::size_t dim = 0;
  auto t = in.next();
  if (t.size() == 2 && t[0] == "feature_dim") {
    dim = in.count(t[1]);
    t = in.next();
  }
  if (t.size() != 1 || t[0] != "transitions") in.fail("expected section 'transitions'");

  ParsedMdp out;
  out.tabular = TabularMDP(n_s, n_a, horizon, ValueGrid(origin, spacing, m), s0);
  TabularMDP& mdp = out.tabular;
  for (std::size_t h = 0; h < horizon; ++h)
    for (std::size_t s = 0; s < n_s; ++s)
      for (std::size_t a = 0; a < n_a; ++a) {
        const auto r = in.row({h, s, a}, n_s);
        std::copy(r.begin(), r.end(), mdp.transition_row(h, s, a).begin());
      }
  in.expect_word("rewards");
  for (std::size_t h = 0; h < horizon; ++h)
    for (std::size_t s = 0; s < n_s; ++s)
      for (std::size_t a = 0; a < n_a; ++a) {
        const auto r = in.row({h, s, a}, m);
        std::copy(r.begin(), r.end(), mdp.reward_row(h, s, a).begin());
      }
  validate(mdp);

  if (dim > 0) {
    auto to_vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval(); };
    DiscretizedLinearMDP lin;
    lin.dim = dim;
    in.expect_word("phi");
    for (std::size_t s = 0; s < n_s; ++s)
      for (std::size_t a = 0; a < n_a; ++a) lin.phi.push_back(to_vec(in.row({s, a}, dim)));
    in.expect_word("mu");
    lin.mu.assign(horizon, {});
    for (std::size_t h = 0; h < horizon; ++h)
      for (std::size_t s = 0; s < n_s; ++s) lin.mu[h].push_back(to_vec(in.row({h, s}, dim)));
    in.expect_word("theta");
    lin.theta.assign(horizon, {});
    for (std::size_t h = 0; h < horizon; ++h)
      for (std::size_t i = 0; i < m; ++i) lin.theta[h].push_back(to_vec(in.row({h, i}, dim)));
    for (std::size_t h = 0; h < horizon; ++h)
      for (std::size_t s = 0; s < n_s; ++s)
        for (std::size_t a = 0; a < n_a; ++a) {
          const Eigen::VectorXd& f = lin.phi[s * n_a + a];
          for (std::size_t next = 0; next < n_s; ++next)
            if (std::abs(f.dot(lin.mu[h][next]) - mdp.transition_row(h, s, a)[next]) > kLinearValidityTolerance)
              in.fail("phi^T mu disagrees with the transition table");
          for (std::size_t i = 0; i < m; ++i)
            if (std::abs(f.dot(lin.theta[h][i]) - mdp.reward_row(h, s, a)[i]) > kLinearValidityTolerance)
              in.fail("phi^T theta disagrees with the reward table");
        }
    lin.tabular = mdp;
    out.linear = std::move(lin);
  }
  in.expect_word("end");
  return out;
}

} // namespace rsdrl
