#pragma once

// Independent reference implementations used to check the simulator.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lcanet/esn.hpp"
#include "support/fixtures.hpp"

namespace lcanet::testing {

/// The place and transition recurrences written out element by element from
/// dense copies of M⁺ and M⁻.
inline EsnState literal_step(const DenseMatrix& pos, const DenseMatrix& neg, const EsnState& s, const Vector& u_minus,
                             const Vector& u_plus) {
  EsnState next = s;
  next.k = s.k + 1;
  for (Eigen::Index p = 0; p < pos.rows(); ++p) {
    double in = 0.0, out = 0.0;
    for (Eigen::Index c = 0; c < pos.cols(); ++c) {
      in += pos(p, c) * u_plus(c);
      out += neg(p, c) * u_minus(c);
    }
    next.q_buffer(p) = s.q_buffer(p) + in * s.dt - out * s.dt;
  }
  for (Eigen::Index c = 0; c < pos.cols(); ++c)
    next.q_capability(c) = s.q_capability(c) + (u_minus(c) * s.dt - u_plus(c) * s.dt);
  return next;
}

/// Integer token game: every unit initiation removes arc-weight tokens from
/// each input place one at a time and parks one token on the transition;
/// every unit completion takes it back and drops arc-weight tokens on each
/// output place. ΔT is 1.
struct TokenState {
  std::vector<std::int64_t> places;
  std::vector<std::int64_t> in_flight;
  bool operator==(const TokenState&) const = default;
};

inline std::vector<TokenState> token_push(const DenseMatrix& pos, const DenseMatrix& neg, TokenState state,
                                          const std::vector<std::vector<std::int64_t>>& u_minus,
                                          const std::vector<std::vector<std::int64_t>>& u_plus) {
  std::vector<TokenState> out{state};
  for (std::size_t k = 0; k < u_minus.size(); ++k) {
    for (std::size_t c = 0; c < u_minus[k].size(); ++c) {
      for (std::int64_t n = 0; n < u_minus[k][c]; ++n) {
        for (Eigen::Index p = 0; p < neg.rows(); ++p)
          for (auto w = static_cast<std::int64_t>(neg(p, static_cast<Eigen::Index>(c))); w > 0; --w)
            --state.places[static_cast<std::size_t>(p)];
        ++state.in_flight[c];
      }
      for (std::int64_t n = 0; n < u_plus[k][c]; ++n) {
        --state.in_flight[c];
        for (Eigen::Index p = 0; p < pos.rows(); ++p)
          for (auto w = static_cast<std::int64_t>(pos(p, static_cast<Eigen::Index>(c))); w > 0; --w)
            ++state.places[static_cast<std::size_t>(p)];
      }
    }
    out.push_back(state);
  }
  return out;
}

/// Random dyadic firing pair that never completes more than is in flight.
/// Dyadic values keep every sum exact.
inline std::pair<Vector, Vector> random_feasible_firing(Rng& rng, const Vector& q_capability, double dt) {
  const auto n = q_capability.size();
  Vector u_minus(n), u_plus(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    u_minus(c) = coin(rng, 0.3) ? 0.0 : static_cast<double>(pick(rng, 0, 160)) / 16.0;
    const double bound = q_capability(c) / dt + u_minus(c);
    u_plus(c) = std::floor(uniform(rng, 0.0, 1.0) * bound * 16.0) / 16.0;
  }
  return {u_minus, u_plus};
}

}  // namespace lcanet::testing
