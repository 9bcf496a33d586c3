// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/data/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "tlsqkt/common/random.hpp"

namespace tlsqkt::data {
namespace {

std::string student_name(std::int64_t index, std::int64_t total) {
  const int width = static_cast<int>(std::to_string(total).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%0*lld", width, static_cast<long long>(index));
  return buf;
}

}  // namespace

std::int32_t sample_response(std::mt19937_64& rng, double theta, double difficulty) {
  const double p = 1.0 / (1.0 + std::exp(-(theta - difficulty)));
  return uniform01(rng) < p ? 1 : 0;
}

SyntheticData generate_synthetic_literacy(const SyntheticConfig& c) {
  if (c.n_students < 1 || c.n_questions < 1 || c.n_kcs < 1 || c.n_literacy < 1 || c.seq_len < 1) {
    throw std::invalid_argument("synthetic: all counts must be >= 1");
  }
  if (c.growing_dimension < 0 || c.growing_dimension > c.n_literacy) {
    throw std::invalid_argument("synthetic: growing_dimension out of range");
  }
  auto rng = make_stream(c.seed, "synthetic");
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticData out;
  out.difficulty.resize(static_cast<std::size_t>(c.n_questions));
  out.question_literacy.resize(static_cast<std::size_t>(c.n_questions));
  for (std::int64_t q = 0; q < c.n_questions; ++q) {
    out.difficulty[static_cast<std::size_t>(q)] = c.difficulty_sd * normal(rng);
    out.question_literacy[static_cast<std::size_t>(q)] =
        static_cast<std::int32_t>(q % c.n_literacy + 1);
  }

  const double span = c.seq_len > 1 ? static_cast<double>(c.seq_len - 1) : 1.0;
  out.rows.reserve(static_cast<std::size_t>(c.n_students * c.seq_len));
  out.truth.reserve(static_cast<std::size_t>(c.n_students * c.seq_len * c.n_literacy));
  std::vector<double> offset(static_cast<std::size_t>(c.n_literacy));
  std::vector<double> slope(static_cast<std::size_t>(c.n_literacy));
  for (std::int64_t s = 1; s <= c.n_students; ++s) {
    const std::string sid = student_name(s, c.n_students);
    const double general = c.ability_sd * normal(rng);
    for (std::int64_t l = 0; l < c.n_literacy; ++l) {
      offset[static_cast<std::size_t>(l)] = general + c.dimension_sd * normal(rng);
      const bool grows = c.growing_dimension == 0 || c.growing_dimension == l + 1;
      const double draw = c.growth + c.growth_sd * normal(rng);
      slope[static_cast<std::size_t>(l)] = grows ? draw : 0.0;
    }
    auto theta = [&](std::int64_t l, std::int64_t step) {
      return offset[static_cast<std::size_t>(l)] +
             slope[static_cast<std::size_t>(l)] * static_cast<double>(step - 1) / span;
    };
    for (std::int64_t t = 1; t <= c.seq_len; ++t) {
      const auto q = static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(c.n_questions)));
      const std::int64_t l = q % c.n_literacy;
      Interaction it;
      it.student_id = sid;
      it.order = t;
      it.question_id = static_cast<std::int32_t>(q + 1);
      it.kc_id = static_cast<std::int32_t>(q % c.n_kcs + 1);
      it.literacy_id = static_cast<std::int32_t>(l + 1);
      it.correct = sample_response(rng, theta(l, t), out.difficulty[static_cast<std::size_t>(q)]);
      out.rows.push_back(std::move(it));
      for (std::int64_t d = 0; d < c.n_literacy; ++d) {
        out.truth.push_back({sid, t, static_cast<std::int32_t>(d + 1), theta(d, t)});
      }
    }
  }
  return out;
}

std::string ground_truth_csv(const SyntheticData& data) {
  std::ostringstream os;
  os << "student_id,step,literacy_id,theta\n";
  char buf[64];
  for (const TruthRow& r : data.truth) {
    std::snprintf(buf, sizeof buf, "%.17g", r.theta);
    os << r.student_id << ',' << r.step << ',' << r.literacy_id << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace tlsqkt::data
