// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tlsqkt/common/random.hpp"
#include "tlsqkt/data/csv.hpp"

namespace tlsqkt::data {
namespace {

constexpr std::array<const char*, 6> kColumns = {"student_id", "order",  "question_id",
                                                 "kc_id",      "literacy_id", "correct"};

IdMap id_map_of(const std::set<std::int64_t>& ids) {
  return IdMap(std::vector<std::int64_t>(ids.begin(), ids.end()));
}

}  // namespace

IdMap::IdMap(std::vector<std::int64_t> sorted_originals) : originals_(std::move(sorted_originals)) {
  for (std::size_t i = 0; i < originals_.size(); ++i) {
    lookup_.emplace(originals_[i], static_cast<std::int32_t>(i + 1));
  }
}

std::int32_t IdMap::dense(std::int64_t original) const {
  auto it = lookup_.find(original);
  if (it == lookup_.end()) throw std::out_of_range("unknown id " + std::to_string(original));
  return it->second;
}

std::int64_t IdMap::original(std::int32_t dense) const {
  if (dense < 1 || dense > size()) {
    throw std::out_of_range("dense id " + std::to_string(dense) + " out of range");
  }
  return originals_[static_cast<std::size_t>(dense - 1)];
}

DatasetStats compute_stats(const Dataset& dataset) {
  DatasetStats s;
  s.n_students = static_cast<std::int64_t>(dataset.sequences.size());
  std::set<std::int32_t> q, k, l;
  for (const Sequence& seq : dataset.sequences) {
    s.n_interactions += static_cast<std::int64_t>(seq.steps.size());
    for (const Interaction& it : seq.steps) {
      q.insert(it.question_id);
      k.insert(it.kc_id);
      if (it.literacy_id) l.insert(*it.literacy_id);
    }
  }
  s.n_questions = static_cast<std::int64_t>(q.size());
  s.n_kcs = static_cast<std::int64_t>(k.size());
  if (dataset.has_literacy) s.n_literacy = static_cast<std::int64_t>(l.size());
  return s;
}

Dataset build_dataset(std::vector<Interaction> rows) {
  Dataset ds;
  std::set<std::int64_t> q, k, l;
  std::size_t with_literacy = 0;
  for (const Interaction& r : rows) {
    q.insert(r.question_id);
    k.insert(r.kc_id);
    if (r.literacy_id) {
      l.insert(*r.literacy_id);
      ++with_literacy;
    }
  }
  if (with_literacy != 0 && with_literacy != rows.size()) {
    throw LoadError("literacy_id must be present on every row or on none", 0);
  }
  ds.has_literacy = with_literacy != 0;
  ds.questions = id_map_of(q);
  ds.kcs = id_map_of(k);
  ds.literacies = id_map_of(l);

  std::unordered_map<std::string, std::size_t> slot;
  for (Interaction& r : rows) {
    auto [it, fresh] = slot.emplace(r.student_id, ds.sequences.size());
    if (fresh) ds.sequences.push_back(Sequence{r.student_id, {}});
    r.question_id = ds.questions.dense(r.question_id);
    r.kc_id = ds.kcs.dense(r.kc_id);
    if (r.literacy_id) r.literacy_id = ds.literacies.dense(*r.literacy_id);
    ds.sequences[it->second].steps.push_back(std::move(r));
  }
  for (Sequence& seq : ds.sequences) {
    std::stable_sort(seq.steps.begin(), seq.steps.end(),
                     [](const Interaction& a, const Interaction& b) { return a.order < b.order; });
  }
  ds.stats = compute_stats(ds);
  return ds;
}

Dataset parse_canonical(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw LoadError("empty file, expected a header row", 1);
  const auto header = split_csv_line(lines[0]);
  if (!header) throw LoadError("unterminated quote in header", 1);
  std::array<std::size_t, kColumns.size()> col{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    auto it = std::find(header->begin(), header->end(), kColumns[c]);
    if (it == header->end()) throw LoadError(std::string("missing column '") + kColumns[c] + "'", 1);
    col[c] = static_cast<std::size_t>(it - header->begin());
  }

  std::vector<Interaction> rows;
  rows.reserve(lines.size());
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    if (!fields) throw LoadError("unterminated quote", line_no);
    if (fields->size() != header->size()) {
      throw LoadError("expected " + std::to_string(header->size()) + " fields, found " +
                      std::to_string(fields->size()),
                      line_no);
    }
    auto field = [&](std::size_t c) -> const std::string& { return (*fields)[col[c]]; };
    auto positive_id = [&](std::size_t c) {
      const auto v = parse_int(field(c));
      if (!v || *v < 1 || *v > INT32_MAX) {
        throw LoadError(std::string(kColumns[c]) + " must be an integer >= 1, got '" + field(c) + "'",
                        line_no);
      }
      return static_cast<std::int32_t>(*v);
    };

    Interaction r;
    r.student_id = field(0);
    if (r.student_id.empty()) throw LoadError("empty student_id", line_no);
    const auto order = parse_int(field(1));
    if (!order) throw LoadError("order must be an integer, got '" + field(1) + "'", line_no);
    r.order = *order;
    r.question_id = positive_id(2);
    r.kc_id = positive_id(3);
    if (!field(4).empty()) r.literacy_id = positive_id(4);
    if (field(5) != "0" && field(5) != "1") {
      throw LoadError("correct must be 0 or 1, got '" + field(5) + "'", line_no);
    }
    r.correct = field(5) == "1" ? 1 : 0;
    if (!seen.emplace(r.student_id, r.order).second) {
      throw LoadError("duplicate order " + std::to_string(r.order) + " for student '" +
                      r.student_id + "'",
                      line_no);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw LoadError("no interactions", 0);
  return build_dataset(std::move(rows));
}

Dataset load_canonical(const std::filesystem::path& path) { return parse_canonical(read_text(path)); }

std::string canonical_csv(const Dataset& dataset) {
  std::ostringstream os;
  os << "student_id,order,question_id,kc_id,literacy_id,correct\n";
  for (const Sequence& seq : dataset.sequences) {
    const std::string sid = quote_csv_field(seq.student_id);
    for (const Interaction& it : seq.steps) {
      os << sid << ',' << it.order << ',' << dataset.questions.original(it.question_id) << ','
         << dataset.kcs.original(it.kc_id) << ',';
      if (it.literacy_id) os << dataset.literacies.original(*it.literacy_id);
      os << ',' << it.correct << '\n';
    }
  }
  return os.str();
}

std::string id_map_csv(const Dataset& dataset) {
  std::ostringstream os;
  os << "original_id,dense_id,kind\n";
  auto emit = [&](const IdMap& map, const char* kind) {
    for (std::int32_t d = 1; d <= map.size(); ++d) {
      os << map.original(d) << ',' << d << ',' << kind << '\n';
    }
  };
  emit(dataset.questions, "question");
  emit(dataset.kcs, "kc");
  if (dataset.has_literacy) emit(dataset.literacies, "literacy");
  return os.str();
}

Dataset select_sequences(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.questions = dataset.questions;
  out.kcs = dataset.kcs;
  out.literacies = dataset.literacies;
  out.has_literacy = dataset.has_literacy;
  out.sequences.reserve(indices.size());
  for (std::size_t i : indices) out.sequences.push_back(dataset.sequences.at(i));
  out.stats = compute_stats(out);
  return out;
}

Dataset subsample_students(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(dataset.sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (n >= order.size()) return dataset;
  auto rng = make_stream(seed, "subsample");
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_below(rng, i)]);
  }
  order.resize(n);
  std::sort(order.begin(), order.end());
  // Re-index so the vocabulary reflects the subsample only.
  std::vector<Interaction> rows;
  for (std::size_t i : order) {
    for (Interaction it : dataset.sequences[i].steps) {
      it.question_id = static_cast<std::int32_t>(dataset.questions.original(it.question_id));
      it.kc_id = static_cast<std::int32_t>(dataset.kcs.original(it.kc_id));
      if (it.literacy_id) {
        it.literacy_id = static_cast<std::int32_t>(dataset.literacies.original(*it.literacy_id));
      }
      rows.push_back(std::move(it));
    }
  }
  return build_dataset(std::move(rows));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string(), 0);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace tlsqkt::data
