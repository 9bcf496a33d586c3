// Copyright (c) 2026, The tlsqkt authors
// SPDX-License-Identifier: Apache-2.0

#include "tlsqkt/data/assist09.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "tlsqkt/data/csv.hpp"

namespace tlsqkt::data {
namespace {

bool is_null_skill(const std::string& s) {
  return s.empty() || s == "NA" || s == "NULL" || s == "null" || s == "NaN";
}

}  // namespace

Assist09Result adapt_assist09(const std::string& raw_csv) {
  const auto lines = split_lines(raw_csv);
  if (lines.empty()) throw LoadError("empty file, expected a header row", 1);
  const auto header = split_csv_line(lines[0]);
  if (!header) throw LoadError("unterminated quote in header", 1);
  constexpr std::array<const char*, 5> names = {"user_id", "order_id", "problem_id", "skill_id",
                                                "correct"};
  std::array<std::size_t, names.size()> col{};
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto it = std::find(header->begin(), header->end(), names[c]);
    if (it == header->end()) throw LoadError(std::string("missing column '") + names[c] + "'", 1);
    col[c] = static_cast<std::size_t>(it - header->begin());
  }

  Assist09Result result;
  Assist09Report& rep = result.report;
  std::vector<Interaction> rows;
  std::set<std::pair<std::string, std::int64_t>> seen;
  auto bad = [&rep](std::size_t line) {
    ++rep.unparseable;
    if (!rep.first_bad_line) rep.first_bad_line = line;
  };

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    ++rep.data_rows;
    const std::size_t line_no = i + 1;
    const auto fields = split_csv_line(lines[i]);
    if (!fields || fields->size() != header->size()) {
      bad(line_no);
      continue;
    }
    auto field = [&](std::size_t c) -> const std::string& { return (*fields)[col[c]]; };
    std::string skill = field(3);
    if (is_null_skill(skill)) {
      ++rep.dropped_null_skill;
      continue;
    }
    if (auto cut = skill.find('_'); cut != std::string::npos) skill.resize(cut);
    const auto order = parse_int(field(1));
    const auto problem = parse_int(field(2));
    const auto kc = parse_int(skill);
    const std::string& correct = field(4);
    if (field(0).empty() || !order || !problem || *problem < 1 || *problem > INT32_MAX || !kc ||
        *kc < 1 || *kc > INT32_MAX || (correct != "0" && correct != "1")) {
      bad(line_no);
      continue;
    }
    if (!seen.emplace(field(0), *order).second) {
      ++rep.dropped_duplicate;
      continue;
    }
    Interaction r;
    r.student_id = field(0);
    r.order = *order;
    r.question_id = static_cast<std::int32_t>(*problem);
    r.kc_id = static_cast<std::int32_t>(*kc);
    r.correct = correct == "1" ? 1 : 0;
    rows.push_back(std::move(r));
  }

  if (rep.data_rows > 0 && rep.unparseable * 100 > rep.data_rows) {
    throw LoadError(std::to_string(rep.unparseable) + " of " + std::to_string(rep.data_rows) +
                        " rows unparseable (limit 1%)",
                    rep.first_bad_line);
  }
  if (rows.empty()) throw LoadError("no usable interactions", 0);
  rep.kept = rows.size();
  result.dataset = build_dataset(std::move(rows));
  return result;
}

}  // namespace tlsqkt::data
