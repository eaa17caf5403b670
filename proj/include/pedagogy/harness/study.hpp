#pragma once

// Human-study items and scoring: bimodal line ratings and boolean image classification.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pedagogy/nets/rollout.hpp"
#include "pedagogy/tasks/bimodal.hpp"
#include "pedagogy/tasks/boolean.hpp"

namespace pedagogy::harness {

enum class Condition { Random, Teacher };

inline const char* to_string(Condition c) { return c == Condition::Random ? "random" : "teacher"; }
inline Condition parse_condition(const std::string& s) {
  if (s == "random") return Condition::Random;
  if (s == "teacher") return Condition::Teacher;
  throw std::invalid_argument("unknown condition '" + s + "' (expected random or teacher)");
}

inline constexpr std::array<double, 5> kStudyLengths{4, 8, 12, 16, 20};
inline constexpr std::size_t kShownExamples = 2;

/// A test stimulus: a line length (bimodal) or a candidate object (boolean),
/// labelled high-probability / positive when `target` is true.
struct Stimulus {
  double value = 0;
  std::optional<std::size_t> candidate;
  bool target = false;
};

struct StudyItem {
  Concept concept_value;
  std::vector<Example> shown;  // empty until generated in interactive sessions
  std::vector<Stimulus> stimuli;
};

namespace detail {

inline std::vector<Example> shown_examples(const Task& task, Condition cond, const Concept& c, const nets::StudentNet* student,
                                           const nets::TeacherNet* teacher, Rng& rng) {
  std::vector<Example> out;
  if (cond == Condition::Random) {
    for (std::size_t k = 0; k < kShownExamples; ++k) out.push_back(task.sample_example(c, rng));
    return out;
  }
  const auto tr = nets::rollout_teach(*teacher, *student, task, c, kShownExamples, nets::RolloutMode::Eval, rng,
                                      nets::SelectionOptions{0.5, false, true});
  for (const auto& s : tr.steps) out.push_back(s.example);
  return out;
}

template <class T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t n, Rng& rng) {
  if (pool.size() < n) throw std::invalid_argument("not enough items to sample from");
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace detail

/// 2 positive and 2 negative test objects, excluding the shown examples, in random order.
inline void draw_boolean_stimuli(StudyItem& it, Rng& rng) {
  const auto c = BooleanConcept::from_vector(it.concept_value);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < kBooleanCandidates; ++i) {
    const bool shown = std::any_of(it.shown.begin(), it.shown.end(), [&](const Example& e) { return e.candidate == i; });
    if (shown) continue;
    (boolean_consistent(Properties::from_index(i), c) ? pos : neg).push_back(i);
  }
  it.stimuli.clear();
  for (auto i : detail::sample_without_replacement(pos, 2, rng)) it.stimuli.push_back({0, i, true});
  for (auto i : detail::sample_without_replacement(neg, 2, rng)) it.stimuli.push_back({0, i, false});
  std::shuffle(it.stimuli.begin(), it.stimuli.end(), rng);
}

/// Items for one session. Bimodal: the ten mode pairs drawn from the study
/// lengths, each rated on all five lengths. Boolean: five 1-property and five
/// 2-property concepts, each with 2 positive and 2 negative test objects not
/// among the shown examples. With `generate_shown` false the shown examples
/// (and boolean test objects) are left for an interactive teacher session to fill in.
inline std::vector<StudyItem> build_study_items(const Task& task, Condition cond, const nets::StudentNet* student,
                                                const nets::TeacherNet* teacher, Rng& rng, bool generate_shown = true) {
  const auto kind = task.spec().kind;
  if (kind != TaskKind::Bimodal && kind != TaskKind::Boolean)
    throw std::invalid_argument("study items exist for the bimodal and boolean tasks only");
  if (cond == Condition::Teacher && generate_shown && (!student || !teacher))
    throw std::invalid_argument("teacher condition needs a trained student and teacher checkpoint");
  if (teacher && teacher->spec().kind != kind) throw std::invalid_argument("teacher checkpoint is for another task");

  std::vector<StudyItem> items;
  if (kind == TaskKind::Bimodal) {
    for (std::size_t i = 0; i < kStudyLengths.size(); ++i)
      for (std::size_t j = i + 1; j < kStudyLengths.size(); ++j) {
        StudyItem it;
        it.concept_value = {kStudyLengths[i], kStudyLengths[j]};
        for (std::size_t k = 0; k < kStudyLengths.size(); ++k)
          it.stimuli.push_back({kStudyLengths[k], std::nullopt, k == i || k == j});
        items.push_back(std::move(it));
      }
  } else {
    const auto& bt = dynamic_cast<const BooleanTask&>(task);
    for (std::size_t count : {1u, 2u})
      for (const auto& c : detail::sample_without_replacement(bt.concepts_with_count(count), 5, rng))
        items.push_back({c.to_vector(), {}, {}});
  }
  for (auto& it : items) {
    if (!generate_shown) continue;
    it.shown = detail::shown_examples(task, cond, it.concept_value, student, teacher, rng);
    if (kind == TaskKind::Boolean) draw_boolean_stimuli(it, rng);
  }
  return items;
}

/// One item's answer: integer ratings 1..5 (bimodal) or yes/no classifications (boolean),
/// in stimulus order.
struct ItemResponse {
  std::vector<int> ratings;
  std::vector<bool> classifications;
};

inline void check_response(const Task& task, const StudyItem& item, const ItemResponse& r) {
  if (task.spec().kind == TaskKind::Bimodal) {
    if (r.ratings.size() != item.stimuli.size())
      throw std::invalid_argument("expected " + std::to_string(item.stimuli.size()) + " ratings");
    for (int x : r.ratings)
      if (x < 1 || x > 5) throw std::invalid_argument("ratings must be integers in 1..5");
  } else if (r.classifications.size() != item.stimuli.size()) {
    throw std::invalid_argument("expected " + std::to_string(item.stimuli.size()) + " classifications");
  }
}

/// Bimodal: 1 iff every high-probability length is rated above 3 and every other
/// length at most 3. Boolean: fraction of test objects classified correctly.
inline double score_item(TaskKind kind, const StudyItem& item, const ItemResponse& r) {
  if (kind == TaskKind::Bimodal) {
    if (r.ratings.size() != item.stimuli.size()) throw std::invalid_argument("rating count mismatch");
    for (std::size_t i = 0; i < item.stimuli.size(); ++i)
      if ((r.ratings[i] > 3) != item.stimuli[i].target) return 0.0;
    return 1.0;
  }
  if (r.classifications.size() != item.stimuli.size()) throw std::invalid_argument("classification count mismatch");
  double right = 0;
  for (std::size_t i = 0; i < item.stimuli.size(); ++i) right += r.classifications[i] == item.stimuli[i].target;
  return right / static_cast<double>(item.stimuli.size());
}

struct SessionScore {
  std::string session_id;
  TaskKind task = TaskKind::Bimodal;
  Condition condition = Condition::Random;
  std::vector<double> item_scores;
  double accuracy = 0;
};

inline SessionScore score_responses(const std::string& id, TaskKind kind, Condition cond, const std::vector<StudyItem>& items,
                                    const std::vector<std::optional<ItemResponse>>& responses) {
  if (responses.size() != items.size()) throw std::invalid_argument("response list does not match items");
  SessionScore s{id, kind, cond, {}, 0};
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!responses[i]) throw std::invalid_argument("session " + id + " is incomplete (item " + std::to_string(i) + ")");
    s.item_scores.push_back(score_item(kind, items[i], *responses[i]));
  }
  for (double x : s.item_scores) s.accuracy += x;
  s.accuracy /= static_cast<double>(s.item_scores.size());
  return s;
}

/// Mean session accuracy per (task, condition).
inline nlohmann::json aggregate_scores(const std::vector<SessionScore>& scores) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& s : scores) {
    auto& [sum, n] = acc[std::string(to_string(s.task)) + "/" + to_string(s.condition)];
    sum += s.accuracy;
    ++n;
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, v] : acc) out[key] = {{"mean_accuracy", v.first / static_cast<double>(v.second)}, {"sessions", v.second}};
  return out;
}

// Client-facing views; targets and concepts stay on the server.

inline nlohmann::json example_view(TaskKind kind, const Example& e) {
  if (kind == TaskKind::Boolean) {
    const auto p = Properties::from_index(*e.candidate);
    return {{"candidate", *e.candidate}, {"properties", p.to_vector()}, {"description", p.describe()}};
  }
  return {{"value", e.features.at(0)}};
}

inline nlohmann::json stimulus_view(TaskKind kind, const Stimulus& s) {
  if (kind == TaskKind::Boolean) return example_view(kind, Example{{}, s.candidate});
  return {{"value", s.value}};
}

}  // namespace pedagogy::harness
