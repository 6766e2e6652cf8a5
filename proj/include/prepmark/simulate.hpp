#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "prepmark/ingest.hpp"
#include "prepmark/store.hpp"

namespace prepmark {

struct SimulationConfig {
  int students = 110;
  std::uint64_t seed = 1;
  int max_attempts = 6;           // per topic; students give up afterwards
  double incomplete_rate = 0.05;  // students missing one exam mark
  double malformed_rate = 0.15;   // share of wrong answers that do not parse
  double blank_rate = 0.05;       // share of wrong answers left empty
  std::vector<std::string> modules{"MATH1001", "MATH1002", "MATH1003", "MATH1004"};
};

struct SimulationResult {
  std::vector<std::string> student_ids;
  std::map<std::string, double> ability;
  MarkTable marks;
  QualificationTable quals;
  std::size_t attempts = 0;  // submitted
};

// Called after every submission with the student's feedback.
using FeedbackObserver = std::function<void(const std::string& student_id, const FeedbackView& view)>;

/// Runs a synthetic cohort through the store.
///
/// Each student has a latent ability. It drives the chance of answering a
/// part correctly (rising with retakes), the exam marks and, with more
/// noise, the entry qualifications. Answers are real responses: reference
/// answers when right, perturbed, malformed or blank ones when wrong.
/// Attempts start a week before the deadline; slow students run past it.
/// Deterministic for a given seed.
SimulationResult simulate(Store& store, const SimulationConfig& config,
                          const FeedbackObserver& observer = {});

// Writes marks.csv and quals.csv into the store's ingest directory.
void write_ingest_files(const Store& store, const SimulationResult& r);

}  // namespace prepmark
