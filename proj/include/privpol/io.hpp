#pragma once

// JSON and JSONL encodings of the pipeline's records.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "privpol/classifier.hpp"
#include "privpol/experiment.hpp"
#include "privpol/ingestion.hpp"
#include "privpol/oracle.hpp"
#include "privpol/segmenter.hpp"

namespace privpol {

using Json = nlohmann::json;

/// 16 lowercase hex digits.
std::string hash_hex(std::uint64_t h);
std::uint64_t parse_hash_hex(std::string_view s);

// {id, source_path, word_count, content_hash, sanitized_text}
Json to_json(const Policy& p);
Policy policy_from_json(const Json& j);

// {id, policy_id, category, span_start, span_end, text, status, label}
Json to_json(const Segment& s);
Segment segment_from_json(const Json& j);

// {segment_id, truth, ambiguous}
Json truth_to_json(const std::string& segment_id, const SegmentTruth& t);
std::pair<std::string, SegmentTruth> truth_from_json(const Json& j);

// {segment_id, worker_id, q1_relevant, q2_collect, honesty_ok}
Json to_json(const LabelResponse& r);
LabelResponse response_from_json(const Json& j);

Json to_json(const ConsolidatedLabel& c);
Json to_json(const HitBatch& b);
HitBatch hit_batch_from_json(const Json& j);

Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, const TrainConfig& defaults = {});

// {dim, weights, bias, hyper, train_seed}
Json to_json(const LinearModel& m);
LinearModel model_from_json(const Json& j);

Json to_json(const IterationRecord& r);

Json to_json(const ExperimentConfig& c);
/// Missing fields keep their defaults. Throws std::invalid_argument naming the
/// offending field, then validates.
ExperimentConfig experiment_config_from_json(const Json& j, const ExperimentConfig& defaults = {});

/// One JSON value per line; blank lines are skipped. Errors name the line.
void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const Json&)>& fn);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

std::vector<Segment> read_segments(const std::filesystem::path& path);
void write_segments(const std::filesystem::path& path, const std::vector<Segment>& segments);
std::map<std::string, SegmentTruth> read_truths(const std::filesystem::path& path);
void write_truths(const std::filesystem::path& path, const std::map<std::string, SegmentTruth>& truths);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace privpol
