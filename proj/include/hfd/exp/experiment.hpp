// Copyright 2026 HFD Baselines Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hfd/data/types.hpp"
#include "hfd/features/sequence.hpp"
#include "hfd/metrics/metrics.hpp"
#include "hfd/models/mstcn.hpp"

namespace hfd::exp {

inline constexpr const char* kCodeVersion = "hfd-baselines 0.1.0";

enum class ModelId { CORRELATION, I3D_A, I3D_B, I3D_C, I3D_D, MSTCN_A, MSTCN_B };

// "correlation", "i3d-a".."i3d-d", "mstcn-a", "mstcn-b"
ModelId parse_model_id(const std::string& name);
std::string model_id_name(ModelId model);

// Input modalities at experiment granularity. V covers both video streams;
// parsers also accept the stream vocabulary (rgb/flow imply V).
enum class Modality { V, FT, G };
using ModalitySet = std::set<Modality>;

ModalitySet parse_modalities(const std::string& csv);
std::string modalities_name(const ModalitySet& set);  // "v,ft,g"

// Supervised loss heads: outcome classification, human action segmentation,
// robot action segmentation.
enum class LossHead { CLS, SEG_H, SEG_R };
using LossHeadSet = std::set<LossHead>;

LossHeadSet parse_loss_heads(const std::string& csv);
std::string loss_heads_name(const LossHeadSet& set);  // "cls,seg_h,seg_r"

struct ExperimentConfig {
  ModelId model = ModelId::MSTCN_A;
  ModalitySet modalities = {Modality::V, Modality::FT, Modality::G};
  LossHeadSet loss_heads = {LossHead::CLS};

  // Split filters: platform restricts training (generalization grid) and
  // optionally evaluation; task restricts both sides (separate-task runs).
  std::optional<data::RobotPlatform> train_platform;
  std::optional<data::RobotPlatform> eval_platform;
  std::optional<data::Task> task_filter;

  int seeds = 5;  // independent training runs
  std::uint64_t base_seed = 0;

  // Training hyperparameters. lr <= 0 picks the family default (5e-4 for
  // the segmenters, 1e-2 heads with lr/10 backbone for the classifiers).
  int max_epochs = 50;
  int patience = 10;
  int batch_size = 8;
  double lr = 0.0;
  int channels = 64;        // segmenter stage width
  int layers_per_stage = 10;
  int segment_length = 100; // per-robot-action resampling (mstcn-a)
  int signal_channels = 64; // F-T/gripper encoder width, both families

  std::filesystem::path output_dir = "results";

  // ConfigError on violated invariants: empty modalities, cls missing,
  // seg heads on non-segmenters, seg_r outside mstcn-b, bad counts.
  void validate() const;

  // FNV-1a over the canonical key-value form, without output_dir. Distinct
  // semantic configs get distinct fingerprints.
  std::string fingerprint() const;

  std::map<std::string, std::string> to_kv() const;
  static ExperimentConfig from_kv(const std::map<std::string, std::string>& kv);
};

// Flat "key = value" config files, '#' comments. Unknown keys throw
// ConfigError naming the key.
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path,
                 const ExperimentConfig& config);

struct Provenance {
  std::string dataset_hash;  // over trial ids, metadata and outcomes
  std::string code_version = kCodeVersion;
  std::vector<std::uint64_t> seeds;
};

struct ResultRow {
  std::string fingerprint;
  ExperimentConfig config;
  metrics::MetricsReport metrics;  // aggregated over completed seeds
  double wall_clock_seconds = 0.0;
  Provenance provenance;
  bool complete = true;
  std::vector<std::string> failures;  // per-seed error messages
  std::vector<std::vector<double>> seed_train_loss;  // per-epoch curves
};

// Trains config.seeds times (base_seed + k), evaluates on the test split,
// aggregates via aggregate_runs and appends the row to config.output_dir.
// Per-seed failures are recorded and mark the row incomplete; a row with
// zero completed seeds carries an empty report. When checkpoint_dir is set,
// each seed's trained model is saved there as seed<k>.hfda (the correlation
// table as seed<k>.json).
ResultRow run_experiment(const ExperimentConfig& config,
                         const std::filesystem::path& dataset_root,
                         const std::filesystem::path& cache_dir,
                         const std::optional<std::filesystem::path>&
                             checkpoint_dir = {});

// Pooled segmentation metrics of a trained segmenter over labeled feature
// sequences. Single-resolution models are resampled per robot action and
// mapped back; sequences must carry their annotation tracks (NoLabels
// otherwise). Matches the per-seed evaluation inside run_experiment.
metrics::MetricsReport score_segmenter(
    const models::MstcnModel& model,
    const std::vector<features::FeatureSequence>& seqs);

// Append-only results store: rows/<fingerprint>-<stamp>.json, created
// atomically so concurrent writers never clobber each other.
std::filesystem::path append_result(const std::filesystem::path& output_dir,
                                    const ResultRow& row);
std::vector<ResultRow> load_results(const std::filesystem::path& output_dir);

// One row of a reproduction grid.
struct TableSpec {
  std::string row_id;   // table row identifier, e.g. "20" or "mstcn-a"
  std::string section;  // grouping label from the table
  ExperimentConfig config;
};

// The experiment grids behind the four result tables. UnsupportedTable for
// anything else. Table 3: 23 rows (printed ids skip 11; ids 7 and 12 share
// one config). Table 4: segmentation rows. Table 5: 3 models x 4
// train-to-test platform cells. Table 6: 3 models x 2 tasks.
std::vector<TableSpec> table_grid(int table_id);

struct ReproduceOptions {
  int seeds = 5;
  // Applied on top of every grid config (same keys as the config files);
  // lets smoke runs shrink epochs and widths without changing the grid.
  std::map<std::string, std::string> overrides;
};

// Runs the grid and writes table<N>.csv under out_dir; returns the csv
// path. Percent cells use one decimal place. Rows that fail end-to-end are
// emitted with empty cells rather than aborting the table.
std::filesystem::path reproduce_table(int table_id,
                                      const std::filesystem::path& dataset_root,
                                      const std::filesystem::path& cache_dir,
                                      const std::filesystem::path& out_dir,
                                      const ReproduceOptions& options = {});

// Renders results rows into report.csv plus loss_curves.svg and
// accuracy_bars.svg under out_dir; returns the csv path.
std::filesystem::path render_report(const std::filesystem::path& results_dir,
                                    const std::filesystem::path& out_dir);

}  // namespace hfd::exp
