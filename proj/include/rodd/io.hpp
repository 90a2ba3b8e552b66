#pragma once
// Scenario files and CSV outputs.
//
// A scenario is a JSON object with the SimConfig fields plus `out_dir` and
// `repetitions`. Every key is optional and defaults to the SimConfig
// default; unknown keys are rejected. Schema:
//
//   {
//     "network": {
//       "area_side": 50, "node_count": 100,
//       "anchors": {"layout": "lattice", "rows": 4, "cols": 4}
//                | {"layout": "random", "count": 16},
//       "path_loss_exponent": 3, "neighbor_threshold": 0.001,
//       "geometry_seed": 1
//     },
//     "bits": 8, "frame_length": 600, "duty_cycle": 0.5,
//     "bp_iterations": 10, "stage_one_iterations": 7, "total_iterations": 20,
//     "snr_db": 30, "noise_mode": "analytic" | "empirical",
//     "heard_threshold": 0.5, "run_seed": 1, "codebook_salt": 0,
//     "acquired_gains": true, "update_with_fewer_than_three": false,
//     "threads": 1, "out_dir": "out", "repetitions": 1
//   }

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rodd/channel.hpp"
#include "rodd/codec.hpp"
#include "rodd/decoder.hpp"
#include "rodd/locator.hpp"
#include "rodd/netmodel.hpp"
#include "rodd/sim.hpp"

namespace rodd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  SimConfig sim;
  std::string out_dir = "out";
  int repetitions = 1;
};

// Throws ConfigError on malformed JSON, wrong types, unknown keys or a
// config that fails validation.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

// "START:STOP:STEP" with STEP > 0 and START <= STOP; STOP is included when
// it lies on the grid. Throws ConfigError.
std::vector<double> parse_sweep_range(std::string_view spec);

// %.6g
std::string format_number(double v);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string iterations_csv(const std::vector<IterationRecord>& records);
std::string nodes_csv(const Network& net, const std::vector<NodeState>& state);

struct SweepRow {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double final_avg_error = 0.0;
};
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Network replay document:
//   {"area_side", "path_loss_exponent", "neighbor_threshold",
//    "nodes": [{"id", "x", "y", "role"}...],
//    "fading": [[re, im]...]}   one pair per i < j, lexicographic
// Doubles round-trip exactly.
std::string network_to_json(const Network& net);
Network network_from_json(std::string_view text);  // ConfigError

// Header "codebook <nia> <bits> <frame_length> <q> <salt>", then one line
// per word with '-', '0', '+' per symbol.
std::string codebook_to_text(const Codebook& book);
Codebook codebook_from_text(std::string_view text);  // ConfigError

// Line-oriented observation fixture:
//   observation <receiver> <bits> <frame_length> <q> <gamma_s>
//   rows <M> <slot>...
//   blocks <K> <neighbor id>...
//   column <k> <'-0+' string over the visible rows>    (one per column)
//   sample <re> <im>                                  (one per row)
// Doubles are written with 17 significant digits.
std::string observation_to_text(const Observation& obs);
Observation observation_from_text(std::string_view text);  // ConfigError

// "block <neighbor> <message> <score %.6f> <heard 0|1>" per block.
std::string decode_output_to_text(const DecodeOutput& out);

// iteration,x,y,objective
std::string solver_trace_csv(const std::vector<SolverTraceRow>& trace);

}  // namespace rodd
