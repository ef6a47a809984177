#pragma once

// Dataset files.
//
// Layout (little-endian):
//   char[8]  magic "MTILDATA"
//   u32      version (1)
//   u32      kind: 1 = behavioral cloning, 2 = observation-alone
//   u32      record count
//   u32      observation width d
//   records, each:
//     u32 task, u32 level (0 for BC records), u32 n, u32 reserved
//     n fixed-width tuples:
//       BC: u32 level (1-based), u32 action index, f64[d] state
//       OA: u32 action index, u32 reserved, f64[d] s, f64[d] s~, f64[d] s-bar
//
// A BC file holds one record per task; an OA file holds one record per
// (task, level).

#include <filesystem>
#include <iosfwd>

#include "mtil/data/data.hpp"

namespace mtil::data {

void write_bc_dataset(std::ostream& out, const BCDataset& dataset);
void write_oa_dataset(std::ostream& out, const OADataset& dataset);

enum class DatasetKind : std::uint32_t { BehavioralCloning = 1, ObservationAlone = 2 };

DatasetKind peek_dataset_kind(const std::filesystem::path& path);
BCDataset read_bc_dataset(std::istream& in);
OADataset read_oa_dataset(std::istream& in);

void save_bc_dataset(const std::filesystem::path& path, const BCDataset& dataset);
void save_oa_dataset(const std::filesystem::path& path, const OADataset& dataset);
BCDataset load_bc_dataset(const std::filesystem::path& path);
OADataset load_oa_dataset(const std::filesystem::path& path);

/// Human-readable dumps, one tuple per line.
void dump_bc_csv(std::ostream& out, const BCDataset& dataset);
void dump_oa_csv(std::ostream& out, const OADataset& dataset);

}  // namespace mtil::data
