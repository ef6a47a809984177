#pragma once

// Parameter checkpoint files.
//
// Layout (all integers little-endian):
//   char[8]  magic "MTILCKPT"
//   u32      format version (1)
//   u32      record count
//   records, each:
//     u32    role      (see Role)
//     u32    level     (0-based level for per-level models, 0 otherwise)
//     u32    task      (task slot for per-task heads/discriminators, 0 otherwise)
//     u32    reserved  (0)
//     u64    rows
//     u64    cols
//     f64    rows*cols values, row-major, IEEE-754 binary64
//
// Vectors are stored as 1 x n records. A discriminator's output bias is a
// 1 x 1 record.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mtil/model/model.hpp"

namespace mtil::model {

enum class Role : std::uint32_t {
  ReprWeight = 1,
  ReprBias = 2,
  HeadWeight = 3,
  DiscWeight = 4,
  DiscBias = 5,
  DiscHiddenWeight = 6,
  DiscHiddenBias = 7,
};

struct Record {
  Role role = Role::ReprWeight;
  std::uint32_t level = 0;
  std::uint32_t task = 0;
  Matrix values;

  friend bool operator==(const Record&, const Record&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const std::vector<Record>& records);
std::vector<Record> read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const std::vector<Record>& records);
std::vector<Record> load_checkpoint(const std::filesystem::path& path);

void append_records(std::vector<Record>& out, const ReprParams& repr, std::uint32_t level = 0);
void append_records(std::vector<Record>& out, const HeadParams& head, std::uint32_t level = 0,
                    std::uint32_t task = 0);
void append_records(std::vector<Record>& out, const DiscParams& disc, std::uint32_t level = 0,
                    std::uint32_t task = 0);

// Throws InvalidInput when the requested parameters are missing.
ReprParams find_repr(const std::vector<Record>& records, std::uint32_t level = 0);
HeadParams find_head(const std::vector<Record>& records, std::uint32_t level = 0,
                     std::uint32_t task = 0);
bool has_head(const std::vector<Record>& records, std::uint32_t level = 0, std::uint32_t task = 0);

}  // namespace mtil::model
