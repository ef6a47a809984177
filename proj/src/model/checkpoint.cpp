#include "mtil/model/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mtil/error.hpp"

namespace mtil::model {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'M', 'T', 'I', 'L', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value))
    throw InvalidInput("checkpoint: truncated file");
  return value;
}

Matrix row_matrix(const Vector& v) {
  Matrix m(1, v.size());
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

const Record* find(const std::vector<Record>& records, Role role, std::uint32_t level,
                   std::uint32_t task) {
  for (const auto& r : records)
    if (r.role == role && r.level == level && r.task == task) return &r;
  return nullptr;
}

const Record& require(const std::vector<Record>& records, Role role, std::uint32_t level,
                      std::uint32_t task) {
  const Record* r = find(records, role, level, task);
  if (r == nullptr)
    throw InvalidInput("checkpoint: missing record role " +
                       std::to_string(static_cast<std::uint32_t>(role)) + " level " +
                       std::to_string(level) + " task " + std::to_string(task));
  return *r;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<Record>& records) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.role));
    put<std::uint32_t>(out, r.level);
    put<std::uint32_t>(out, r.task);
    put<std::uint32_t>(out, 0);
    put<std::uint64_t>(out, r.values.rows());
    put<std::uint64_t>(out, r.values.cols());
    out.write(reinterpret_cast<const char*>(r.values.data()),
              static_cast<std::streamsize>(r.values.size() * sizeof(double)));
  }
  if (!out) throw InvalidInput("checkpoint: write failed");
}

std::vector<Record> read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw InvalidInput("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw InvalidInput("checkpoint: unsupported version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in);
  std::vector<Record> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Record r;
    const auto role = get<std::uint32_t>(in);
    if (role < 1 || role > 7) throw InvalidInput("checkpoint: unknown role");
    r.role = static_cast<Role>(role);
    r.level = get<std::uint32_t>(in);
    r.task = get<std::uint32_t>(in);
    (void)get<std::uint32_t>(in);
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1u << 24) || cols > (1u << 24)) throw InvalidInput("checkpoint: implausible dims");
    r.values = Matrix(rows, cols);
    if (!in.read(reinterpret_cast<char*>(r.values.data()),
                 static_cast<std::streamsize>(r.values.size() * sizeof(double))))
      throw InvalidInput("checkpoint: truncated payload");
    records.push_back(std::move(r));
  }
  return records;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(out, records);
}

std::vector<Record> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

void append_records(std::vector<Record>& out, const ReprParams& repr, std::uint32_t level) {
  out.push_back({Role::ReprWeight, level, 0, repr.weight});
  out.push_back({Role::ReprBias, level, 0, row_matrix(repr.bias)});
}

void append_records(std::vector<Record>& out, const HeadParams& head, std::uint32_t level,
                    std::uint32_t task) {
  out.push_back({Role::HeadWeight, level, task, head.weight});
}

void append_records(std::vector<Record>& out, const DiscParams& disc, std::uint32_t level,
                    std::uint32_t task) {
  if (disc.has_hidden()) {
    out.push_back({Role::DiscHiddenWeight, level, task, disc.hidden_weight});
    out.push_back({Role::DiscHiddenBias, level, task, row_matrix(disc.hidden_bias)});
  }
  out.push_back({Role::DiscWeight, level, task, row_matrix(disc.weight)});
  Matrix bias(1, 1, disc.bias);
  out.push_back({Role::DiscBias, level, task, bias});
}

ReprParams find_repr(const std::vector<Record>& records, std::uint32_t level) {
  const Record& w = require(records, Role::ReprWeight, level, 0);
  const Record& b = require(records, Role::ReprBias, level, 0);
  if (b.values.size() != w.values.rows()) throw InvalidInput("checkpoint: bias/weight mismatch");
  return {w.values, Vector(b.values.flat().begin(), b.values.flat().end())};
}

HeadParams find_head(const std::vector<Record>& records, std::uint32_t level, std::uint32_t task) {
  return {require(records, Role::HeadWeight, level, task).values};
}

bool has_head(const std::vector<Record>& records, std::uint32_t level, std::uint32_t task) {
  return find(records, Role::HeadWeight, level, task) != nullptr;
}

}  // namespace mtil::model
