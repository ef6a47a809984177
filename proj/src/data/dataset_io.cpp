#include "mtil/data/dataset_io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "mtil/error.hpp"

namespace mtil::data {
namespace {

static_assert(std::endian::native == std::endian::little,
              "dataset I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'M', 'T', 'I', 'L', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value))
    throw InvalidInput("dataset: truncated file");
  return value;
}

void put_row(std::ostream& out, std::span<const double> row) {
  out.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
}

Vector get_row(std::istream& in, std::size_t width) {
  Vector row(width);
  if (!in.read(reinterpret_cast<char*>(row.data()),
               static_cast<std::streamsize>(width * sizeof(double))))
    throw InvalidInput("dataset: truncated tuple");
  return row;
}

struct Header {
  DatasetKind kind;
  std::uint32_t records;
  std::uint32_t width;
};

void write_header(std::ostream& out, DatasetKind kind, std::size_t records, std::size_t width) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(records));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(width));
}

Header read_header(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw InvalidInput("dataset: bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw InvalidInput("dataset: unsupported version");
  Header h{};
  const auto kind = get<std::uint32_t>(in);
  if (kind != 1 && kind != 2) throw InvalidInput("dataset: unknown kind");
  h.kind = static_cast<DatasetKind>(kind);
  h.records = get<std::uint32_t>(in);
  h.width = get<std::uint32_t>(in);
  return h;
}

std::size_t bc_width(const BCDataset& dataset) {
  for (const auto& task : dataset)
    if (task.size() > 0) return task.batch.states.cols();
  return 0;
}

std::size_t oa_width(const OADataset& dataset) {
  for (const auto& task : dataset)
    for (const auto& level : task.levels)
      if (level.size() > 0) return level.states.cols();
  return 0;
}

}  // namespace

void write_bc_dataset(std::ostream& out, const BCDataset& dataset) {
  const std::size_t width = bc_width(dataset);
  write_header(out, DatasetKind::BehavioralCloning, dataset.size(), width);
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    const BCTaskData& task = dataset[t];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t));
    put<std::uint32_t>(out, 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(task.size()));
    put<std::uint32_t>(out, 0);
    for (std::size_t j = 0; j < task.size(); ++j) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(task.levels[j]));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(task.batch.actions[j]));
      put_row(out, task.batch.states.row(j));
    }
  }
  if (!out) throw InvalidInput("dataset: write failed");
}

void write_oa_dataset(std::ostream& out, const OADataset& dataset) {
  std::size_t records = 0;
  for (const auto& task : dataset) records += task.levels.size();
  write_header(out, DatasetKind::ObservationAlone, records, oa_width(dataset));
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    for (std::size_t h = 0; h < dataset[t].levels.size(); ++h) {
      const model::OABatch& batch = dataset[t].levels[h];
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(h + 1));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.size()));
      put<std::uint32_t>(out, 0);
      for (std::size_t j = 0; j < batch.size(); ++j) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.actions[j]));
        put<std::uint32_t>(out, 0);
        put_row(out, batch.states.row(j));
        put_row(out, batch.next_states.row(j));
        put_row(out, batch.expert_next.row(j));
      }
    }
  }
  if (!out) throw InvalidInput("dataset: write failed");
}

BCDataset read_bc_dataset(std::istream& in) {
  const Header header = read_header(in);
  if (header.kind != DatasetKind::BehavioralCloning)
    throw InvalidInput("dataset: expected a behavioral-cloning file");
  BCDataset dataset(header.records);
  for (std::uint32_t r = 0; r < header.records; ++r) {
    const auto task = get<std::uint32_t>(in);
    (void)get<std::uint32_t>(in);
    const auto n = get<std::uint32_t>(in);
    (void)get<std::uint32_t>(in);
    if (task >= dataset.size()) throw InvalidInput("dataset: task id out of range");
    BCTaskData& data = dataset[task];
    for (std::uint32_t j = 0; j < n; ++j) {
      data.levels.push_back(get<std::uint32_t>(in));
      data.batch.actions.push_back(get<std::uint32_t>(in));
      data.batch.states.append_row(get_row(in, header.width));
      data.source.push_back(j);
    }
  }
  return dataset;
}

OADataset read_oa_dataset(std::istream& in) {
  const Header header = read_header(in);
  if (header.kind != DatasetKind::ObservationAlone)
    throw InvalidInput("dataset: expected an observation-alone file");
  OADataset dataset;
  for (std::uint32_t r = 0; r < header.records; ++r) {
    const auto task = get<std::uint32_t>(in);
    const auto level = get<std::uint32_t>(in);
    const auto n = get<std::uint32_t>(in);
    (void)get<std::uint32_t>(in);
    if (level == 0 || level > (1u << 16) || task > (1u << 16))
      throw InvalidInput("dataset: bad record header");
    if (dataset.size() <= task) dataset.resize(task + 1);
    auto& levels = dataset[task].levels;
    if (levels.size() < level) levels.resize(level);
    model::OABatch& batch = levels[level - 1];
    for (std::uint32_t j = 0; j < n; ++j) {
      batch.actions.push_back(get<std::uint32_t>(in));
      (void)get<std::uint32_t>(in);
      batch.states.append_row(get_row(in, header.width));
      batch.next_states.append_row(get_row(in, header.width));
      batch.expert_next.append_row(get_row(in, header.width));
    }
  }
  return dataset;
}

DatasetKind peek_dataset_kind(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("dataset: cannot open " + path.string());
  return read_header(in).kind;
}

void save_bc_dataset(const std::filesystem::path& path, const BCDataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("dataset: cannot open " + path.string() + " for writing");
  write_bc_dataset(out, dataset);
}

void save_oa_dataset(const std::filesystem::path& path, const OADataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("dataset: cannot open " + path.string() + " for writing");
  write_oa_dataset(out, dataset);
}

BCDataset load_bc_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("dataset: cannot open " + path.string());
  return read_bc_dataset(in);
}

OADataset load_oa_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("dataset: cannot open " + path.string());
  return read_oa_dataset(in);
}

namespace {

void put_values(std::ostream& out, std::span<const double> row) {
  char buf[32];
  for (double v : row) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    out << buf;
  }
}

}  // namespace

void dump_bc_csv(std::ostream& out, const BCDataset& dataset) {
  out << "task,level,action,state...\n";
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    const BCTaskData& task = dataset[t];
    for (std::size_t j = 0; j < task.size(); ++j) {
      out << t << ',' << task.levels[j] << ',' << env::index_to_action(task.batch.actions[j]);
      put_values(out, task.batch.states.row(j));
      out << '\n';
    }
  }
}

void dump_oa_csv(std::ostream& out, const OADataset& dataset) {
  out << "task,level,j,action,s...,s_tilde...,s_bar...\n";
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    for (std::size_t h = 0; h < dataset[t].levels.size(); ++h) {
      const model::OABatch& batch = dataset[t].levels[h];
      for (std::size_t j = 0; j < batch.size(); ++j) {
        out << t << ',' << h + 1 << ',' << j << ',' << env::index_to_action(batch.actions[j]);
        put_values(out, batch.states.row(j));
        put_values(out, batch.next_states.row(j));
        put_values(out, batch.expert_next.row(j));
        out << '\n';
      }
    }
  }
}

}  // namespace mtil::data
