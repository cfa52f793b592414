#include "arl/data/dataset.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "arl/core/serialize.hpp"

namespace arl {

void Dataset::rebuild_index() {
  index.clear();
  state_offsets.assign(1, 0);
  for (int i = 0; i < int(trajs.size()); ++i) {
    const auto& tr = trajs[i];
    if (tr.states.rows() != tr.actions.rows() + 1)
      throw std::invalid_argument("dataset: states must outnumber actions by one");
    for (int t = 0; t < int(tr.actions.rows()); ++t) index.emplace_back(i, t);
    state_offsets.push_back(state_offsets.back() + tr.states.rows());
  }
}

namespace {

constexpr uint32_t kMagic = 0x414c5244;  // "DRLA" little-endian on disk
constexpr uint32_t kVersion = 1;

void write_dataset(const Dataset& d, std::ostream& os) {
  BinWriter w(os);
  w.u32(kMagic);
  w.u32(kVersion);
  w.str(d.env_name);
  w.str(d.env_text);
  w.u32(uint32_t(d.state_dim));
  w.u32(uint32_t(d.action_dim));
  w.u8(d.discrete_actions ? 1 : 0);
  w.u64(uint64_t(d.trajs.size()));
  for (const auto& tr : d.trajs) {
    w.mat(tr.states);
    w.mat(tr.actions);
  }
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dataset: cannot write " + path);
  write_dataset(d, f);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dataset: cannot open " + path);
  BinReader r(f);
  if (r.u32() != kMagic) throw std::runtime_error("dataset: bad magic in " + path);
  if (r.u32() != kVersion) throw std::runtime_error("dataset: unsupported version");
  Dataset d;
  d.env_name = r.str();
  d.env_text = r.str();
  d.state_dim = int(r.u32());
  d.action_dim = int(r.u32());
  d.discrete_actions = r.u8() != 0;
  const uint64_t n = r.u64();
  d.trajs.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    Trajectory tr;
    tr.states = r.mat();
    tr.actions = r.mat();
    d.trajs.push_back(std::move(tr));
  }
  d.rebuild_index();
  return d;
}

void export_csv(const Dataset& d, std::ostream& out) {
  out << "traj,t";
  for (int j = 0; j < d.state_dim; ++j) out << ",s" << j;
  for (int j = 0; j < d.action_dim; ++j) out << ",a" << j;
  for (int j = 0; j < d.state_dim; ++j) out << ",sp" << j;
  out << "\n";
  for (const auto& [i, t] : d.index) {
    const auto& tr = d.trajs[i];
    out << i << "," << t;
    for (int j = 0; j < d.state_dim; ++j) out << "," << tr.states(t, j);
    for (int j = 0; j < d.action_dim; ++j) out << "," << tr.actions(t, j);
    for (int j = 0; j < d.state_dim; ++j) out << "," << tr.states(t + 1, j);
    out << "\n";
  }
}

uint64_t dataset_hash(const Dataset& d) {
  std::ostringstream ss(std::ios::binary);
  write_dataset(d, ss);
  return fnv1a(ss.str());
}

}  // namespace arl
