#pragma once

#include <map>
#include <string>
#include <vector>

#include "neurobit/data_io.hpp"
#include "neurobit/tensor.hpp"

namespace neurobit {

inline constexpr int kMeshRows = 9;
inline constexpr int kMeshCols = 9;
inline constexpr int kMeshWindow = 128;  // one second at 128 Hz
inline constexpr int kMeshWindows = 10;

struct MeshCell {
  int row = 0;
  int col = 0;
};

struct MeshLayout {
  std::map<std::string, MeshCell> cells;  // injective onto the 9x9 grid
};

// Fixed ten-twenty geometry: rows front to back Fp, AF, F, FC, C, CP, P, PO,
// O; columns by lateral index (z = 4, odd left, even right). Cz = (4, 4).
MeshLayout build_standard_layout(const std::vector<std::string>& channel_names);

// Same table as a loadable/verifiable text file, one "NAME row col" per line.
MeshLayout load_layout_file(const std::string& path);
void write_layout_file(const std::string& path, const MeshLayout& layout);

struct ElectrodeSet {
  std::string name;  // F | CP | T | OP | FP | ALL
  std::vector<std::string> channels;
};

ElectrodeSet electrode_set(const std::string& name);

struct MeshSequence {
  TensorF windows;  // [10, 9, 9, 128]
  int subject_id = 0;
};

// Active channels are normalized to mean 0 / variance 1 over their 1280
// samples, then placed; every other cell stays exactly zero.
MeshSequence encode_subsample(const Subsample& sub,
                              const std::vector<std::string>& channel_names,
                              const MeshLayout& layout, const ElectrodeSet& active);

}  // namespace neurobit
