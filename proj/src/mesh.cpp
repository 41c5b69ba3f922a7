#include "neurobit/mesh.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace neurobit {

namespace {

// 9x9 coordinate table for the DEAP montage. Lateral numbering maps to
// columns as z=4, 1/2 -> 3/5, 3/4 -> 2/6, 5/6 -> 1/7, 7/8 -> 0/8.
const std::map<std::string, MeshCell>& standard_table() {
  static const std::map<std::string, MeshCell> table = {
      {"Fp1", {0, 3}}, {"Fp2", {0, 5}},
      {"AF3", {1, 2}}, {"AF4", {1, 6}},
      {"F7", {2, 0}},  {"F3", {2, 2}},  {"Fz", {2, 4}},  {"F4", {2, 6}},  {"F8", {2, 8}},
      {"FC5", {3, 1}}, {"FC1", {3, 3}}, {"FC2", {3, 5}}, {"FC6", {3, 7}},
      {"T7", {4, 0}},  {"C3", {4, 2}},  {"Cz", {4, 4}},  {"C4", {4, 6}},  {"T8", {4, 8}},
      {"CP5", {5, 1}}, {"CP1", {5, 3}}, {"CP2", {5, 5}}, {"CP6", {5, 7}},
      {"P7", {6, 0}},  {"P3", {6, 2}},  {"Pz", {6, 4}},  {"P4", {6, 6}},  {"P8", {6, 8}},
      {"PO3", {7, 2}}, {"PO4", {7, 6}},
      {"O1", {8, 3}},  {"Oz", {8, 4}},  {"O2", {8, 5}}};
  return table;
}

void validate_layout(const MeshLayout& layout) {
  std::set<std::pair<int, int>> seen;
  for (const auto& [name, cell] : layout.cells) {
    if (cell.row < 0 || cell.row >= kMeshRows || cell.col < 0 || cell.col >= kMeshCols) {
      throw std::runtime_error("layout cell out of grid for channel " + name);
    }
    if (!seen.insert({cell.row, cell.col}).second) {
      throw std::runtime_error("layout collision at channel " + name);
    }
  }
}

}  // namespace

MeshLayout build_standard_layout(const std::vector<std::string>& channel_names) {
  const auto& table = standard_table();
  MeshLayout layout;
  for (const std::string& name : channel_names) {
    auto it = table.find(name);
    if (it == table.end()) throw std::invalid_argument("unknown channel name: " + name);
    layout.cells[name] = it->second;
  }
  validate_layout(layout);
  return layout;
}

MeshLayout load_layout_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open layout file: " + path);
  MeshLayout layout;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name;
    int row = -1, col = -1;
    if (!(ss >> name >> row >> col)) throw std::runtime_error("bad layout line: " + line);
    layout.cells[name] = {row, col};
  }
  validate_layout(layout);
  return layout;
}

void write_layout_file(const std::string& path, const MeshLayout& layout) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open layout file for writing: " + path);
  f << "# 9x9 mesh layout, one channel per line: NAME row col\n";
  for (const auto& [name, cell] : layout.cells) {
    f << name << " " << cell.row << " " << cell.col << "\n";
  }
}

ElectrodeSet electrode_set(const std::string& name) {
  if (name == "F") return {"F", {"F3", "F4", "Fz", "F7", "F8"}};
  if (name == "CP") return {"CP", {"C3", "Cz", "C4", "CP1", "CP2"}};
  if (name == "T") return {"T", {"T7", "T8", "CP5", "CP6", "FC5"}};
  if (name == "OP") return {"OP", {"O1", "Oz", "O2", "PO3", "PO4"}};
  if (name == "FP") return {"FP", {"Fz", "F3", "F4", "Pz", "P3"}};
  if (name == "ALL") return {"ALL", deap_channel_names()};
  throw std::invalid_argument("unknown electrode set: " + name);
}

MeshSequence encode_subsample(const Subsample& sub,
                              const std::vector<std::string>& channel_names,
                              const MeshLayout& layout, const ElectrodeSet& active) {
  if (sub.data.size() != channel_names.size()) {
    throw std::invalid_argument("encode_subsample: channel count mismatch");
  }
  const std::size_t t_len = sub.data.empty() ? 0 : sub.data[0].size();
  if (t_len == 0 || t_len % kMeshWindow != 0) {
    throw std::invalid_argument("encode_subsample: length must be a multiple of 128");
  }
  const std::size_t n_windows = t_len / kMeshWindow;

  MeshSequence seq;
  seq.subject_id = sub.subject_id;
  seq.windows = TensorF({n_windows, kMeshRows, kMeshCols, kMeshWindow}, 0.0f);

  for (const std::string& name : active.channels) {
    auto cit = layout.cells.find(name);
    if (cit == layout.cells.end()) {
      throw std::invalid_argument("active channel missing from layout: " + name);
    }
    std::size_t ch = channel_names.size();
    for (std::size_t i = 0; i < channel_names.size(); ++i) {
      if (channel_names[i] == name) { ch = i; break; }
    }
    if (ch == channel_names.size()) {
      throw std::invalid_argument("active channel missing from recording: " + name);
    }

    const auto& samples = sub.data[ch];
    double mean = 0.0;
    for (float v : samples) mean += v;
    mean /= static_cast<double>(t_len);
    double var = 0.0;
    for (float v : samples) {
      const double d = v - mean;
      var += d * d;
    }
    var /= static_cast<double>(t_len);
    if (!(var > 0.0)) {
      throw std::runtime_error("encode_subsample: zero-variance channel " + name);
    }
    const double inv_sd = 1.0 / std::sqrt(var);

    const MeshCell cell = cit->second;
    for (std::size_t w = 0; w < n_windows; ++w) {
      float* dst = &seq.windows.at4(w, static_cast<std::size_t>(cell.row),
                                    static_cast<std::size_t>(cell.col), 0);
      const float* src = samples.data() + w * kMeshWindow;
      for (int k = 0; k < kMeshWindow; ++k) {
        dst[k] = static_cast<float>((src[k] - mean) * inv_sd);
      }
    }
  }
  return seq;
}

}  // namespace neurobit
