#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "neurobit/data_io.hpp"
#include "neurobit/mesh.hpp"

using namespace neurobit;
namespace fs = std::filesystem;

namespace {

Subsample random_subsample(std::uint64_t seed) {
  Subsample sub;
  sub.subject_id = 1;
  std::mt19937_64 rng(seed);
  sub.data.assign(32, std::vector<float>(kSubsampleLen));
  for (auto& chan : sub.data) {
    for (float& v : chan) v = static_cast<float>((rng() >> 11) * 0x1.0p-53 - 0.5);
  }
  return sub;
}

}  // namespace

TEST_CASE("standard layout places Cz at the center with left-right symmetry") {
  const auto layout = build_standard_layout(deap_channel_names());
  REQUIRE(layout.cells.size() == 32);
  CHECK(layout.cells.at("Cz").row == 4);
  CHECK(layout.cells.at("Cz").col == 4);
  CHECK(layout.cells.at("Fp1").row == 0);
  CHECK(layout.cells.at("Fp2").row == 0);
  CHECK(layout.cells.at("Fp1").col + layout.cells.at("Fp2").col == 8);
  // every left/right pair mirrors about column 4
  for (const char* pair : {"F3:F4", "F7:F8", "C3:C4", "T7:T8", "P3:P4", "O1:O2",
                           "AF3:AF4", "PO3:PO4", "CP1:CP2", "CP5:CP6", "FC1:FC2",
                           "FC5:FC6", "P7:P8"}) {
    const std::string s(pair);
    const auto left = layout.cells.at(s.substr(0, s.find(':')));
    const auto right = layout.cells.at(s.substr(s.find(':') + 1));
    CHECK(left.row == right.row);
    CHECK(left.col + right.col == 8);
  }
}

TEST_CASE("layout occupies 32 distinct cells of the 81") {
  const auto layout = build_standard_layout(deap_channel_names());
  std::set<std::pair<int, int>> cells;
  for (const auto& [name, cell] : layout.cells) {
    CHECK(cell.row >= 0);
    CHECK(cell.row < 9);
    CHECK(cell.col >= 0);
    CHECK(cell.col < 9);
    cells.insert({cell.row, cell.col});
  }
  CHECK(cells.size() == 32);  // 49 cells stay empty
  CHECK_THROWS_AS(build_standard_layout({"Fp1", "Nope"}), std::invalid_argument);
}

TEST_CASE("shipped layout file matches the built-in table") {
  const fs::path shipped = fs::path(__FILE__).parent_path().parent_path() / "data" /
                           "mesh_layout_9x9.txt";
  REQUIRE(fs::exists(shipped));
  const auto from_file = load_layout_file(shipped.string());
  const auto built = build_standard_layout(deap_channel_names());
  REQUIRE(from_file.cells.size() == built.cells.size());
  for (const auto& [name, cell] : built.cells) {
    CHECK(from_file.cells.at(name).row == cell.row);
    CHECK(from_file.cells.at(name).col == cell.col);
  }
}

TEST_CASE("layout file round-trips through write and load") {
  const auto built = build_standard_layout(deap_channel_names());
  const fs::path p = fs::temp_directory_path() / "neurobit_layout_rt.txt";
  write_layout_file(p.string(), built);
  const auto loaded = load_layout_file(p.string());
  CHECK(loaded.cells.size() == built.cells.size());
  for (const auto& [name, cell] : built.cells) {
    CHECK(loaded.cells.at(name).row == cell.row);
    CHECK(loaded.cells.at(name).col == cell.col);
  }
}

TEST_CASE("electrode sets match the fixed membership tables") {
  const auto f = electrode_set("F");
  CHECK(f.channels == std::vector<std::string>{"F3", "F4", "Fz", "F7", "F8"});
  CHECK(electrode_set("OP").channels ==
        std::vector<std::string>{"O1", "Oz", "O2", "PO3", "PO4"});
  CHECK(electrode_set("CP").channels.size() == 5);
  CHECK(electrode_set("T").channels.size() == 5);
  CHECK(electrode_set("FP").channels.size() == 5);
  CHECK(electrode_set("ALL").channels.size() == 32);
  CHECK_THROWS_AS(electrode_set("XYZ"), std::invalid_argument);
}

TEST_CASE("encoding produces 10x9x9x128 with zeros off the active cells") {
  const auto layout = build_standard_layout(deap_channel_names());
  const auto sub = random_subsample(7);

  SUBCASE("full montage") {
    const auto seq = encode_subsample(sub, deap_channel_names(), layout,
                                      electrode_set("ALL"));
    REQUIRE(seq.windows.shape() == std::vector<std::size_t>{10, 9, 9, 128});
    // unmapped cells are exactly zero everywhere
    std::set<std::pair<int, int>> occupied;
    for (const auto& [name, cell] : layout.cells) occupied.insert({cell.row, cell.col});
    for (std::size_t w = 0; w < 10; ++w) {
      for (int r = 0; r < 9; ++r) {
        for (int c = 0; c < 9; ++c) {
          if (occupied.count({r, c})) continue;
          for (std::size_t k = 0; k < 128; ++k) {
            REQUIRE(seq.windows.at4(w, static_cast<std::size_t>(r),
                                    static_cast<std::size_t>(c), k) == 0.0f);
          }
        }
      }
    }
  }

  SUBCASE("five-electrode restriction zeroes 27 cells, keeps the shape") {
    const auto all = encode_subsample(sub, deap_channel_names(), layout,
                                      electrode_set("ALL"));
    const auto five = encode_subsample(sub, deap_channel_names(), layout,
                                       electrode_set("F"));
    CHECK(five.windows.shape() == all.windows.shape());
    int zeroed = 0;
    for (const auto& [name, cell] : layout.cells) {
      bool any = false;
      for (std::size_t w = 0; w < 10 && !any; ++w) {
        for (std::size_t k = 0; k < 128 && !any; ++k) {
          if (five.windows.at4(w, static_cast<std::size_t>(cell.row),
                               static_cast<std::size_t>(cell.col), k) != 0.0f) {
            any = true;
          }
        }
      }
      if (!any) ++zeroed;
    }
    CHECK(zeroed == 27);
  }
}

TEST_CASE("active channels are normalized to mean 0, variance 1 over 1280 samples") {
  const auto layout = build_standard_layout(deap_channel_names());
  const auto sub = random_subsample(13);
  const auto seq = encode_subsample(sub, deap_channel_names(), layout,
                                    electrode_set("ALL"));
  for (const auto& [name, cell] : layout.cells) {
    double mean = 0.0;
    for (std::size_t w = 0; w < 10; ++w) {
      for (std::size_t k = 0; k < 128; ++k) {
        mean += seq.windows.at4(w, static_cast<std::size_t>(cell.row),
                                static_cast<std::size_t>(cell.col), k);
      }
    }
    mean /= 1280.0;
    double var = 0.0;
    for (std::size_t w = 0; w < 10; ++w) {
      for (std::size_t k = 0; k < 128; ++k) {
        const double d = seq.windows.at4(w, static_cast<std::size_t>(cell.row),
                                         static_cast<std::size_t>(cell.col), k) - mean;
        var += d * d;
      }
    }
    var /= 1280.0;
    CHECK(std::abs(mean) < 1e-6);       // float32 placement
    CHECK(std::abs(var - 1.0) < 1e-5);
  }
}

TEST_CASE("mesh round-trip recovers the normalized channel series") {
  const auto layout = build_standard_layout(deap_channel_names());
  const auto sub = random_subsample(29);
  const auto seq = encode_subsample(sub, deap_channel_names(), layout,
                                    electrode_set("ALL"));
  // channel 5 in storage order
  const std::string name = deap_channel_names()[5];
  const auto cell = layout.cells.at(name);
  const auto& raw = sub.data[5];
  double mean = 0.0;
  for (float v : raw) mean += v;
  mean /= 1280.0;
  double var = 0.0;
  for (float v : raw) var += (v - mean) * (v - mean);
  var /= 1280.0;
  const double inv_sd = 1.0 / std::sqrt(var);
  for (std::size_t w = 0; w < 10; ++w) {
    for (std::size_t k = 0; k < 128; ++k) {
      const float expected =
          static_cast<float>((raw[w * 128 + k] - mean) * inv_sd);
      CHECK(seq.windows.at4(w, static_cast<std::size_t>(cell.row),
                            static_cast<std::size_t>(cell.col), k) ==
            doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("placement correctness: jitter on one channel lights only its cell") {
  const auto layout = build_standard_layout(deap_channel_names());
  Subsample sub;
  sub.subject_id = 1;
  sub.data.assign(32, std::vector<float>(kSubsampleLen, 0.0f));
  // alternate tiny values on Cz (storage index 23) so it has variance
  for (int k = 0; k < kSubsampleLen; ++k) {
    sub.data[23][static_cast<std::size_t>(k)] = (k % 2 == 0) ? 1e-3f : -1e-3f;
  }
  const ElectrodeSet only_cz{"custom", {"Cz"}};
  const auto seq = encode_subsample(sub, deap_channel_names(), layout, only_cz);
  for (std::size_t w = 0; w < 10; ++w) {
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c < 9; ++c) {
        for (std::size_t k = 0; k < 128; ++k) {
          const float v = seq.windows.at4(w, static_cast<std::size_t>(r),
                                          static_cast<std::size_t>(c), k);
          if (r == 4 && c == 4) continue;
          REQUIRE(v == 0.0f);
        }
      }
    }
  }
}

TEST_CASE("degenerate inputs are rejected") {
  const auto layout = build_standard_layout(deap_channel_names());
  SUBCASE("constant channel") {
    Subsample sub;
    sub.data.assign(32, std::vector<float>(kSubsampleLen, 2.5f));
    CHECK_THROWS_AS(encode_subsample(sub, deap_channel_names(), layout,
                                     electrode_set("ALL")),
                    std::runtime_error);
  }
  SUBCASE("length not a multiple of 128") {
    Subsample sub = random_subsample(1);
    for (auto& chan : sub.data) chan.resize(1000);
    CHECK_THROWS_AS(encode_subsample(sub, deap_channel_names(), layout,
                                     electrode_set("ALL")),
                    std::invalid_argument);
  }
}
