// fixtures.hpp -- deterministic synthetic datasets written in the archive
// on-disk layouts (UCR tsv, UEA ts, PTB-XL wfdb). Shapes, class counts and
// split sizes mirror the corresponding public datasets so loaders, split
// arithmetic and protocols can be exercised without the real archives.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace vibcreg::fixtures {

// UCR-layout: TwoPatterns, ECG5000, Wafer, ShapesAll, GunPoint, Crop.
// UEA-layout: BasicMotions. PTB-XL-layout: "ptbxl" (desk-scale record count).
std::vector<std::string> available_fixtures();

// Generates <name> under root (idempotent; rewrites the files).
void make_fixture(const std::string& name, const std::filesystem::path& root,
                  std::uint64_t seed = 7);

void make_all(const std::filesystem::path& root, std::uint64_t seed = 7);

}  // namespace vibcreg::fixtures
