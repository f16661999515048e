#pragma once

#include "urbanmap/raster.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace urbanmap {

enum class UrbanStyle : unsigned { SolidBlock = 1, HatchedBlock = 2, ScatteredUnits = 4, RedOverprint = 8 };
enum class Distractor : unsigned { ContourLines = 1, TextGlyphs = 2, RoadLines = 4, FieldTexture = 8, HueDrift = 16 };

constexpr unsigned kAllStyles = 15;
constexpr unsigned kAllDistractors = 31;

using Rgb = std::array<std::uint8_t, 3>;

struct Palette {
    Rgb paper{236, 228, 208};
    Rgb ink{34, 30, 28};
    Rgb red{196, 44, 40};
    Rgb contour{74, 52, 36};
};

struct SceneSpec {
    int width = 128;
    int height = 128;
    std::uint64_t seed = 0;
    double urban_fraction = 0.15;
    unsigned styles = kAllStyles;            // UrbanStyle bits
    unsigned distractors = kAllDistractors;  // Distractor bits
    double distractor_density = 1.0;         // multiplies distractor counts
    Palette palette;

    void validate() const;
};

struct PlacedElement {
    std::string type;  // style or distractor name
    int x = 0, y = 0, w = 0, h = 0;
    bool urban = false;
};

struct ScenePair {
    Raster image;      // RGB
    BinaryMask truth;  // union of urban footprints
    std::vector<PlacedElement> manifest;
};

ScenePair generate_scene(const SceneSpec& spec);

// "type x y w h" per line.
std::string manifest_text(const std::vector<PlacedElement>& manifest);

struct CorpusSpec {
    int count = 58;
    SceneSpec base;
    std::uint64_t seed = 0;
    bool hard = false;   // distractor-dense scenes plus pure hard negatives
    int tiles = 2;       // adjacent georeferenced tiles for inference tests
    int tile_size = 0;   // 0 -> 3 * base.width
};

// Writes images/, masks/, manifests/ and, when tiles > 0, tiles/ with
// georeferenced RGB tiles and tiles_truth/ with their masks.
void generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

// Scene i of a corpus; exposed so tests can regenerate single scenes.
SceneSpec corpus_scene_spec(const CorpusSpec& spec, int index);

}  // namespace urbanmap
