#pragma once

#include <string>
#include <vector>

#include "atrfas/synthgen.hpp"
#include "atrfas/types.hpp"

namespace atrfas {

inline constexpr const char* kDatasetMagic = "ATRFAS-DS v1";

/// One manifest row of the on-disk container.
struct SampleRecord {
    int id = 0;
    Label label = Label::live;
    AttackType attack = AttackType::none;
    int cls_label = 0;
    std::vector<float> gate_label;
    std::string file; // relative to the split directory
    uint64_t off_frames = 0, off_flash = 0, off_depth = 0;
};

/// In-memory view of one split directory, eagerly loaded.
struct Dataset {
    std::string dir;
    int n0 = 0, height = 0, width = 0, label_h = 0, label_w = 0;
    std::vector<SampleRecord> records;
    std::vector<FlashSequence> sequences;
    std::vector<nd::Tensor> depth_labels;

    size_t size() const { return records.size(); }

    /// Shallow subset (tensor handles shared with the parent).
    Dataset subset(std::span<const int> indices) const;

    static Dataset load(const std::string& dir);
};

/// Writes manifest.json plus one tensor file per sample (frames, flash
/// levels, depth label back to back; byte offsets recorded in the manifest).
void write_dataset_split(const std::string& dir, const GenConfig& cfg,
                         std::span<const LabeledSample> samples);

} // namespace atrfas
