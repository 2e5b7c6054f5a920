#pragma once

#include <string>
#include <vector>

#include "atrfas/tensor.hpp"

namespace atrfas {

enum class Label { live = 0, spoof = 1 };

enum class AttackType { none = 0, print = 1, replay = 2, mask = 3 };

const char* to_string(Label l);
const char* to_string(AttackType a);
Label label_from_string(const std::string& s);
AttackType attack_from_string(const std::string& s);

/// Gate class index of a spoof attack (print 0, replay 1, mask 2).
int attack_class_index(AttackType a);

/// One capture: N0 frames ordered by ascending screen-flash intensity.
struct FlashSequence {
    nd::Tensor frames;               // [N0, C, H, W]
    std::vector<float> flash_levels; // N0 entries, ascending
    std::vector<float> landmarks;    // N0*5*2 (x,y) rows, empty when absent
    Label label = Label::live;
    AttackType attack = AttackType::none;

    int n0() const { return int(flash_levels.size()); }
    bool has_landmarks() const { return !landmarks.empty(); }

    /// Enforces the structural invariants (frame count, ascending levels,
    /// label/attack consistency). Throws ValueError on violation.
    void validate() const;
};

} // namespace atrfas
