#pragma once

// Integer label space for word-level inference classification:
// entailment=0, contradiction=1, neutral=2, none=3, separator=4,
// plus the three label-setting remappings applied on top of it.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "marking/error.hpp"
#include "marking/markup.hpp"

namespace marking {

using LabelId = std::int8_t;

inline constexpr LabelId kEntailment = 0;
inline constexpr LabelId kContradiction = 1;
inline constexpr LabelId kNeutral = 2;
inline constexpr LabelId kNone = 3;
inline constexpr LabelId kSeparator = 4;
inline constexpr int kNumLabels = 5;

enum class LabelSetting {
    generic,                // 0-1-2
    contradiction_focused,  // 0-1-0
    error_focused,          // 0-1-1
};

inline const char* label_setting_name(LabelSetting s) {
    switch (s) {
        case LabelSetting::generic: return "generic";
        case LabelSetting::contradiction_focused: return "con-focus";
        case LabelSetting::error_focused: return "err-focus";
    }
    return "?";
}

inline LabelSetting parse_label_setting(const std::string& name) {
    if (name == "generic" || name == "0-1-2") return LabelSetting::generic;
    if (name == "con-focus" || name == "0-1-0") return LabelSetting::contradiction_focused;
    if (name == "err-focus" || name == "0-1-1") return LabelSetting::error_focused;
    throw Error(Errc::invalid_label, "unknown label setting '" + name + "'");
}

inline LabelId remap_label(LabelId label, LabelSetting setting) {
    if (label < 0 || label >= kNumLabels)
        throw Error(Errc::invalid_label, "label id " + std::to_string(int(label)) + " out of range");
    if (label != kNeutral) return label;
    switch (setting) {
        case LabelSetting::generic: return kNeutral;
        case LabelSetting::contradiction_focused: return kEntailment;
        case LabelSetting::error_focused: return kContradiction;
    }
    return label;
}

inline std::vector<LabelId> remap_labels(const std::vector<LabelId>& labels, LabelSetting setting) {
    std::vector<LabelId> out;
    out.reserve(labels.size());
    for (LabelId l : labels) out.push_back(remap_label(l, setting));
    return out;
}

// Category labels that remain in play under a setting (3 and 4 are
// passthrough, never categories).
inline std::vector<LabelId> category_set(LabelSetting setting) {
    if (setting == LabelSetting::generic) return {kEntailment, kContradiction, kNeutral};
    return {kEntailment, kContradiction};
}

// Omission maps to neutral on premise positions (the repurposed neutral).
inline LabelId label_of_span_kind(SpanKind kind) {
    switch (kind) {
        case SpanKind::correct: return kEntailment;
        case SpanKind::incorrect: return kContradiction;
        case SpanKind::irrelevant: return kNeutral;
        case SpanKind::omission: return kNeutral;
    }
    throw Error(Errc::invalid_label, "unknown span kind");
}

}  // namespace marking
