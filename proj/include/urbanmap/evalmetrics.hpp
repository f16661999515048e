#pragma once

#include "urbanmap/raster.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace urbanmap {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
    double overall_accuracy = 0.0;
    ConfusionCounts counts;
};

// Urban (1) is the positive class.
ConfusionCounts confuse(const BinaryMask& pred, const BinaryMask& truth);
ConfusionCounts confuse(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

// With no positives anywhere (tp + fp + fn == 0) precision, recall, F1 and IoU
// are 1. Otherwise an empty denominator yields 0.
MetricReport metrics(const ConfusionCounts& c);

MetricReport evaluate_scene(const BinaryMask& pred, const BinaryMask& truth);

// Pooled metrics over all pixels plus the unweighted mean of per-scene values.
struct CorpusReport {
    MetricReport pooled;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double macro_iou = 0.0;
    double macro_oa = 0.0;
    std::size_t scenes = 0;
};

CorpusReport aggregate(std::span<const MetricReport> scenes);

std::string report_csv_header();  // "scene,tp,fp,fn,tn,precision,recall,f1,iou,oa"
std::string report_csv_row(const std::string& scene, const MetricReport& r);

}  // namespace urbanmap
