#include "urbanmap/evalmetrics.hpp"

#include "urbanmap/error.hpp"
#include "urbanmap/optimloss.hpp"

namespace urbanmap {

ConfusionCounts confuse(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    if (pred.size() != truth.size()) fail(ErrorCode::Argument, "prediction and truth differ in size");
    // Index by (pred, truth) pairs: 0 = tn, 1 = fn, 2 = fp, 3 = tp.
    std::uint64_t bins[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < pred.size(); ++i) bins[(pred[i] != 0) * 2 + (truth[i] != 0)] += 1;
    return {bins[3], bins[2], bins[1], bins[0]};
}

ConfusionCounts confuse(const BinaryMask& pred, const BinaryMask& truth) {
    if (pred.width != truth.width || pred.height != truth.height)
        fail(ErrorCode::Argument, "prediction is " + std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                                      " but truth is " + std::to_string(truth.width) + "x" +
                                      std::to_string(truth.height));
    return confuse(std::span<const std::uint8_t>(pred.data), std::span<const std::uint8_t>(truth.data));
}

MetricReport metrics(const ConfusionCounts& c) {
    if (c.total() == 0) fail(ErrorCode::Argument, "metrics need at least one compared pixel");
    MetricReport r;
    r.counts = c;
    const auto tp = static_cast<double>(c.tp);
    const auto fp = static_cast<double>(c.fp);
    const auto fn = static_cast<double>(c.fn);
    const auto tn = static_cast<double>(c.tn);
    r.overall_accuracy = (tp + tn) / static_cast<double>(c.total());
    if (c.tp + c.fp + c.fn == 0) {
        r.precision = r.recall = r.f1 = r.iou = 1.0;
        return r;
    }
    r.precision = c.tp + c.fp == 0 ? 0.0 : tp / (tp + fp);
    r.recall = c.tp + c.fn == 0 ? 0.0 : tp / (tp + fn);
    r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.iou = tp / (tp + fp + fn);
    return r;
}

MetricReport evaluate_scene(const BinaryMask& pred, const BinaryMask& truth) {
    return metrics(confuse(pred, truth));
}

CorpusReport aggregate(std::span<const MetricReport> scenes) {
    if (scenes.empty()) fail(ErrorCode::Argument, "no scenes to aggregate");
    CorpusReport out;
    ConfusionCounts pooled;
    for (const auto& s : scenes) {
        pooled += s.counts;
        out.macro_precision += s.precision;
        out.macro_recall += s.recall;
        out.macro_f1 += s.f1;
        out.macro_iou += s.iou;
        out.macro_oa += s.overall_accuracy;
    }
    const auto n = static_cast<double>(scenes.size());
    out.macro_precision /= n;
    out.macro_recall /= n;
    out.macro_f1 /= n;
    out.macro_iou /= n;
    out.macro_oa /= n;
    out.pooled = metrics(pooled);
    out.scenes = scenes.size();
    return out;
}

std::string report_csv_header() { return "scene,tp,fp,fn,tn,precision,recall,f1,iou,oa"; }

std::string report_csv_row(const std::string& scene, const MetricReport& r) {
    return scene + ',' + std::to_string(r.counts.tp) + ',' + std::to_string(r.counts.fp) + ',' +
           std::to_string(r.counts.fn) + ',' + std::to_string(r.counts.tn) + ',' + format_number(r.precision) + ',' +
           format_number(r.recall) + ',' + format_number(r.f1) + ',' + format_number(r.iou) + ',' +
           format_number(r.overall_accuracy);
}

}  // namespace urbanmap
