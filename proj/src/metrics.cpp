#include "iifcn/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace iifcn {

Tensor threshold_mask(const Tensor& prob, real t) {
    if (t < 0 || t > 1) throw std::invalid_argument("threshold_mask: t must lie in [0, 1]");
    Tensor out(prob.shape());
    for (int64_t i = 0; i < prob.numel(); ++i) out[i] = prob[i] > t ? 1.0 : 0.0;
    return out;
}

namespace {

bool positive(real v, const char* who) {
    if (v == 0.0) return false;
    if (v == 1.0 || v == 255.0) return true;
    throw std::invalid_argument(std::string(who) + ": masks must hold only 0, 1, or 255");
}

real ratio(int64_t num, int64_t den, bool empty_agree) {
    if (den == 0) return empty_agree ? 1.0 : 0.0;
    return real(num) / real(den);
}

} // namespace

MetricReport evaluate(const Tensor& pred, const Tensor& gt) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("evaluate: shapes differ");
    MetricReport r;
    for (int64_t i = 0; i < pred.numel(); ++i) {
        bool p = positive(pred[i], "evaluate");
        bool g = positive(gt[i], "evaluate");
        if (p && g) r.tp++;
        else if (p && !g) r.fp++;
        else if (!p && g) r.fn++;
        else r.tn++;
    }
    r.sensitivity = ratio(r.tp, r.tp + r.fn, r.fp == 0);
    r.specificity = ratio(r.tn, r.tn + r.fp, r.fn == 0);
    r.accuracy = real(r.tp + r.tn) / real(pred.numel());
    r.dice = ratio(2 * r.tp, 2 * r.tp + r.fp + r.fn, true); // denom 0 means both empty
    r.jaccard = ratio(r.tp, r.tp + r.fp + r.fn, true);
    return r;
}

MetricReport dataset_mean(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("dataset_mean: no reports");
    MetricReport m;
    for (const auto& r : reports) {
        m.tp += r.tp;
        m.fp += r.fp;
        m.tn += r.tn;
        m.fn += r.fn;
        m.sensitivity += r.sensitivity;
        m.specificity += r.specificity;
        m.accuracy += r.accuracy;
        m.dice += r.dice;
        m.jaccard += r.jaccard;
    }
    real k = real(reports.size());
    m.sensitivity /= k;
    m.specificity /= k;
    m.accuracy /= k;
    m.dice /= k;
    m.jaccard /= k;
    return m;
}

std::string metric_csv_header() {
    return "image_id,tp,fp,tn,fn,sensitivity,specificity,accuracy,dice,jaccard";
}

std::string metric_csv_line(const std::string& image_id, const MetricReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%lld,%.10g,%.10g,%.10g,%.10g,%.10g",
                  image_id.c_str(), (long long)r.tp, (long long)r.fp, (long long)r.tn,
                  (long long)r.fn, r.sensitivity, r.specificity, r.accuracy, r.dice, r.jaccard);
    return buf;
}

} // namespace iifcn
