#include "train/metrics.hpp"

#include "util/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mepo::train {

Metrics metrics(std::span<const double> pred, std::span<const double> target)
{
    require(pred.size() == target.size(), "metrics: prediction and target sizes differ");
    require(!target.empty(), "metrics: empty input");
    Metrics m;
    m.count = target.size();
    const double n = double(m.count);
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    std::size_t pct_count = 0;
    const double mean = std::accumulate(target.begin(), target.end(), 0.0) / n;
    double dev_sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double e = pred[i] - target[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        dev_sum += std::abs(target[i] - mean);
        if (target[i] != 0.0) {
            pct_sum += std::abs(e / target[i]);
            ++pct_count;
        }
    }
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    m.mape_skipped = m.count - pct_count;
    if (pct_count > 0) {
        m.mape = 100.0 * pct_sum / double(pct_count);
    }
    if (dev_sum > 0.0) {
        m.rae = abs_sum / dev_sum;
    }
    return m;
}

Metrics metrics(const Array& pred, const Array& target)
{
    if (pred.shape() != target.shape()) {
        fail(ErrorKind::Contract, "metrics: shapes " + nc::shape_str(pred.shape()) + " and " +
                                      nc::shape_str(target.shape()) + " differ");
    }
    return metrics(pred.data(), target.data());
}

MetricReport report(const Array& pred, const Array& target, const std::vector<std::size_t>& horizons)
{
    require(pred.rank() == 3, "report: predictions must be [W, N, T_out]");
    MetricReport r;
    r.overall = metrics(pred, target);
    const auto rows = pred.dim(0) * pred.dim(1);
    const auto t_out = pred.dim(2);
    for (auto h : horizons) {
        if (h < 1 || h > t_out) {
            continue;
        }
        std::vector<double> p(rows), y(rows);
        for (std::size_t k = 0; k < rows; ++k) {
            p[k] = pred[k * t_out + h - 1];
            y[k] = target[k * t_out + h - 1];
        }
        r.horizons.push_back({h, metrics(p, y)});
    }
    return r;
}

Summary summarize(std::span<const double> values)
{
    Summary s;
    s.runs = values.size();
    if (values.empty()) {
        return s;
    }
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        const double sd = std::sqrt(ss / double(values.size() - 1));
        s.ci = 1.96 * sd / std::sqrt(double(values.size()));
    }
    return s;
}

namespace {

std::vector<double> ranks(std::span<const double> v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double avg = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size() && a.size() >= 2, "spearman: need two equally long series of length >= 2");
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = double(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

} // namespace mepo::train
