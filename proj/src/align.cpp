#include "lonecast/align.hpp"

#include <algorithm>
#include <cmath>

#include "lonecast/csv.hpp"
#include "lonecast/error.hpp"

namespace lonecast::align {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

// Mean of series values with time in [t0, t1), or nullopt if none.
std::optional<double> range_mean(const std::vector<features::TimeValue>& vec, double t0,
                                 double t1) {
    auto lo = std::lower_bound(vec.begin(), vec.end(), t0,
                               [](const features::TimeValue& a, double t) { return a.time < t; });
    double sum = 0;
    size_t count = 0;
    for (auto it = lo; it != vec.end() && it->time < t1; ++it) {
        sum += it->value;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / double(count);
}

} // namespace

Binarized binarize(const std::vector<SelfReport>& reports) {
    if (reports.empty()) throw ValidationError("binarize needs at least one report");
    std::vector<double> scores;
    scores.reserve(reports.size());
    for (const auto& r : reports) scores.push_back(r.loneliness);

    Binarized out;
    out.threshold = median_of(std::move(scores));
    out.labels.reserve(reports.size());
    for (const auto& r : reports)
        out.labels.push_back({r.participant, r.time, r.loneliness,
                              r.loneliness > out.threshold ? BinaryLabel::Lonely
                                                           : BinaryLabel::NotLonely});
    return out;
}

WindowChoice select_window(const features::ParticipantSeries& series,
                           const std::vector<LabeledReport>& labels, const TimePolicy& time,
                           const std::vector<int>& candidates) {
    std::vector<int> cand = candidates;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    WindowChoice best;
    bool found = false;
    for (int w : cand) {
        std::vector<double> avgs, scores;
        for (const auto& l : labels) {
            auto it = series.find(l.participant);
            if (it == series.end()) continue;
            int64_t d = day_of(l.time, time);
            auto m = range_mean(it->second, double(day_start(d - w + 1, time)),
                                double(day_start(d + 1, time)));
            if (!m) continue;
            avgs.push_back(*m);
            scores.push_back(l.score);
        }
        if (avgs.size() < 3) continue;
        auto r = pearson(avgs, scores);
        if (!r) continue;
        if (!found || std::fabs(*r) > best.abs_r) {
            best.window_days = w;
            best.abs_r = std::fabs(*r);
            found = true;
        }
    }
    if (!found) return {1, true, 0};
    return best;
}

std::optional<size_t> AlignedFeatureTable::row_of(const ParticipantId& p, int64_t day) const {
    auto it = std::lower_bound(rows.begin(), rows.end(), std::make_pair(p, day),
                               [](const RowKey& r, const std::pair<ParticipantId, int64_t>& k) {
                                   return std::tie(r.participant, r.day) <
                                          std::tie(k.first, k.second);
                               });
    if (it == rows.end() || it->participant != p || it->day != day) return std::nullopt;
    return size_t(it - rows.begin());
}

AlignedFeatureTable align_and_aggregate(const features::FeatureBundle& bundle,
                                        const std::vector<WindowChoice>& choices,
                                        const TimePolicy& time) {
    if (choices.size() != bundle.names.size())
        throw ValidationError("one window choice per feature required");

    AlignedFeatureTable t;
    t.features = bundle.names;
    t.sources = bundle.sources;
    for (const auto& c : choices) {
        t.window_days.push_back(c.window_days);
        t.uninformative.push_back(c.uninformative);
    }

    // Each participant's rows span their observed data across all features.
    std::map<ParticipantId, std::pair<int64_t, int64_t>> span;
    for (const auto& s : bundle.series)
        for (const auto& [p, vec] : s) {
            if (vec.empty()) continue;
            int64_t lo = day_of(vec.front().time, time);
            int64_t hi = day_of(vec.back().time, time);
            auto [it, inserted] = span.try_emplace(p, lo, hi);
            if (!inserted) {
                it->second.first = std::min(it->second.first, lo);
                it->second.second = std::max(it->second.second, hi);
            }
        }

    std::map<ParticipantId, size_t> first_row;
    for (const auto& [p, se] : span) {
        first_row[p] = t.rows.size();
        for (int64_t d = se.first; d <= se.second; ++d) t.rows.push_back({p, d});
    }
    t.cells.assign(t.rows.size(),
                   std::vector<std::optional<double>>(t.features.size(), std::nullopt));

    for (size_t f = 0; f < t.features.size(); ++f) {
        int w = t.window_days[f];
        for (const auto& [p, vec] : bundle.series[f]) {
            auto se = span.at(p);
            int64_t lo = se.first, hi = se.second;
            size_t n_days = size_t(hi - lo + 1);

            // Day buckets padded by w-1 leading days so the window sum is a
            // prefix difference.
            std::vector<double> sum(n_days + size_t(w), 0.0);
            std::vector<long> cnt(n_days + size_t(w), 0);
            for (const auto& tv : vec) {
                int64_t d = day_of(tv.time, time);
                size_t idx = size_t(d - lo + w); // observations satisfy lo <= d <= hi
                sum[idx] += tv.value;
                cnt[idx] += 1;
            }
            for (size_t i = 1; i < sum.size(); ++i) {
                sum[i] += sum[i - 1];
                cnt[i] += cnt[i - 1];
            }
            size_t base = first_row.at(p);
            for (size_t i = 0; i < n_days; ++i) {
                size_t hi_idx = i + size_t(w);
                long c = cnt[hi_idx] - cnt[i];
                if (c > 0) t.cells[base + i][f] = (sum[hi_idx] - sum[i]) / double(c);
            }
        }
    }
    return t;
}

ImputeModel fit_impute(const AlignedFeatureTable& table, const std::vector<bool>& train_mask) {
    if (train_mask.size() != table.rows.size())
        throw ValidationError("train mask length must equal row count");

    size_t nf = table.features.size();
    ImputeModel m;
    m.features = table.features;
    m.participant_mean.resize(nf);
    m.global_mean.resize(nf);
    m.degenerate.assign(nf, false);

    std::vector<std::map<ParticipantId, std::pair<double, long>>> psums(nf);
    std::vector<std::pair<double, long>> gsums(nf, {0.0, 0});
    for (size_t r = 0; r < table.rows.size(); ++r) {
        if (!train_mask[r]) continue;
        for (size_t f = 0; f < nf; ++f) {
            if (!table.cells[r][f]) continue;
            double v = *table.cells[r][f];
            auto& ps = psums[f][table.rows[r].participant];
            ps.first += v;
            ps.second += 1;
            gsums[f].first += v;
            gsums[f].second += 1;
        }
    }
    for (size_t f = 0; f < nf; ++f) {
        for (const auto& [p, sc] : psums[f])
            m.participant_mean[f][p] = sc.first / double(sc.second);
        if (gsums[f].second > 0)
            m.global_mean[f] = gsums[f].first / double(gsums[f].second);
        else
            m.degenerate[f] = true;
    }
    return m;
}

AlignedFeatureTable apply_impute(AlignedFeatureTable table, const ImputeModel& model) {
    if (model.features != table.features)
        throw ValidationError("imputation model fitted on a different feature set");
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const ParticipantId& p = table.rows[r].participant;
        for (size_t f = 0; f < table.features.size(); ++f) {
            if (table.cells[r][f]) continue;
            const auto& pm = model.participant_mean[f];
            auto it = pm.find(p);
            if (it != pm.end())
                table.cells[r][f] = it->second;
            else if (model.global_mean[f])
                table.cells[r][f] = *model.global_mean[f];
            else
                table.cells[r][f] = 0.0;
        }
    }
    return table;
}

WindowSet build_windows(const AlignedFeatureTable& table,
                        const std::vector<LabeledReport>& labels, const TimePolicy& time) {
    WindowSet ws;
    ws.base_features = table.features;
    size_t nf = table.features.size();
    for (int d = 1; d <= kWindowDays; ++d)
        for (const auto& f : table.features)
            ws.flat_names.push_back("day" + std::to_string(d) + "_" + f);

    for (const auto& l : labels) {
        int64_t t = day_of(l.time, time);
        int64_t first_day = t - kWindowDays - kGapDays; // t - 21
        std::optional<size_t> first = table.row_of(l.participant, first_day);
        std::optional<size_t> last = table.row_of(l.participant, first_day + kWindowDays - 1);
        if (!first || !last) continue; // window not fully inside the span

        std::vector<double> row;
        row.reserve(size_t(kWindowDays) * nf);
        for (int d = 0; d < kWindowDays; ++d) {
            const auto& cells = table.cells[*first + size_t(d)];
            for (size_t f = 0; f < nf; ++f) {
                if (!cells[f]) throw ValidationError("build_windows requires an imputed table");
                row.push_back(*cells[f]);
            }
        }
        ws.X.push_back(std::move(row));
        ws.y.push_back(int(l.label));
        ws.participant.push_back(l.participant);
        ws.label_time.push_back(l.time);
    }
    return ws;
}

void write_windows_csv(const WindowSet& ws, const std::string& path) {
    std::vector<std::string> header{"participant", "label_time"};
    header.insert(header.end(), ws.flat_names.begin(), ws.flat_names.end());
    header.push_back("label");
    CsvWriter w(path, header);
    for (size_t i = 0; i < ws.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(header.size());
        row.push_back(ws.participant[i]);
        row.push_back(format_double(ws.label_time[i]));
        for (double v : ws.X[i]) row.push_back(format_double(v));
        row.push_back(ws.y[i] ? "1" : "0");
        w.write_row(row);
    }
    w.close();
}

WindowSet read_windows_csv(const std::string& path) {
    CsvReader r(path);
    if (!r.is_open()) throw IoError("cannot open " + path);
    const auto& h = r.header();
    if (h.size() < 3 || h.front() != "participant" || h[1] != "label_time" ||
        h.back() != "label")
        throw ParseError(path, 1, "header", "not a windows file");

    WindowSet ws;
    ws.flat_names.assign(h.begin() + 2, h.end() - 1);
    const std::string day1 = "day1_";
    for (const auto& name : ws.flat_names)
        if (name.rfind(day1, 0) == 0) ws.base_features.push_back(name.substr(day1.size()));

    std::vector<std::string> f;
    while (r.next(f)) {
        ws.participant.push_back(f[0]);
        ws.label_time.push_back(r.as_double(f, 1));
        std::vector<double> row;
        row.reserve(ws.flat_names.size());
        for (size_t c = 2; c + 1 < f.size(); ++c) row.push_back(r.as_double(f, c));
        ws.X.push_back(std::move(row));
        ws.y.push_back(int(r.as_long(f, f.size() - 1)));
    }
    return ws;
}

} // namespace lonecast::align
