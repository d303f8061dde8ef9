#include "lonecast/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lonecast/csv.hpp"
#include "lonecast/error.hpp"

namespace fs = std::filesystem;

namespace lonecast {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::ScreenOn: return "screen_on";
        case EventKind::ScreenOff: return "screen_off";
        case EventKind::ScreenLock: return "screen_lock";
        case EventKind::ScreenUnlock: return "screen_unlock";
        case EventKind::BatteryPlugin: return "battery_plugin";
        case EventKind::Call: return "call";
        case EventKind::Message: return "message";
        case EventKind::Notification: return "notification";
    }
    return "?";
}

std::optional<EventKind> parse_event_kind(const std::string& s) {
    static const std::pair<const char*, EventKind> table[] = {
        {"screen_on", EventKind::ScreenOn},       {"screen_off", EventKind::ScreenOff},
        {"screen_lock", EventKind::ScreenLock},   {"screen_unlock", EventKind::ScreenUnlock},
        {"battery_plugin", EventKind::BatteryPlugin}, {"call", EventKind::Call},
        {"message", EventKind::Message},          {"notification", EventKind::Notification},
    };
    for (auto& [name, kind] : table)
        if (s == name) return kind;
    return std::nullopt;
}

namespace {

void require_participant(const std::string& p, const std::string& file, size_t line) {
    if (p.empty()) throw ParseError(file, line, "participant", "must be non-empty");
}

std::vector<SelfReport> read_self_reports(const std::string& path) {
    std::vector<SelfReport> out;
    CsvReader r(path);
    if (!r.is_open()) return out;
    size_t cp = r.col("participant"), ct = r.col("time"), cl = r.col("loneliness");
    std::vector<std::string> f;
    while (r.next(f)) {
        SelfReport s;
        s.participant = f[cp];
        require_participant(s.participant, path, r.line_number());
        s.time = r.as_double(f, ct);
        s.loneliness = r.as_double(f, cl);
        if (s.loneliness < 0 || s.loneliness > 100)
            throw ParseError(path, r.line_number(), "loneliness",
                             "out of range [0,100]: " + f[cl]);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DailyScore> read_daily_scores(const std::string& path) {
    std::vector<DailyScore> out;
    CsvReader r(path);
    if (!r.is_open()) return out;
    size_t cp = r.col("participant"), cd = r.col("date"), cn = r.col("name"),
           cv = r.col("value");
    std::vector<std::string> f;
    while (r.next(f)) {
        DailyScore s;
        s.participant = f[cp];
        require_participant(s.participant, path, r.line_number());
        if (!parse_day(f[cd], s.day))
            throw ParseError(path, r.line_number(), "date", "not YYYY-MM-DD: '" + f[cd] + "'");
        s.name = f[cn];
        if (s.name.empty())
            throw ParseError(path, r.line_number(), "name", "must be non-empty");
        s.value = r.as_double(f, cv);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<PhoneEvent> read_phone_events(const std::string& path) {
    std::vector<PhoneEvent> out;
    CsvReader r(path);
    if (!r.is_open()) return out;
    size_t cp = r.col("participant"), ct = r.col("time"), ck = r.col("kind"),
           cd = r.col("duration"), cc = r.col("category");
    std::vector<std::string> f;
    while (r.next(f)) {
        PhoneEvent e;
        e.participant = f[cp];
        require_participant(e.participant, path, r.line_number());
        e.time = r.as_double(f, ct);
        auto kind = parse_event_kind(f[ck]);
        if (!kind)
            throw ParseError(path, r.line_number(), "kind", "unknown kind: '" + f[ck] + "'");
        e.kind = *kind;
        bool has_duration = !f[cd].empty();
        if (has_duration != (e.kind == EventKind::Call))
            throw ParseError(path, r.line_number(), "duration",
                             "present iff kind is call");
        if (has_duration) {
            e.duration = r.as_double(f, cd);
            if (*e.duration < 0)
                throw ParseError(path, r.line_number(), "duration", "negative: " + f[cd]);
        }
        bool has_category = !f[cc].empty();
        bool allows_category =
            e.kind == EventKind::Message || e.kind == EventKind::Notification;
        if (has_category && !allows_category)
            throw ParseError(path, r.line_number(), "category",
                             "only messages and notifications carry a category");
        if (has_category) e.category = f[cc];
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<LocationFix> read_location(const std::string& path) {
    std::vector<LocationFix> out;
    CsvReader r(path);
    if (!r.is_open()) return out;
    size_t cp = r.col("participant"), ct = r.col("time"), cla = r.col("lat"),
           clo = r.col("lon"), cs = r.col("speed");
    std::vector<std::string> f;
    while (r.next(f)) {
        LocationFix x;
        x.participant = f[cp];
        require_participant(x.participant, path, r.line_number());
        x.time = r.as_double(f, ct);
        x.latitude = r.as_double(f, cla);
        x.longitude = r.as_double(f, clo);
        if (x.latitude < -90 || x.latitude > 90)
            throw ParseError(path, r.line_number(), "lat", "out of [-90,90]: " + f[cla]);
        if (x.longitude < -180 || x.longitude > 180)
            throw ParseError(path, r.line_number(), "lon", "out of [-180,180]: " + f[clo]);
        if (!f[cs].empty()) {
            x.speed = r.as_double(f, cs);
            if (*x.speed < 0)
                throw ParseError(path, r.line_number(), "speed", "negative: " + f[cs]);
        }
        out.push_back(std::move(x));
    }
    return out;
}

// --- PPG JSONL ---------------------------------------------------------
//
// One object per line: {"participant":"...","start":t,"sample_rate":r,
// "samples":[...]}. Hand-rolled parser: segment lines run to hundreds of
// kilobytes, and a general-purpose DOM parse per line dominates ingest
// time at cohort scale.

struct JsonCursor {
    const char* p;
    const char* end;
    const std::string& file;
    size_t line;

    void skip_ws() {
        while (p < end && (*p == ' ' || *p == '\t')) ++p;
    }
    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw ParseError(file, line, field, msg);
    }
    void expect(char c, const char* field) {
        skip_ws();
        if (p >= end || *p != c) fail(field, std::string("expected '") + c + "'");
        ++p;
    }
    bool peek_is(char c) {
        skip_ws();
        return p < end && *p == c;
    }
    std::string parse_string(const char* field) {
        expect('"', field);
        std::string s;
        while (p < end && *p != '"') {
            if (*p == '\\') {
                ++p;
                if (p >= end) fail(field, "truncated escape");
                switch (*p) {
                    case '"': s += '"'; break;
                    case '\\': s += '\\'; break;
                    case '/': s += '/'; break;
                    case 'n': s += '\n'; break;
                    case 't': s += '\t'; break;
                    default: fail(field, "unsupported escape");
                }
                ++p;
            } else {
                s += *p++;
            }
        }
        if (p >= end) fail(field, "unterminated string");
        ++p;
        return s;
    }
    double parse_number(const char* field) {
        skip_ws();
        double v = 0;
        auto res = std::from_chars(p, end, v);
        if (res.ec != std::errc()) fail(field, "not a number");
        p = res.ptr;
        return v;
    }
};

PpgSegment parse_ppg_line(const std::string& lineText, const std::string& file, size_t line) {
    JsonCursor c{lineText.data(), lineText.data() + lineText.size(), file, line};
    PpgSegment seg;
    bool have_participant = false, have_start = false, have_rate = false, have_samples = false;
    c.expect('{', "*");
    if (!c.peek_is('}')) {
        for (;;) {
            std::string key = c.parse_string("*");
            c.expect(':', key.c_str());
            if (key == "participant") {
                seg.participant = c.parse_string("participant");
                have_participant = true;
            } else if (key == "start") {
                seg.start = c.parse_number("start");
                have_start = true;
            } else if (key == "sample_rate") {
                seg.sample_rate = c.parse_number("sample_rate");
                have_rate = true;
            } else if (key == "samples") {
                c.expect('[', "samples");
                if (!c.peek_is(']')) {
                    for (;;) {
                        seg.samples.push_back(c.parse_number("samples"));
                        if (c.peek_is(']')) break;
                        c.expect(',', "samples");
                    }
                }
                c.expect(']', "samples");
                have_samples = true;
            } else {
                c.fail(key, "unknown key");
            }
            if (c.peek_is('}')) break;
            c.expect(',', "*");
        }
    }
    c.expect('}', "*");
    if (!have_participant) c.fail("participant", "missing");
    if (!have_start) c.fail("start", "missing");
    if (!have_rate) c.fail("sample_rate", "missing");
    if (!have_samples) c.fail("samples", "missing");
    if (seg.participant.empty()) c.fail("participant", "must be non-empty");
    if (!(seg.sample_rate > 0)) c.fail("sample_rate", "must be > 0");
    if (seg.samples.empty()) c.fail("samples", "must be non-empty");
    return seg;
}

} // namespace

void for_each_ppg_segment(const std::string& jsonl_path,
                          const std::function<void(PpgSegment&&)>& fn) {
    std::ifstream in(jsonl_path, std::ios::binary);
    if (!in) return; // missing file == empty stream
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(parse_ppg_line(line, jsonl_path, lineno));
    }
}

void append_ppg_jsonl(std::ostream& out, const PpgSegment& seg) {
    out << "{\"participant\":\"" << seg.participant << "\",\"start\":"
        << format_double(seg.start) << ",\"sample_rate\":" << format_double(seg.sample_rate)
        << ",\"samples\":[";
    char buf[32];
    for (size_t i = 0; i < seg.samples.size(); ++i) {
        auto res = std::to_chars(buf, buf + sizeof buf, seg.samples[i]);
        if (i) out.put(',');
        out.write(buf, res.ptr - buf);
    }
    out << "]}\n";
}

namespace {

template <class T, class Less, class Eq>
size_t sort_dedupe(std::vector<T>& v, Less less, Eq eq) {
    std::stable_sort(v.begin(), v.end(), less);
    size_t before = v.size();
    v.erase(std::unique(v.begin(), v.end(), eq), v.end());
    return before - v.size();
}

} // namespace

CohortStreams ingest_cohort(const std::string& root, const IngestOptions& opts) {
    CohortStreams s;
    fs::path base(root);

    s.self_reports = read_self_reports((base / cohort_files::kSelfReports).string());
    s.daily_scores = read_daily_scores((base / cohort_files::kDailyScores).string());
    s.phone_events = read_phone_events((base / cohort_files::kPhoneEvents).string());
    s.location_fixes = read_location((base / cohort_files::kLocation).string());
    if (opts.load_ppg) {
        for_each_ppg_segment((base / cohort_files::kPpgSegments).string(),
                             [&](PpgSegment&& seg) { s.ppg.push_back(std::move(seg)); });
    }

    s.warnings.duplicate_self_reports = sort_dedupe(
        s.self_reports,
        [](const SelfReport& a, const SelfReport& b) {
            return std::tie(a.participant, a.time, a.loneliness) <
                   std::tie(b.participant, b.time, b.loneliness);
        },
        [](const SelfReport& a, const SelfReport& b) {
            return a.participant == b.participant && a.time == b.time &&
                   a.loneliness == b.loneliness;
        });

    size_t n_scores_before = s.daily_scores.size();
    std::stable_sort(s.daily_scores.begin(), s.daily_scores.end(),
                     [](const DailyScore& a, const DailyScore& b) {
                         return std::tie(a.participant, a.day, a.name, a.value) <
                                std::tie(b.participant, b.day, b.name, b.value);
                     });
    // One value per (participant, day, name): identical duplicates collapse,
    // conflicting values are a validation error.
    {
        std::vector<DailyScore> unique;
        unique.reserve(s.daily_scores.size());
        for (auto& d : s.daily_scores) {
            if (!unique.empty()) {
                const DailyScore& u = unique.back();
                if (u.participant == d.participant && u.day == d.day && u.name == d.name) {
                    if (u.value == d.value) continue;
                    throw ValidationError("conflicting daily score for (" + d.participant +
                                          ", " + format_day(d.day) + ", " + d.name + ")");
                }
            }
            unique.push_back(std::move(d));
        }
        s.daily_scores = std::move(unique);
    }
    s.warnings.duplicate_daily_scores = n_scores_before - s.daily_scores.size();

    s.warnings.duplicate_phone_events = sort_dedupe(
        s.phone_events,
        [](const PhoneEvent& a, const PhoneEvent& b) {
            return std::tie(a.participant, a.time, a.kind) < std::tie(b.participant, b.time, b.kind);
        },
        [](const PhoneEvent& a, const PhoneEvent& b) {
            return a.participant == b.participant && a.time == b.time && a.kind == b.kind;
        });

    s.warnings.duplicate_location_fixes = sort_dedupe(
        s.location_fixes,
        [](const LocationFix& a, const LocationFix& b) {
            return std::tie(a.participant, a.time, a.latitude, a.longitude) <
                   std::tie(b.participant, b.time, b.latitude, b.longitude);
        },
        [](const LocationFix& a, const LocationFix& b) {
            return a.participant == b.participant && a.time == b.time &&
                   a.latitude == b.latitude && a.longitude == b.longitude &&
                   a.speed == b.speed;
        });

    s.warnings.duplicate_ppg_segments = sort_dedupe(
        s.ppg,
        [](const PpgSegment& a, const PpgSegment& b) {
            return std::tie(a.participant, a.start) < std::tie(b.participant, b.start);
        },
        [](const PpgSegment& a, const PpgSegment& b) {
            return a.participant == b.participant && a.start == b.start &&
                   a.sample_rate == b.sample_rate && a.samples == b.samples;
        });

    std::set<ParticipantId> ids;
    for (const auto& r : s.self_reports) ids.insert(r.participant);
    for (const auto& r : s.daily_scores) ids.insert(r.participant);
    for (const auto& r : s.phone_events) ids.insert(r.participant);
    for (const auto& r : s.location_fixes) ids.insert(r.participant);
    for (const auto& r : s.ppg) ids.insert(r.participant);
    if (!opts.load_ppg) {
        // still need PPG participants in the roster
        for_each_ppg_segment((base / cohort_files::kPpgSegments).string(),
                             [&](PpgSegment&& seg) { ids.insert(seg.participant); });
    }
    s.participants.assign(ids.begin(), ids.end());
    return s;
}

void write_cohort(const CohortStreams& streams, const std::string& dir) {
    fs::create_directories(dir);
    fs::path base(dir);

    {
        CsvWriter w((base / cohort_files::kSelfReports).string(),
                    {"participant", "time", "loneliness"});
        for (const auto& r : streams.self_reports)
            w.write_row({r.participant, format_double(r.time), format_double(r.loneliness)});
        w.close();
    }
    {
        CsvWriter w((base / cohort_files::kDailyScores).string(),
                    {"participant", "date", "name", "value"});
        for (const auto& r : streams.daily_scores)
            w.write_row({r.participant, format_day(r.day), r.name, format_double(r.value)});
        w.close();
    }
    {
        CsvWriter w((base / cohort_files::kPhoneEvents).string(),
                    {"participant", "time", "kind", "duration", "category"});
        for (const auto& r : streams.phone_events)
            w.write_row({r.participant, format_double(r.time), event_kind_name(r.kind),
                         r.duration ? format_double(*r.duration) : "",
                         r.category ? *r.category : ""});
        w.close();
    }
    {
        CsvWriter w((base / cohort_files::kLocation).string(),
                    {"participant", "time", "lat", "lon", "speed"});
        for (const auto& r : streams.location_fixes)
            w.write_row({r.participant, format_double(r.time), format_double(r.latitude),
                         format_double(r.longitude),
                         r.speed ? format_double(*r.speed) : ""});
        w.close();
    }
    {
        std::ofstream out((base / cohort_files::kPpgSegments).string(), std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " +
                                (base / cohort_files::kPpgSegments).string());
        for (const auto& seg : streams.ppg) append_ppg_jsonl(out, seg);
        out.close();
        if (out.fail())
            throw IoError("write failed: " + (base / cohort_files::kPpgSegments).string());
    }
}

CohortSummary cohort_summary(const CohortStreams& streams, const TimePolicy& tz) {
    std::map<ParticipantId, ParticipantSummary> rows;
    for (const auto& p : streams.participants) rows[p].participant = p;

    auto touch = [&](const ParticipantId& p, double t) {
        auto& r = rows[p];
        if (!r.t_min || t < *r.t_min) r.t_min = t;
        if (!r.t_max || t > *r.t_max) r.t_max = t;
    };
    for (const auto& r : streams.self_reports) {
        rows[r.participant].n_self_reports++;
        touch(r.participant, r.time);
    }
    for (const auto& r : streams.daily_scores) {
        rows[r.participant].n_daily_scores++;
        touch(r.participant, day_start(r.day, tz));
    }
    for (const auto& r : streams.phone_events) {
        rows[r.participant].n_phone_events++;
        touch(r.participant, r.time);
    }
    for (const auto& r : streams.location_fixes) {
        rows[r.participant].n_location_fixes++;
        touch(r.participant, r.time);
    }
    for (const auto& r : streams.ppg) {
        rows[r.participant].n_ppg++;
        touch(r.participant, r.start);
    }

    CohortSummary out;
    for (auto& [_, row] : rows) out.rows.push_back(std::move(row));
    return out;
}

} // namespace lonecast
