#include "tempshift/report.hpp"

#include "tempshift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace tempshift {

using nlohmann::json;

namespace {

// NaN (failed rows) has no JSON number form.
json number(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_of(const json& v) {
    return v.is_null() ? std::nan("") : v.get<double>();
}

std::string fixed(double v, int digits = 3) {
    if (!std::isfinite(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string full(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

bool same(double a, double b) {
    return a == b || (std::isnan(a) && std::isnan(b));
}

} // namespace

bool MetricRow::operator==(const MetricRow& o) const {
    return row == o.row && column == o.column && family == o.family && fusion == o.fusion &&
           loss == o.loss && modalities == o.modalities && input_len == o.input_len &&
           shift == o.shift && same(roc, o.roc) && same(pr, o.pr) && same(no_skill, o.no_skill) &&
           frames == o.frames && positives == o.positives && same(final_loss, o.final_loss) &&
           checkpoint == o.checkpoint && status == o.status;
}

std::vector<std::string> Report::row_labels() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (std::find(out.begin(), out.end(), r.row) == out.end()) out.push_back(r.row);
    }
    return out;
}

std::vector<std::string> Report::column_labels() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (std::find(out.begin(), out.end(), r.column) == out.end()) out.push_back(r.column);
    }
    return out;
}

const MetricRow* Report::find(const std::string& row, const std::string& column) const {
    for (const auto& r : rows) {
        if (r.row == row && r.column == column) return &r;
    }
    return nullptr;
}

json Report::to_json() const {
    json j;
    j["kind"] = kind;
    j["config"] = config;
    j["config_hash"] = config_hash;
    j["dataset_hash"] = dataset_hash;
    j["warnings"] = warnings;
    json rs = json::array();
    for (const auto& r : rows) {
        rs.push_back({{"row", r.row},
                      {"column", r.column},
                      {"family", r.family},
                      {"fusion", r.fusion},
                      {"loss", r.loss},
                      {"modalities", r.modalities},
                      {"input_len", r.input_len},
                      {"shift", r.shift},
                      {"roc_auc", number(r.roc)},
                      {"pr_auc", number(r.pr)},
                      {"no_skill_pr", number(r.no_skill)},
                      {"frames", r.frames},
                      {"positives", r.positives},
                      {"final_loss", number(r.final_loss)},
                      {"checkpoint", r.checkpoint},
                      {"status", r.status}});
    }
    j["rows"] = rs;
    return j;
}

Report Report::from_json(const json& j) {
    try {
        Report rep;
        rep.kind = j.at("kind").get<std::string>();
        rep.config = j.at("config");
        rep.config_hash = j.at("config_hash").get<std::string>();
        rep.dataset_hash = j.at("dataset_hash").get<std::string>();
        rep.warnings = j.at("warnings").get<std::vector<std::string>>();
        for (const auto& r : j.at("rows")) {
            MetricRow m;
            m.row = r.at("row").get<std::string>();
            m.column = r.at("column").get<std::string>();
            m.family = r.at("family").get<std::string>();
            m.fusion = r.at("fusion").get<std::string>();
            m.loss = r.at("loss").get<std::string>();
            m.modalities = r.at("modalities").get<std::vector<std::string>>();
            m.input_len = r.at("input_len").get<int>();
            m.shift = r.at("shift").get<int>();
            m.roc = number_of(r.at("roc_auc"));
            m.pr = number_of(r.at("pr_auc"));
            m.no_skill = number_of(r.at("no_skill_pr"));
            m.frames = r.at("frames").get<std::size_t>();
            m.positives = r.at("positives").get<std::size_t>();
            m.final_loss = number_of(r.at("final_loss"));
            m.checkpoint = r.at("checkpoint").get<std::string>();
            m.status = r.at("status").get<std::string>();
            rep.rows.push_back(std::move(m));
        }
        return rep;
    } catch (const json::exception& e) {
        throw DataError(std::string("report: malformed document: ") + e.what());
    }
}

std::string Report::to_csv() const {
    std::ostringstream os;
    os << "row,column,family,fusion,loss,modalities,input_len,shift,roc_auc,pr_auc,no_skill_pr,"
          "frames,positives,final_loss,status\n";
    for (const auto& r : rows) {
        std::string mods;
        for (const auto& m : r.modalities) mods += (mods.empty() ? "" : "+") + m;
        os << csv_field(r.row) << ',' << csv_field(r.column) << ',' << r.family << ','
           << r.fusion << ',' << csv_field(r.loss) << ',' << csv_field(mods) << ',' << r.input_len
           << ',' << r.shift << ',' << full(r.roc) << ',' << full(r.pr) << ','
           << full(r.no_skill) << ',' << r.frames << ',' << r.positives << ','
           << full(r.final_loss) << ',' << csv_field(r.status) << '\n';
    }
    return os.str();
}

std::string Report::to_text() const {
    const auto rl = row_labels();
    const auto cl = column_labels();
    std::size_t w0 = 8;
    for (const auto& r : rl) w0 = std::max(w0, r.size());
    std::size_t wc = 15;
    for (const auto& c : cl) wc = std::max(wc, c.size());

    std::ostringstream os;
    os << kind << "  (config " << config_hash.substr(0, 12) << ", data "
       << dataset_hash.substr(0, 12) << ")\n";
    os << pad("", w0 + 2);
    for (const auto& c : cl) os << pad(c, wc + 2);
    os << '\n' << pad("", w0 + 2);
    for (std::size_t i = 0; i < cl.size(); ++i) os << pad("ROC / PR", wc + 2);
    os << '\n';
    for (const auto& r : rl) {
        os << pad(r, w0 + 2);
        for (const auto& c : cl) {
            const MetricRow* m = find(r, c);
            std::string cell = "";
            if (m) cell = m->ok() ? fixed(m->roc) + " / " + fixed(m->pr) : "failed";
            os << pad(cell, wc + 2);
        }
        os << '\n';
    }
    os << pad("No Skill", w0 + 2);
    for (const auto& c : cl) {
        double ns = std::nan("");
        for (const auto& m : rows) {
            if (m.column == c && m.ok()) {
                ns = m.no_skill;
                break;
            }
        }
        os << pad("0.500 / " + fixed(ns), wc + 2);
    }
    os << '\n';
    for (const auto& m : rows) {
        if (!m.ok()) os << "failed: " << m.row << " / " << m.column << ": " << m.status << '\n';
    }
    for (const auto& w : warnings) os << "warning: " << w << '\n';
    return os.str();
}

} // namespace tempshift
