#ifndef QND_CSV_IO_HPP
#define QND_CSV_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qnd/model.hpp"
#include "qnd/simulator.hpp"

namespace qnd {

inline constexpr std::string_view kCampaignCsvHeader =
    "cycle_id,step_index,trial_kind,n_atoms,phi1,phi2,phi3";
inline constexpr std::string_view kSweepCsvHeader =
    "d0,eta,delta_j_s,x_sm_sq,x_m_sq,x_s_sq,t_sum,idt_product,region";

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_double(std::string_view s, std::size_t line_no) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw data_error("CSV line " + std::to_string(line_no)
                         + ": bad number '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s, std::size_t line_no) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw data_error("CSV line " + std::to_string(line_no)
                         + ": bad integer '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

inline void write_campaign_csv(const Campaign& campaign, std::ostream& os) {
    os << kCampaignCsvHeader << '\n';
    for (const TrialRecord& r : campaign.records) {
        os << r.cycle_id << ',' << r.step_index << ',' << to_string(r.kind) << ','
           << r.n_atoms_at_step << ',' << format_double(r.phi1) << ','
           << format_double(r.phi2) << ',' << format_double(r.phi3) << '\n';
    }
}

inline void write_campaign_csv(const Campaign& campaign, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error("cannot open for writing: " + path);
    write_campaign_csv(campaign, os);
    if (!os) throw data_error("write failed: " + path);
}

// Strict reader: exact header (unknown extra columns rejected), per-row
// validation with line numbers, NaN/Inf rejected, readout-only rows must
// have n_atoms = 0.
inline Campaign read_campaign_csv(std::istream& is) {
    Campaign out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw data_error("campaign CSV: missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCampaignCsvHeader)
        throw data_error("campaign CSV: schema error, header must be exactly '"
                         + std::string(kCampaignCsvHeader) + "'");
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv(line);
        if (fields.size() != 7)
            throw data_error("CSV line " + std::to_string(line_no)
                             + ": expected 7 fields, got " + std::to_string(fields.size()));
        TrialRecord r;
        r.cycle_id = detail::parse_int(fields[0], line_no);
        r.step_index = static_cast<int>(detail::parse_int(fields[1], line_no));
        if (fields[2] == "atoms") r.kind = TrialKind::atoms;
        else if (fields[2] == "ro") r.kind = TrialKind::readout_only;
        else
            throw data_error("CSV line " + std::to_string(line_no)
                             + ": trial_kind must be 'atoms' or 'ro'");
        r.n_atoms_at_step = detail::parse_int(fields[3], line_no);
        r.phi1 = detail::parse_double(fields[4], line_no);
        r.phi2 = detail::parse_double(fields[5], line_no);
        r.phi3 = detail::parse_double(fields[6], line_no);
        if (!std::isfinite(r.phi1) || !std::isfinite(r.phi2) || !std::isfinite(r.phi3))
            throw data_error("CSV line " + std::to_string(line_no)
                             + ": non-finite phi value");
        if (r.kind == TrialKind::readout_only && r.n_atoms_at_step != 0)
            throw data_error("CSV line " + std::to_string(line_no)
                             + ": readout-only row must have n_atoms = 0");
        if (r.kind == TrialKind::atoms && r.n_atoms_at_step < 1)
            throw data_error("CSV line " + std::to_string(line_no)
                             + ": atoms row must have n_atoms >= 1");
        out.records.push_back(r);
    }
    return out;
}

inline Campaign read_campaign_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open: " + path);
    return read_campaign_csv(is);
}

inline void write_sweep_csv(const std::vector<ModelPoint>& points, std::ostream& os) {
    os << kSweepCsvHeader << '\n';
    for (const ModelPoint& p : points) {
        os << format_double(p.d0) << ',' << format_double(p.eta) << ','
           << format_double(p.delta_j_s) << ',';
        if (p.singular) {
            os << ",,,,," << "error:" << p.error << '\n';
            continue;
        }
        os << format_double(p.x_sm_sq) << ',' << format_double(p.x_m_sq) << ','
           << format_double(p.x_s_sq) << ',' << format_double(p.t_sum) << ','
           << format_double(p.idt_product) << ',' << to_string(p.region) << '\n';
    }
}

inline void write_sweep_csv(const std::vector<ModelPoint>& points, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error("cannot open for writing: " + path);
    write_sweep_csv(points, os);
    if (!os) throw data_error("write failed: " + path);
}

}  // namespace qnd

#endif  // QND_CSV_IO_HPP
